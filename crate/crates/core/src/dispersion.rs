//! Linear dispersion theory for weak surface tension.
//!
//! The phase speed of a two-dimensional sinusoidal wave train with wavenumber
//! `s` satisfies `c²(s) = (1 + βs²) / f(s)` with `f(s) = s coth s`. For
//! `0 < β < 1/3` the map `s ↦ c²(s)` has a unique positive minimiser `ω`;
//! its minimum value is `Λ`. Everything else in this module (the symbols
//! `g`, `g̃`, `g̃₂` and the envelope coefficients) is derived from `(β, ω, Λ)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this magnitude `s coth s` and its derivatives are summed from the
/// Bernoulli series instead of the hyperbolic closed form.
pub const SERIES_SWITCH: f64 = 0.5;

/// Coefficients of `s coth s = Σ c_n s^{2n}`, `c_n = 4ⁿ B_{2n} / (2n)!`.
const COTH_SERIES: [f64; 13] = [
    1.0,
    0.333_333_333_333_333_33,
    -0.022_222_222_222_222_222,
    0.002_116_402_116_402_116_4,
    -0.000_211_640_211_640_211_64,
    0.000_021_377_799_155_576_933,
    -2.164_404_280_806_397_2e-6,
    2.192_594_785_187_377_8e-7,
    -2.221_460_878_997_967_9e-8,
    2.250_784_651_680_899_3e-9,
    -2.280_515_120_459_218_3e-10,
    2.310_643_259_900_262_4e-11,
    -2.341_170_681_982_488_4e-12,
];

const ROOT_TOL: f64 = 1e-12;

/// `f(s) = s coth s` together with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub f: f64,
    pub df: f64,
    pub d2f: f64,
}

/// Evaluates `f(s) = s coth s`, `f′(s)` and `f″(s)`.
///
/// `f` is even, so `f′` is odd and `f″` even. Near the origin the closed form
/// loses digits to cancellation and the power series is used instead.
pub fn kernel_f(s: f64) -> KernelValue {
    if s.abs() < SERIES_SWITCH {
        kernel_f_series(s)
    } else {
        kernel_f_direct(s)
    }
}

pub(crate) fn kernel_f_series(s: f64) -> KernelValue {
    let s2 = s * s;
    let mut f = 0.0;
    let mut df = 0.0;
    let mut d2f = 0.0;
    // Horner in s², highest order first.
    for (n, &c) in COTH_SERIES.iter().enumerate().rev() {
        let n = n as f64;
        f = f * s2 + c;
        df = df * s2 + 2.0 * n * c;
        d2f = d2f * s2 + 2.0 * n * (2.0 * n - 1.0) * c;
    }
    // df currently holds Σ 2n c_n s^{2n}, d2f holds Σ 2n(2n-1) c_n s^{2n}.
    let (df, d2f) = if s == 0.0 {
        (0.0, 2.0 * COTH_SERIES[1])
    } else {
        (df / s, d2f / s2)
    };
    KernelValue { f, df, d2f }
}

pub(crate) fn kernel_f_direct(s: f64) -> KernelValue {
    let a = s.abs();
    let coth = 1.0 / a.tanh();
    let csch2 = coth * coth - 1.0;
    let f = a * coth;
    let df = coth - a * csch2;
    let d2f = 2.0 * csch2 * (a * coth - 1.0);
    KernelValue {
        f,
        df: df.copysign(s),
        d2f,
    }
}

/// `(β, ω, Λ)`: Bond number, minimising wavenumber and critical speed squared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionParams {
    pub beta: f64,
    pub omega: f64,
    pub lambda_crit: f64,
}

/// First-order condition `d/ds c²(s) = 0`, cleared of denominators.
fn first_order_residual(beta: f64, s: f64) -> (f64, f64) {
    let k = kernel_f(s);
    let h = 2.0 * beta * s * k.f - (1.0 + beta * s * s) * k.df;
    let dh = 2.0 * beta * k.f - (1.0 + beta * s * s) * k.d2f;
    (h, dh)
}

/// Finds `ω` and `Λ` for a Bond number in the weak surface tension regime.
pub fn solve_dispersion(beta: f64) -> Result<DispersionParams> {
    if !beta.is_finite() || beta <= 0.0 || beta >= 1.0 / 3.0 {
        return Err(Error::Domain(format!(
            "Bond number beta = {beta} must lie in (0, 1/3)"
        )));
    }

    let speed2 = |s: f64| (1.0 + beta * s * s) / kernel_f(s).f;

    // Coarse scan on a log grid to bracket the minimiser.
    const SAMPLES: usize = 2000;
    let (lo, hi) = (1e-4_f64.ln(), 50.0_f64.ln());
    let grid: Vec<f64> = (0..SAMPLES)
        .map(|i| (lo + (hi - lo) * i as f64 / (SAMPLES - 1) as f64).exp())
        .collect();
    let imin = grid
        .iter()
        .enumerate()
        .min_by(|a, b| speed2(*a.1).total_cmp(&speed2(*b.1)))
        .map(|(i, _)| i)
        .unwrap();
    let mut a = grid[imin.saturating_sub(1)];
    let mut b = grid[(imin + 1).min(SAMPLES - 1)];
    let (ha, _) = first_order_residual(beta, a);
    let (hb, _) = first_order_residual(beta, b);
    if ha > 0.0 || hb < 0.0 {
        return Err(Error::Convergence(format!(
            "no sign change of the first-order condition in [{a}, {b}] for beta = {beta}"
        )));
    }

    // Safeguarded Newton: fall back to bisection whenever the step leaves
    // the bracket.
    let mut s = 0.5 * (a + b);
    let mut converged = false;
    for _ in 0..200 {
        let (h, dh) = first_order_residual(beta, s);
        if h < 0.0 {
            a = s;
        } else {
            b = s;
        }
        let newton = s - h / dh;
        let next = if dh > 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        let step = (next - s).abs();
        s = next;
        if step <= 4.0 * f64::EPSILON * s && first_order_residual(beta, s).0.abs() < ROOT_TOL {
            converged = true;
            break;
        }
        if b - a <= 2.0 * f64::EPSILON * s {
            converged = first_order_residual(beta, s).0.abs() < ROOT_TOL;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence(format!(
            "Newton iteration stalled at s = {s} for beta = {beta}"
        )));
    }

    Ok(DispersionParams {
        beta,
        omega: s,
        lambda_crit: speed2(s),
    })
}

impl DispersionParams {
    pub fn new(beta: f64) -> Result<Self> {
        solve_dispersion(beta)
    }

    /// `c²(s) = (1 + βs²) / f(s)`.
    pub fn speed_squared(&self, s: f64) -> f64 {
        (1.0 + self.beta * s * s) / kernel_f(s).f
    }

    /// `g(s) = 1 + βs² − Λ f(s)`, nonnegative with double zeros at `±ω`.
    pub fn g(&self, s: f64) -> f64 {
        1.0 + self.beta * s * s - self.lambda_crit * kernel_f(s).f
    }

    pub fn dg(&self, s: f64) -> f64 {
        2.0 * self.beta * s - self.lambda_crit * kernel_f(s).df
    }

    pub fn d2g(&self, s: f64) -> f64 {
        2.0 * self.beta - self.lambda_crit * kernel_f(s).d2f
    }

    /// `g̃(k) = 1 + β|k|² − Λ (k₁²/|k|²) f(|k|)`, with the direction factor
    /// taken as zero at `k = 0`.
    pub fn gtilde(&self, k1: f64, k2: f64) -> f64 {
        let r2 = k1 * k1 + k2 * k2;
        if r2 == 0.0 {
            return 1.0;
        }
        let r = r2.sqrt();
        1.0 + self.beta * r2 - self.lambda_crit * (k1 * k1 / r2) * kernel_f(r).f
    }

    /// Second derivative of `g̃` in `k₁` at the carrier `(ω, 0)`; equals `g″(ω)`.
    pub fn gtilde_d11(&self) -> f64 {
        self.d2g(self.omega)
    }

    /// [`Self::gtilde_d22`] by Richardson-extrapolated central differences of
    /// `g̃(ω, ·)`.
    pub fn gtilde_d22_numeric(&self) -> f64 {
        let w = self.omega;
        let central = |h: f64| {
            (self.gtilde(w, h) - 2.0 * self.gtilde(w, 0.0) + self.gtilde(w, -h)) / (h * h)
        };
        let h = 2e-3 * w.max(0.1);
        (4.0 * central(0.5 * h) - central(h)) / 3.0
    }

    /// Second derivative of `g̃` in `k₂` at `(ω, 0)`: `2Λf(ω)/ω²`, which
    /// follows from the first-order condition `Λ f′(ω) = 2βω`.
    pub fn gtilde_d22(&self) -> f64 {
        2.0 * self.lambda_crit * kernel_f(self.omega).f / (self.omega * self.omega)
    }

    /// Second-order Taylor polynomial of `g̃` about `(ω, 0)`, extended evenly
    /// to the ball about `(−ω, 0)`.
    pub fn gtilde2(&self, k1: f64, k2: f64) -> f64 {
        let d = k1.abs() - self.omega;
        0.5 * self.gtilde_d11() * d * d + 0.5 * self.gtilde_d22() * k2 * k2
    }

    /// The two identities that express `β` and `Λ` through `ω` alone.
    /// Returns `(β, Λ)` recomputed from `f(ω)` and `f′(ω)`.
    pub fn identity_check(&self) -> (f64, f64) {
        let w = self.omega;
        let k = kernel_f(w);
        let denom = 2.0 * w * k.f - w * w * k.df;
        (k.df / denom, 2.0 * w / denom)
    }
}

/// Coefficients of the quadratic and quartic parts of the envelope functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DsCoefficients {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a_omega: f64,
    pub b_omega: f64,
    pub c1: f64,
    pub c2: f64,
    pub g_2omega: f64,
    /// Λ, carried along because the nonlocal multiplier depends on it.
    pub lambda_crit: f64,
}

pub fn ds_coefficients(params: &DispersionParams) -> Result<DsCoefficients> {
    let DispersionParams {
        beta,
        omega: w,
        lambda_crit: lam,
    } = *params;
    let f1 = kernel_f(w).f;
    let f2 = kernel_f(2.0 * w).f;
    let a_omega = 0.5 * (3.0 * w * w - f1 * f1 - 2.0 * f1 * f2);
    let b_omega = w * w - f1 * f1;
    let g_2omega = params.g(2.0 * w);

    let c1 = lam / 32.0 * (lam * b_omega - 2.0 * f1).powi(2);
    let c2 = lam * lam * a_omega * a_omega / (16.0 * g_2omega)
        + lam * lam * b_omega * b_omega / 32.0
        + 3.0 * beta * w.powi(4) / 64.0
        + lam * f1 / 16.0 * (f1 * f2 - 3.0 * w * w);

    let coeffs = DsCoefficients {
        a1: params.gtilde_d11() / 8.0,
        a2: params.gtilde_d22() / 8.0,
        a3: 0.25 * lam * f1,
        a_omega,
        b_omega,
        c1,
        c2,
        g_2omega,
        lambda_crit: lam,
    };

    if !(coeffs.c1 > 0.0 && coeffs.c2 > 0.0) {
        return Err(Error::Validation(format!(
            "quartic coefficients must be positive, got C1 = {}, C2 = {} at beta = {beta}",
            coeffs.c1, coeffs.c2
        )));
    }
    if !(coeffs.a1 > 0.0 && coeffs.a2 > 0.0 && coeffs.a3 > 0.0 && g_2omega > 0.0) {
        return Err(Error::Validation(format!(
            "quadratic coefficients must be positive, got a = ({}, {}, {}), g(2w) = {g_2omega}",
            coeffs.a1, coeffs.a2, coeffs.a3
        )));
    }
    Ok(coeffs)
}

impl DsCoefficients {
    /// `D₁ = min(a₁, a₂, a₃)`, the coercivity constant of the quadratic part.
    pub fn coercivity(&self) -> f64 {
        self.a1.min(self.a2).min(self.a3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Frozen from a 40-digit bisection of the first-order condition.
    const OMEGA_025: f64 = 1.402_583_206_338_663_9;
    const LAMBDA_025: f64 = 0.942_266_692_628_372_8;

    #[test]
    fn kernel_at_origin() {
        let k = kernel_f(0.0);
        assert_eq!(k.f, 1.0);
        assert_eq!(k.df, 0.0);
        assert_relative_eq!(k.d2f, 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn kernel_is_even() {
        for s in [0.1, 0.49, 0.5, 2.0, 7.5] {
            let (p, m) = (kernel_f(s), kernel_f(-s));
            assert_eq!(p.f, m.f);
            assert_eq!(p.df, -m.df);
            assert_eq!(p.d2f, m.d2f);
        }
    }

    #[test]
    fn kernel_at_one_matches_exponential_form() {
        let e2 = 1.0_f64.exp().powi(2);
        assert_relative_eq!(kernel_f(1.0).f, (e2 + 1.0) / (e2 - 1.0), max_relative = 1e-15);
        assert_relative_eq!(kernel_f(1.0).f, 1.313_035_285_499_331_3, max_relative = 1e-15);
    }

    #[test]
    fn series_and_direct_branches_agree() {
        for i in 0..=450 {
            let s = 0.05 + 0.45 * i as f64 / 450.0;
            let a = kernel_f_series(s);
            let b = kernel_f_direct(s);
            assert!((a.f - b.f).abs() < 1e-13, "f at {s}");
            assert!((a.df - b.df).abs() < 1e-11, "f' at {s}");
            assert!((a.d2f - b.d2f).abs() < 1e-9, "f'' at {s}");
        }
    }

    #[test]
    fn rejects_strong_surface_tension() {
        for beta in [0.0, -0.1, 1.0 / 3.0, 0.34, f64::NAN] {
            assert!(matches!(solve_dispersion(beta), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn regression_at_quarter() {
        let p = solve_dispersion(0.25).unwrap();
        assert_relative_eq!(p.omega, OMEGA_025, max_relative = 1e-12);
        assert_relative_eq!(p.lambda_crit, LAMBDA_025, max_relative = 1e-13);
        assert!(p.g(p.omega).abs() < 1e-14);
        assert!(p.dg(p.omega).abs() < 1e-12);
    }

    #[test]
    fn approaches_long_wave_limit() {
        let p = solve_dispersion(1.0 / 3.0 - 1e-5).unwrap();
        assert!(p.omega < 0.05, "omega = {}", p.omega);
        assert!((p.lambda_crit - 1.0).abs() < 1e-8);
    }

    #[test]
    fn symbol_special_values() {
        let p = solve_dispersion(0.25).unwrap();
        assert!(p.gtilde(p.omega, 0.0).abs() < 1e-14);
        assert_eq!(p.gtilde2(p.omega, 0.0), 0.0);
        for k2 in [0.1, 1.0, 3.0] {
            assert_relative_eq!(p.gtilde(0.0, k2), 1.0 + 0.25 * k2 * k2, max_relative = 1e-15);
        }
        assert_relative_eq!(p.gtilde(2.0 * p.omega, 0.0), p.g(2.0 * p.omega), max_relative = 1e-14);
        assert!(p.g(2.0 * p.omega) > 0.0);
    }

    #[test]
    fn d22_fd_matches_closed_form() {
        for beta in [0.05, 0.15, 0.25, 0.32] {
            let p = solve_dispersion(beta).unwrap();
            assert_relative_eq!(p.gtilde_d22_numeric(), p.gtilde_d22(), max_relative = 1e-8);
        }
    }

    #[test]
    fn coefficients_at_quarter() {
        // Frozen from an mpmath evaluation of the closed forms at 40 digits.
        let c = ds_coefficients(&solve_dispersion(0.25).unwrap()).unwrap();
        assert_relative_eq!(c.a1, 0.024_835_089_203_111_702, max_relative = 1e-12);
        assert_relative_eq!(c.a2, 0.189_581_619_115_713_85, max_relative = 1e-12);
        assert_relative_eq!(c.a3, 0.372_952_478_168_952_94, max_relative = 1e-12);
        assert_relative_eq!(c.a_omega, -2.776_230_498_994_777_8, max_relative = 1e-12);
        assert_relative_eq!(c.b_omega, -0.539_327_232_194_353_8, max_relative = 1e-12);
        assert_relative_eq!(c.g_2omega, 0.304_606_157_953_870_3, max_relative = 1e-12);
        assert_relative_eq!(c.c1, 0.397_601_784_692_164_47, max_relative = 1e-12);
        assert_relative_eq!(c.c2, 1.324_393_136_882_718_5, max_relative = 1e-12);
        assert_relative_eq!(c.a3, c.lambda_crit * kernel_f(OMEGA_025).f / 4.0, max_relative = 1e-12);
    }

    #[test]
    fn g_nonnegative_with_single_touch() {
        for beta in [0.02, 0.1, 0.2, 0.3, 0.33] {
            let p = solve_dispersion(beta).unwrap();
            let n = 10_000;
            let smax = 10.0 * p.omega;
            let mut touching = Vec::new();
            for i in 0..=n {
                let s = smax * i as f64 / n as f64;
                let g = p.g(s);
                assert!(g >= -1e-12, "g({s}) = {g} at beta {beta}");
                if g < 1e-9 {
                    touching.push(s);
                }
            }
            let (lo, hi) = (touching[0], *touching.last().unwrap());
            assert!(lo <= p.omega && p.omega <= hi);
            assert!(hi - lo < 0.05 * p.omega, "touch interval [{lo}, {hi}]");
        }
    }
}
