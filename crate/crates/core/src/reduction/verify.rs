//! Convergence checks of the leading-order expansions along a wavepacket
//! family `ε ↦ η₁(ε)` built from a fixed envelope.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    functional_h, functional_k4, functional_l3, functional_l4, gradient_l3_spectrum, reduction_f,
};
use crate::dispersion::{kernel_f, DispersionParams, DsCoefficients};
use crate::ds::m_ds;
use crate::error::{Error, Result};
use crate::fields::{scaled_norm, ComplexField2D, MultiplierBank, SpectralGrid, Spectrum};
use crate::solver::{wavepacket, Wavepacket};

pub const DEFAULT_EPSILONS: [f64; 3] = [0.2, 0.1, 0.05];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub name: String,
    pub epsilons: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub rel_errors: Vec<f64>,
    pub fitted_order: f64,
    pub predicted_order: f64,
    /// Strictly decreasing relative errors.
    pub monotone: bool,
}

impl ConvergenceReport {
    pub fn new(name: &str, epsilons: Vec<f64>, lhs: Vec<f64>, rhs: Vec<f64>, rel_errors: Vec<f64>, predicted_order: f64) -> Self {
        let fitted_order = fitted_order(&epsilons, &rel_errors);
        let monotone = rel_errors.windows(2).all(|w| w[1] < w[0]);
        Self {
            name: name.to_string(),
            epsilons,
            lhs,
            rhs,
            rel_errors,
            fitted_order,
            predicted_order,
            monotone,
        }
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut w = std::io::BufWriter::new(w);
        writeln!(w, "# dslump-convergence v1 {}", self.name)?;
        writeln!(w, "epsilon,lhs,rhs,rel_error")?;
        for i in 0..self.epsilons.len() {
            writeln!(
                w,
                "{:?},{:?},{:?},{:?}",
                self.epsilons[i], self.lhs[i], self.rhs[i], self.rel_errors[i]
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Least-squares slope of `log e` against `log ε`.
pub fn fitted_order(eps: &[f64], errors: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = eps
        .iter()
        .zip(errors)
        .filter(|(_, e)| **e > 0.0)
        .map(|(a, e)| (a.ln(), e.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Inputs shared by every verifier.
pub struct VerifyContext<'a> {
    pub params: DispersionParams,
    pub coeffs: DsCoefficients,
    pub bank: &'a MultiplierBank,
    /// Envelope on its own grid, centred on the origin.
    pub zeta: ComplexField2D,
}

impl VerifyContext<'_> {
    /// Gaussian envelope `A exp(−(X² + Z²)/2σ²)` on an `n × n` box of side
    /// `l`, centred on the origin.
    pub fn gaussian_envelope(n: usize, l: f64, sigma: f64, amplitude: f64) -> Result<ComplexField2D> {
        if !(sigma > 0.0) {
            return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
        }
        let g = SpectralGrid::new(n, n, l, l)?;
        let wrap = |u: f64| u - l * (u / l).round();
        Ok(ComplexField2D::from_fn(g, |x, z| {
            let (u, v) = (wrap(x), wrap(z));
            Complex64::new(amplitude * (-(u * u + v * v) / (2.0 * sigma * sigma)).exp(), 0.0)
        }))
    }

    /// The envelope used when no profile is supplied. Solved lumps are too
    /// narrow in `X` for their packets to fit the cutoff balls at `ε = 0.2`.
    pub fn default_envelope() -> ComplexField2D {
        Self::gaussian_envelope(64, 52.0, 3.0, 0.25).expect("valid default envelope")
    }

    fn check_eps(eps: &[f64]) -> Result<()> {
        if eps.len() < 3 {
            return Err(Error::Domain(format!("need at least 3 epsilons, got {}", eps.len())));
        }
        if !eps.windows(2).all(|w| w[1] < w[0]) || eps.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(Error::Domain("epsilons must be strictly decreasing in (0, 1)".into()));
        }
        Ok(())
    }

    fn packet(&self, eps: f64) -> Result<Wavepacket> {
        wavepacket(&self.zeta, eps, self.bank)
    }
}

/// Quantities of `|η₁⁺|` that appear on the right-hand sides.
struct PlusIntegrals {
    quartic: f64,
    direction: f64,
    nonlocal: f64,
}

fn plus_integrals(plus: &ComplexField2D, lambda: f64) -> PlusIntegrals {
    let fine = plus.grid.refined();
    let samples = crate::fields::fine_complex(&plus.fft().band_limit());
    let rho: Vec<f64> = samples.par_iter().map(|z| z.norm_sqr()).collect();
    let quartic = crate::fields::ordered_sum(rho.len(), |i| rho[i] * rho[i]) * fine.cell_area();
    let rho_hat = crate::fields::real_spectrum(fine, &rho);
    let direction = rho_hat.quadrature(|k1, k2| {
        let r2 = k1 * k1 + k2 * k2;
        if r2 == 0.0 {
            0.0
        } else {
            k1 * k1 / r2
        }
    });
    let nonlocal = rho_hat.quadrature(|k1, k2| m_ds(lambda, k1, k2));
    PlusIntegrals {
        quartic,
        direction,
        nonlocal,
    }
}

pub trait Verifier: Send + Sync {
    fn name(&self) -> &'static str;
    fn run(&self, ctx: &VerifyContext, eps: &[f64]) -> Result<Vec<ConvergenceReport>>;
}

/// Runs `f(packet, F(η₁))` for each `ε` and assembles one report.
fn sweep(
    ctx: &VerifyContext,
    eps: &[f64],
    name: &str,
    predicted: f64,
    f: impl Fn(&Wavepacket, &crate::fields::RealField2D) -> Result<(f64, f64)>,
) -> Result<ConvergenceReport> {
    VerifyContext::check_eps(eps)?;
    let (mut lhs, mut rhs, mut rel) = (vec![], vec![], vec![]);
    for &e in eps {
        let wp = ctx.packet(e)?;
        let fe = reduction_f(&wp.eta1, e, ctx.bank)?;
        let (l, r) = f(&wp, &fe)?;
        lhs.push(l);
        rhs.push(r);
        rel.push(((l - r) / r).abs());
    }
    Ok(ConvergenceReport::new(name, eps.to_vec(), lhs, rhs, rel, predicted))
}

/// `H(F(η₁))` against its three-term leading formula.
pub struct HfExpansion;
/// `K₄(η₁ + F(η₁))` against `−3βω⁴/4 ∫|η₁⁺|⁴`.
pub struct K4Expansion;
/// `L₄(η₁ + F(η₁))` against its two-term leading formula.
pub struct L4Expansion;
/// `L₃(η₁ + F(η₁))` against `2H(F(η₁))/(Λ(1−ε²))`.
pub struct L3Expansion;
/// The approximate identities for multipliers acting on `η₁^±`.
pub struct ApproxIdentities;

const QUARTIC_ORDER: f64 = 2.0 / 3.0;

impl Verifier for HfExpansion {
    fn name(&self) -> &'static str {
        "hf"
    }

    fn run(&self, ctx: &VerifyContext, eps: &[f64]) -> Result<Vec<ConvergenceReport>> {
        let (p, c) = (&ctx.params, &ctx.coeffs);
        let lam = p.lambda_crit;
        let f1 = kernel_f(p.omega).f;
        let report = sweep(ctx, eps, "hf", QUARTIC_ORDER, |wp, fe| {
            let lhs = functional_h(fe, p);
            let pi = plus_integrals(&wp.eta1_plus, lam);
            let rhs = (lam * lam * c.a_omega * c.a_omega / c.g_2omega + 0.5 * lam * lam * c.b_omega * c.b_omega)
                * pi.quartic
                - 2.0 * lam * f1 * f1 * pi.direction
                + 0.5 * lam * (lam * c.b_omega - 2.0 * f1).powi(2) * pi.nonlocal;
            Ok((lhs, rhs))
        })?;
        Ok(vec![report])
    }
}

impl Verifier for K4Expansion {
    fn name(&self) -> &'static str {
        "k4"
    }

    fn run(&self, ctx: &VerifyContext, eps: &[f64]) -> Result<Vec<ConvergenceReport>> {
        let p = &ctx.params;
        let report = sweep(ctx, eps, "k4", QUARTIC_ORDER, |wp, fe| {
            let eta = wp.eta1.add(fe)?;
            let lhs = functional_k4(&eta, p.beta);
            let pi = plus_integrals(&wp.eta1_plus, p.lambda_crit);
            Ok((lhs, -0.75 * p.beta * p.omega.powi(4) * pi.quartic))
        })?;
        Ok(vec![report])
    }
}

impl Verifier for L4Expansion {
    fn name(&self) -> &'static str {
        "l4"
    }

    fn run(&self, ctx: &VerifyContext, eps: &[f64]) -> Result<Vec<ConvergenceReport>> {
        let p = &ctx.params;
        let f1 = kernel_f(p.omega).f;
        let f2 = kernel_f(2.0 * p.omega).f;
        let report = sweep(ctx, eps, "l4", QUARTIC_ORDER, |wp, fe| {
            let eta = wp.eta1.add(fe)?;
            let lhs = functional_l4(&eta, ctx.bank)?;
            let pi = plus_integrals(&wp.eta1_plus, p.lambda_crit);
            let rhs = f1 * (f1 * f2 - 3.0 * p.omega * p.omega) * pi.quartic + 2.0 * f1 * f1 * pi.direction;
            Ok((lhs, rhs))
        })?;
        Ok(vec![report])
    }
}

impl Verifier for L3Expansion {
    fn name(&self) -> &'static str {
        "l3"
    }

    fn run(&self, ctx: &VerifyContext, eps: &[f64]) -> Result<Vec<ConvergenceReport>> {
        let p = &ctx.params;
        let report = sweep(ctx, eps, "l3", QUARTIC_ORDER, |wp, fe| {
            let eta = wp.eta1.add(fe)?;
            let lhs = functional_l3(&eta, ctx.bank)?;
            let e = wp.epsilon;
            let rhs = 2.0 * functional_h(fe, p) / (p.lambda_crit * (1.0 - e * e));
            Ok((lhs, rhs))
        })?;
        Ok(vec![report])
    }
}

type Identity = (&'static str, f64, fn(&IdentityInputs) -> Result<f64>);

struct IdentityInputs<'a> {
    plus: Spectrum,
    omega: f64,
    bank: &'a MultiplierBank,
}

fn l2_of(spec: &Spectrum) -> f64 {
    spec.quadrature(|_, _| 1.0).sqrt()
}

/// `‖m(D)u − c u‖₀` for a spectrum `u`.
fn symbol_defect(u: &Spectrum, m: impl Fn(f64, f64) -> Complex64 + Sync) -> f64 {
    let grid = u.grid;
    let coeffs = u
        .coeffs
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let (k1, k2) = grid.wavenumber(i);
            c * m(k1, k2)
        })
        .collect();
    l2_of(&Spectrum { grid, coeffs })
}

/// Spectrum of `(η₁⁺)²` on the refined grid.
fn square_plus(plus: &Spectrum) -> Spectrum {
    let v: Vec<Complex64> = crate::fields::fine_complex(plus).into_par_iter().map(|z| z * z).collect();
    ComplexField2D {
        grid: plus.grid.refined(),
        values: v,
    }
    .fft()
}

const IDENTITIES: [Identity; 7] = [
    ("dx", 1.0, |i| {
        let w = i.omega;
        Ok(symbol_defect(&i.plus, |k1, _| Complex64::new(0.0, k1 - w)))
    }),
    ("dxx", 1.0, |i| {
        let w = i.omega;
        Ok(symbol_defect(&i.plus, |k1, _| Complex64::new(w * w - k1 * k1, 0.0)))
    }),
    ("dz", 1.0, |i| Ok(symbol_defect(&i.plus, |_, k2| Complex64::new(0.0, k2)))),
    ("k0", 1.0, |i| {
        let fw = kernel_f(i.omega).f;
        let k0 = i.bank.array("K0", &i.plus.grid)?;
        let d = i.plus.apply_array(&k0);
        let diff = crate::solver::sub(&d, &i.plus.clone().scale(fw));
        Ok(l2_of(&diff))
    }),
    ("l0", 1.0, |i| Ok(l2_of(&i.bank.apply_spectrum(&i.plus, "L0")?))),
    ("k0_square", 2.0, |i| {
        let sq = square_plus(&i.plus);
        let f2 = kernel_f(2.0 * i.omega).f;
        let k0 = i.bank.array("K0", &sq.grid)?;
        let diff = crate::solver::sub(&sq.apply_array(&k0), &sq.clone().scale(f2));
        Ok(l2_of(&diff))
    }),
    ("l0_square", 2.0, |i| {
        let sq = square_plus(&i.plus);
        Ok(l2_of(&i.bank.apply_spectrum(&sq, "L0")?))
    }),
];

impl Verifier for ApproxIdentities {
    fn name(&self) -> &'static str {
        "approx"
    }

    fn run(&self, ctx: &VerifyContext, eps: &[f64]) -> Result<Vec<ConvergenceReport>> {
        VerifyContext::check_eps(eps)?;
        let mut rows: Vec<(Vec<f64>, Vec<f64>)> = vec![(vec![], vec![]); IDENTITIES.len()];
        for &e in eps {
            let wp = ctx.packet(e)?;
            let norm = scaled_norm(&wp.eta1.fft(), e, ctx.params.omega);
            let inputs = IdentityInputs {
                plus: wp.eta1_plus.fft().band_limit(),
                omega: ctx.params.omega,
                bank: ctx.bank,
            };
            for (k, (_, power, f)) in IDENTITIES.iter().enumerate() {
                rows[k].0.push(f(&inputs)?);
                rows[k].1.push(norm.powf(*power));
            }
        }
        Ok(IDENTITIES
            .iter()
            .zip(rows)
            .map(|((name, _, _), (lhs, rhs))| {
                let rel = lhs.iter().zip(&rhs).map(|(a, b)| a / b).collect();
                let predicted = 1.0;
                ConvergenceReport::new(&format!("approx_{name}"), eps.to_vec(), lhs, rhs, rel, predicted)
            })
            .collect())
    }
}

pub fn available_verifiers() -> Vec<&'static str> {
    vec!["hf", "k4", "l4", "l3", "approx"]
}

pub fn verifier(name: &str) -> Result<Box<dyn Verifier>> {
    match name {
        "hf" => Ok(Box::new(HfExpansion)),
        "k4" => Ok(Box::new(K4Expansion)),
        "l4" => Ok(Box::new(L4Expansion)),
        "l3" => Ok(Box::new(L3Expansion)),
        "approx" => Ok(Box::new(ApproxIdentities)),
        _ => Err(Error::UnknownStrategy {
            name: name.to_string(),
            available: available_verifiers().join(", "),
        }),
    }
}

/// `⟨L₃′(η₁), F(η₁)⟩` and `2H(F(η₁))/(Λ(1−ε²))`, equal on the grid.
pub fn l3_pairing(wp: &Wavepacket, bank: &MultiplierBank) -> Result<(f64, f64)> {
    let e = wp.epsilon;
    let fe = reduction_f(&wp.eta1, e, bank)?;
    let l3 = gradient_l3_spectrum(&wp.eta1, bank)?;
    let pairing = l3.inner(&fe.fft())?;
    let p = bank.params();
    Ok((pairing, 2.0 * functional_h(&fe, p) / (p.lambda_crit * (1.0 - e * e))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let eps = [0.2, 0.1, 0.05];
        let errs: Vec<f64> = eps.iter().map(|e: &f64| 3.0 * e.powf(1.5)).collect();
        assert!((fitted_order(&eps, &errs) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn registry() {
        for n in available_verifiers() {
            assert_eq!(verifier(n).unwrap().name(), n);
        }
        assert!(matches!(verifier("x"), Err(Error::UnknownStrategy { .. })));
    }

    #[test]
    fn rejects_short_or_unsorted_lists() {
        assert!(VerifyContext::check_eps(&[0.2, 0.1]).is_err());
        assert!(VerifyContext::check_eps(&[0.1, 0.2, 0.05]).is_err());
        assert!(VerifyContext::check_eps(&[0.2, 0.1, 0.05]).is_ok());
    }
}
