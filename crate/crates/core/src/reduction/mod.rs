//! Explicit quadratic, cubic and quartic parts of the water-wave energy
//! functionals, their gradients, the reduction map `F(η₁)`, and verifiers
//! that measure the leading-order expansions along wavepacket families.
//!
//! All products are formed on the refined grid. For band-limited `η` the
//! integrals of products of up to four factors are exact, and cubic
//! gradients are exact Galerkin projections, so the gradients below are the
//! exact derivatives of the discrete functionals.

mod verify;

use rayon::prelude::*;

use crate::dispersion::DispersionParams;
use crate::error::Result;
use crate::fields::{
    fine_real, grid_integral, real_spectrum, Axis, MultiplierBank, RealField2D, SpectralGrid,
    Spectrum,
};

pub use verify::{
    available_verifiers, fitted_order, l3_pairing, verifier, ApproxIdentities, ConvergenceReport, HfExpansion,
    K4Expansion, L3Expansion, L4Expansion, VerifyContext, Verifier,
    DEFAULT_EPSILONS,
};

fn band(eta: &RealField2D) -> Spectrum {
    eta.fft().band_limit()
}

/// Samples of `m(D)η` on the refined grid.
fn fine_with(bank: &MultiplierBank, spec: &Spectrum, name: &str) -> Result<Vec<f64>> {
    Ok(fine_real(&bank.apply_spectrum(spec, name)?))
}

fn fine_deriv(spec: &Spectrum, axis: Axis, order: u32) -> Vec<f64> {
    fine_real(&spec.derivative(axis, order))
}

/// Spectrum on the refined grid of a product sampled there.
fn fine_spectrum(fine: SpectralGrid, values: &[f64]) -> Spectrum {
    real_spectrum(fine, values)
}

/// Galerkin projection onto the band of `coarse` of a field sampled on its
/// refined grid.
fn project(coarse: SpectralGrid, values: &[f64]) -> Spectrum {
    fine_spectrum(coarse.refined(), values)
        .truncate(coarse)
        .expect("refined grid matches")
}

fn zip3(a: &[f64], b: &[f64], c: &[f64], f: impl Fn(f64, f64, f64) -> f64 + Sync) -> Vec<f64> {
    a.par_iter()
        .zip(b.par_iter())
        .zip(c.par_iter())
        .map(|((&x, &y), &z)| f(x, y, z))
        .collect()
}

/// `K₂(η) = ½∫ η² + β|∇η|²`.
pub fn functional_k2(eta: &RealField2D, beta: f64) -> f64 {
    0.5 * band(eta).quadrature(|k1, k2| 1.0 + beta * (k1 * k1 + k2 * k2))
}

/// `K₄(η) = −β/8 ∫ (η_x² + η_z²)²`.
pub fn functional_k4(eta: &RealField2D, beta: f64) -> f64 {
    let s = band(eta);
    let (ex, ez) = (fine_deriv(&s, Axis::X, 1), fine_deriv(&s, Axis::Z, 1));
    let fine = eta.grid.refined();
    let integrand: Vec<f64> = ex
        .par_iter()
        .zip(ez.par_iter())
        .map(|(a, b)| (a * a + b * b).powi(2))
        .collect();
    -beta / 8.0 * grid_integral(fine, &integrand)
}

/// `L₂(η) = ½∫ η K₀η`.
pub fn functional_l2(eta: &RealField2D, bank: &MultiplierBank) -> Result<f64> {
    let s = band(eta);
    let k0 = bank.array("K0", &s.grid)?;
    Ok(0.5 * s.quadrature_array(&k0))
}

/// `L₃(η) = ½∫ η_x²η − η(K₀η)² − η(L₀η)²`.
pub fn functional_l3(eta: &RealField2D, bank: &MultiplierBank) -> Result<f64> {
    let s = band(eta);
    let e = fine_real(&s);
    let ex = fine_deriv(&s, Axis::X, 1);
    let k = fine_with(bank, &s, "K0")?;
    let l = fine_with(bank, &s, "L0")?;
    let integrand: Vec<f64> = (0..e.len())
        .into_par_iter()
        .map(|i| e[i] * (ex[i] * ex[i] - k[i] * k[i] - l[i] * l[i]))
        .collect();
    Ok(0.5 * grid_integral(eta.grid.refined(), &integrand))
}

/// `L₄(η) = ½∫ K₀(ηK₀η) ηK₀η + 2L₀(ηL₀η) ηK₀η + ηL₀η H₀(ηL₀η)
///        + ½∫ η²((K₀η)η_xx + (L₀η)η_xz)`.
pub fn functional_l4(eta: &RealField2D, bank: &MultiplierBank) -> Result<f64> {
    let s = band(eta);
    let fine = eta.grid.refined();
    let e = fine_real(&s);
    let k = fine_with(bank, &s, "K0")?;
    let l = fine_with(bank, &s, "L0")?;
    let exx = fine_deriv(&s, Axis::X, 2);
    let exz = fine_real(&s.derivative(Axis::X, 1).derivative(Axis::Z, 1));

    let ek: Vec<f64> = e.par_iter().zip(k.par_iter()).map(|(a, b)| a * b).collect();
    let el: Vec<f64> = e.par_iter().zip(l.par_iter()).map(|(a, b)| a * b).collect();
    let ek_hat = fine_spectrum(fine, &ek);
    let el_hat = fine_spectrum(fine, &el);
    let k_ek = bank.apply_spectrum(&ek_hat, "K0")?.ifft_real().values;
    let l_el = bank.apply_spectrum(&el_hat, "L0")?.ifft_real().values;
    let h_el = bank.apply_spectrum(&el_hat, "H0")?.ifft_real().values;

    let integrand: Vec<f64> = (0..e.len())
        .into_par_iter()
        .map(|i| {
            k_ek[i] * ek[i]
                + 2.0 * l_el[i] * ek[i]
                + el[i] * h_el[i]
                + e[i] * e[i] * (k[i] * exx[i] + l[i] * exz[i])
        })
        .collect();
    Ok(0.5 * grid_integral(fine, &integrand))
}

/// `H(η) = K₂(η) − ΛL₂(η) = ½∫ g̃(k)|η̂|² dk`.
pub fn functional_h(eta: &RealField2D, params: &DispersionParams) -> f64 {
    0.5 * band(eta).quadrature(|k1, k2| params.gtilde(k1, k2))
}

/// `K₂′(η) = η − βΔη`.
pub fn gradient_k2(eta: &RealField2D, beta: f64) -> RealField2D {
    band(eta)
        .map_symbol(|k1, k2| 1.0 + beta * (k1 * k1 + k2 * k2))
        .ifft_real()
}

/// `K₄′(η) = β/2 ((|∇η|²η_x)_x + (|∇η|²η_z)_z)`.
pub fn gradient_k4(eta: &RealField2D, beta: f64) -> RealField2D {
    let s = band(eta);
    let (ex, ez) = (fine_deriv(&s, Axis::X, 1), fine_deriv(&s, Axis::Z, 1));
    let px: Vec<f64> = ex
        .par_iter()
        .zip(ez.par_iter())
        .map(|(a, b)| (a * a + b * b) * a)
        .collect();
    let pz: Vec<f64> = ex
        .par_iter()
        .zip(ez.par_iter())
        .map(|(a, b)| (a * a + b * b) * b)
        .collect();
    let g = eta.grid;
    let dx = project(g, &px).derivative(Axis::X, 1);
    let dz = project(g, &pz).derivative(Axis::Z, 1);
    sum_spectra(&[(0.5 * beta, &dx), (0.5 * beta, &dz)]).ifft_real()
}

/// `L₂′(η) = K₀η`.
pub fn gradient_l2(eta: &RealField2D, bank: &MultiplierBank) -> Result<RealField2D> {
    Ok(bank.apply_spectrum(&band(eta), "K0")?.ifft_real())
}

/// Spectrum of `L₃′(η) = ½(η_x² − (K₀η)² − (L₀η)² − 2(η_xη)_x − 2K₀(ηK₀η) − 2L₀(ηL₀η))`.
pub fn gradient_l3_spectrum(eta: &RealField2D, bank: &MultiplierBank) -> Result<Spectrum> {
    let s = band(eta);
    let g = eta.grid;
    let e = fine_real(&s);
    let ex = fine_deriv(&s, Axis::X, 1);
    let k = fine_with(bank, &s, "K0")?;
    let l = fine_with(bank, &s, "L0")?;

    let local = zip3(&ex, &k, &l, |a, b, c| a * a - b * b - c * c);
    let exe: Vec<f64> = ex.par_iter().zip(e.par_iter()).map(|(a, b)| a * b).collect();
    let ek: Vec<f64> = e.par_iter().zip(k.par_iter()).map(|(a, b)| a * b).collect();
    let el: Vec<f64> = e.par_iter().zip(l.par_iter()).map(|(a, b)| a * b).collect();

    let t1 = project(g, &local);
    let t2 = project(g, &exe).derivative(Axis::X, 1);
    let t3 = bank.apply_spectrum(&project(g, &ek), "K0")?;
    let t4 = bank.apply_spectrum(&project(g, &el), "L0")?;
    Ok(sum_spectra(&[(0.5, &t1), (-1.0, &t2), (-1.0, &t3), (-1.0, &t4)]))
}

pub fn gradient_l3(eta: &RealField2D, bank: &MultiplierBank) -> Result<RealField2D> {
    Ok(gradient_l3_spectrum(eta, bank)?.ifft_real())
}

/// `F(η₁) = Λ(1−ε²) F⁻¹[(1−χ)/g̃ · F[L₃′(η₁)]]`.
pub fn reduction_f(eta1: &RealField2D, epsilon: f64, bank: &MultiplierBank) -> Result<RealField2D> {
    let lam = bank.params().lambda_crit;
    let l3 = gradient_l3_spectrum(eta1, bank)?;
    Ok(bank
        .apply_spectrum(&l3, "red_F")?
        .scale(lam * (1.0 - epsilon * epsilon))
        .ifft_real())
}

fn sum_spectra(terms: &[(f64, &Spectrum)]) -> Spectrum {
    let grid = terms[0].1.grid;
    let mut out = Spectrum::zeros(grid);
    for (w, s) in terms {
        out.coeffs
            .par_iter_mut()
            .zip(s.coeffs.par_iter())
            .for_each(|(o, c)| *o += c * *w);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::{kernel_f, solve_dispersion};
    use std::f64::consts::PI;

    fn setup() -> (MultiplierBank, SpectralGrid) {
        let p = solve_dispersion(0.25).unwrap();
        let grid = SpectralGrid::new(64, 32, 12.0 * PI / p.omega, 20.0).unwrap();
        (MultiplierBank::with_default_delta(p), grid)
    }

    #[test]
    fn zero_field_gives_zero() {
        let (bank, g) = setup();
        let z = RealField2D::zeros(g);
        assert_eq!(functional_k2(&z, 0.25), 0.0);
        assert_eq!(functional_k4(&z, 0.25), 0.0);
        assert_eq!(functional_l2(&z, &bank).unwrap(), 0.0);
        assert_eq!(functional_l3(&z, &bank).unwrap(), 0.0);
        assert_eq!(functional_l4(&z, &bank).unwrap(), 0.0);
        assert_eq!(functional_h(&z, bank.params()), 0.0);
        assert_eq!(reduction_f(&z, 0.1, &bank).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn cosine_closed_forms() {
        let (bank, g) = setup();
        let beta = bank.params().beta;
        let w = bank.params().omega;
        let k1 = 3.0 * 2.0 * PI / g.lx;
        let eta = RealField2D::from_fn(g, |x, _| (k1 * x).cos());
        let area = g.area();
        let k2v = functional_k2(&eta, beta);
        assert!((k2v - 0.5 * (1.0 + beta * k1 * k1) * area / 2.0).abs() < 1e-11 * area);
        let k4v = functional_k4(&eta, beta);
        assert!((k4v + beta / 8.0 * k1.powi(4) * 0.375 * area).abs() < 1e-11 * area);
        let carrier = RealField2D::from_fn(g, |x, _| (w * x).cos());
        let l2v = functional_l2(&carrier, &bank).unwrap();
        assert!((l2v - 0.5 * kernel_f(w).f * area / 2.0).abs() < 1e-11 * area);
        let grad = gradient_k2(&eta, beta);
        for (a, b) in grad.values.iter().zip(&eta.values) {
            assert!((a - (1.0 + beta * k1 * k1) * b).abs() < 1e-12);
        }
    }

    #[test]
    fn h_of_second_harmonic() {
        let (bank, g) = setup();
        let p = bank.params();
        let eta = RealField2D::from_fn(g, |x, _| (2.0 * p.omega * x).cos());
        let h = functional_h(&eta, p);
        assert!((h - 0.5 * p.g(2.0 * p.omega) * g.area() / 2.0).abs() < 1e-11 * g.area());
    }

    #[test]
    fn l2_two_ways() {
        let (bank, g) = setup();
        let (kx, kz) = (5.0 * 2.0 * PI / g.lx, 2.0 * PI / g.lz);
        let eta = RealField2D::from_fn(g, |x, z| {
            (kx * x).sin() * (-(z - 10.0).powi(2) / 4.0).exp() + 0.1 * (kz * z).cos()
        });
        let spectral = functional_l2(&eta, &bank).unwrap();
        let k0 = bank.apply(&eta, "K0").unwrap();
        let physical = 0.5 * eta.inner(&k0).unwrap();
        assert!((spectral - physical).abs() < 1e-10 * spectral.abs());
    }
}
