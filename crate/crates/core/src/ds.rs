//! The envelope functional `T₀ = Q − S` on band-limited complex fields.
//!
//! `Q(ζ) = ∫ a₁|ζ_x|² + a₂|ζ_z|² + a₃|ζ|²` is evaluated spectrally.
//! `S(ζ) = C₁ ∫ m_DS |F[|ζ|²]|² + C₂ ∫ |ζ|⁴` is evaluated on the refined grid,
//! where both integrals are exact for trigonometric polynomials in the band.
//! Gradients use the pairing `Re ∫ u conj(v)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::DsCoefficients;
use crate::error::{Error, Result};
use crate::fields::{fine_complex, ordered_sum, real_spectrum, ComplexField2D, SpectralGrid, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub q: f64,
    pub s_nonlocal: f64,
    pub s_local: f64,
    pub s: f64,
    pub t0: f64,
    /// `2Q − 4S`, the derivative of `T₀` along the ray through `ζ`.
    pub nehari: f64,
}

impl EnergyBreakdown {
    pub(crate) fn new(q: f64, s_nonlocal: f64, s_local: f64) -> Self {
        let s = s_nonlocal + s_local;
        Self {
            q,
            s_nonlocal,
            s_local,
            s,
            t0: q - s,
            nehari: 2.0 * q - 4.0 * s,
        }
    }

    /// `|2Q − 4S| / Q`.
    pub fn nehari_defect(&self) -> f64 {
        self.nehari.abs() / self.q
    }
}

/// `k₁² / ((1−Λ)k₁² + k₂²)`, zero at the origin.
pub fn m_ds(lambda: f64, k1: f64, k2: f64) -> f64 {
    let den = (1.0 - lambda) * k1 * k1 + k2 * k2;
    if den == 0.0 {
        0.0
    } else {
        k1 * k1 / den
    }
}

fn quadratic_symbol(c: &DsCoefficients, k1: f64, k2: f64) -> f64 {
    c.a1 * k1 * k1 + c.a2 * k2 * k2 + c.a3
}

/// Physical-space pieces shared by the energy and the gradient.
struct Quartic {
    fine: SpectralGrid,
    zeta: Vec<Complex64>,
    rho: Vec<f64>,
    rho_hat: Spectrum,
}

impl Quartic {
    fn new(spec: &Spectrum) -> Self {
        let zeta = fine_complex(spec);
        let rho: Vec<f64> = zeta.par_iter().map(|z| z.norm_sqr()).collect();
        let fine = spec.grid.refined();
        let rho_hat = real_spectrum(fine, &rho);
        Self {
            fine,
            zeta,
            rho,
            rho_hat,
        }
    }

    fn integrals(&self, lambda: f64) -> (f64, f64) {
        let nonlocal = self.rho_hat.quadrature(|k1, k2| m_ds(lambda, k1, k2));
        let local = ordered_sum(self.rho.len(), |i| self.rho[i] * self.rho[i]) * self.fine.cell_area();
        (nonlocal, local)
    }
}

/// Energy of a field given by its spectrum.
pub fn energy_spectrum(spec: &Spectrum, c: &DsCoefficients) -> EnergyBreakdown {
    let q = spec.quadrature(|k1, k2| quadratic_symbol(c, k1, k2));
    let (nl, loc) = Quartic::new(spec).integrals(c.lambda_crit);
    EnergyBreakdown::new(q, c.c1 * nl, c.c2 * loc)
}

/// Energy together with the two gradient pieces `2Lζ` (quadratic) and
/// `4(C₁w + C₂|ζ|²)ζ` (quartic), so that `∇T₀ = lin − cubic`.
pub(crate) fn gradient_parts(spec: &Spectrum, c: &DsCoefficients) -> (EnergyBreakdown, Spectrum, Spectrum) {
    let q = spec.quadrature(|k1, k2| quadratic_symbol(c, k1, k2));
    let quartic = Quartic::new(spec);
    let (nl, loc) = quartic.integrals(c.lambda_crit);
    let lambda = c.lambda_crit;
    let w = quartic.rho_hat.map_symbol(|k1, k2| m_ds(lambda, k1, k2)).ifft();
    let product: Vec<Complex64> = quartic
        .zeta
        .par_iter()
        .zip(quartic.rho.par_iter())
        .zip(w.values.par_iter())
        .map(|((z, r), w)| z * (4.0 * (c.c1 * w.re + c.c2 * r)))
        .collect();
    let cubic = ComplexField2D {
        grid: quartic.fine,
        values: product,
    }
    .fft()
    .truncate(spec.grid)
    .expect("refined grid matches");
    let lin = spec
        .map_symbol(|k1, k2| 2.0 * quadratic_symbol(c, k1, k2))
        .band_limit();
    (EnergyBreakdown::new(q, c.c1 * nl, c.c2 * loc), lin, cubic)
}

/// Energy and gradient (as a spectrum on the same grid) in one pass.
pub fn energy_and_gradient(spec: &Spectrum, c: &DsCoefficients) -> (EnergyBreakdown, Spectrum) {
    let (e, mut lin, cubic) = gradient_parts(spec, c);
    lin.coeffs
        .par_iter_mut()
        .zip(cubic.coeffs.par_iter())
        .for_each(|(a, b)| *a -= b);
    (e, lin)
}

pub fn energy(zeta: &ComplexField2D, c: &DsCoefficients) -> EnergyBreakdown {
    energy_spectrum(&zeta.fft().band_limit(), c)
}

/// `∇T₀(ζ) = 2(−a₁ζ_xx − a₂ζ_zz + a₃ζ) − 4(C₁w + C₂|ζ|²)ζ`,
/// `w = F⁻¹[m_DS F[|ζ|²]]`, projected onto the band.
pub fn gradient(zeta: &ComplexField2D, c: &DsCoefficients) -> ComplexField2D {
    energy_and_gradient(&zeta.fft().band_limit(), c).1.ifft()
}

/// `Re ∫ ∇T₀(ζ) conj(v)`.
pub fn directional_derivative(
    zeta: &ComplexField2D,
    v: &ComplexField2D,
    c: &DsCoefficients,
) -> Result<f64> {
    if zeta.grid != v.grid {
        return Err(Error::GridMismatch);
    }
    gradient(zeta, c).inner(v)
}

/// Scale factor `λ₀ = (Q/2S)^{1/2}` placing `λ₀ζ` on the natural constraint.
pub fn ray_factor(e: &EnergyBreakdown) -> Result<f64> {
    let ratio = e.q / (2.0 * e.s);
    if !(e.s > 0.0 && e.q > 0.0) || !ratio.is_finite() {
        return Err(Error::DegenerateRay { quartic: e.s });
    }
    Ok(ratio.sqrt())
}

/// `T₀` at the maximum of its ray: `Q² / 4S`.
pub fn ray_value(e: &EnergyBreakdown) -> f64 {
    e.q * e.q / (4.0 * e.s)
}

pub fn nehari_project(
    zeta: &ComplexField2D,
    c: &DsCoefficients,
) -> Result<(f64, ComplexField2D)> {
    let lambda = ray_factor(&energy(zeta, c))?;
    Ok((lambda, zeta.scale(Complex64::new(lambda, 0.0))))
}
