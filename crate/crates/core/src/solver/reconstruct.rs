//! Wavepackets built from an envelope and the surface reconstructed from them.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dispersion::{DispersionParams, DsCoefficients};
use crate::error::{Error, Result};
use crate::fields::{ComplexField2D, MultiplierBank, RealField2D, SpectralGrid};
use crate::reduction::reduction_f;

/// Largest spectral mass fraction the cutoff may remove.
pub const TRUNCATION_LIMIT: f64 = 0.01;

/// Margin by which the physical band must exceed `2(ω + δ)`.
const BAND_MARGIN: f64 = 1.05;

#[derive(Debug, Clone)]
pub struct Wavepacket {
    pub epsilon: f64,
    /// `η̃₁⁺ = ½εζ(εx, εz)e^{iωx}` before truncation.
    pub plus_raw: ComplexField2D,
    /// `η̃₁ = 2 Re η̃₁⁺`.
    pub eta1_tilde: RealField2D,
    /// `η₁ = (g̃₂(D)/g̃(D))^{1/2} η̃₁`, supported in the cutoff balls.
    pub eta1: RealField2D,
    /// `η₁⁺ = χ⁺(D)η₁`.
    pub eta1_plus: ComplexField2D,
    /// Fraction of `|F[η̃₁]|²` outside the cutoff balls.
    pub truncated_fraction: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconstructionResult {
    pub epsilon: f64,
    pub wave_speed: f64,
    pub truncated_fraction: f64,
    #[serde(skip)]
    pub eta1: RealField2D,
    #[serde(skip)]
    pub eta2_approx: RealField2D,
    #[serde(skip)]
    pub eta: RealField2D,
}

fn next_pow2_for(k_needed: f64, length: f64) -> usize {
    // (n/2 − 1)·2π/L ≥ k_needed
    let half = (k_needed * length / (2.0 * PI)).ceil() as usize + 1;
    (2 * half).next_power_of_two().max(16)
}

/// Physical grid for amplitude `ε`: the envelope box stretched by `1/ε`,
/// with `lx` rounded to a whole number of carrier periods so that `e^{iωx}`
/// is a grid mode, and enough points to hold the second harmonic.
pub fn physical_grid(ds: &SpectralGrid, epsilon: f64, params: &DispersionParams, delta: f64) -> Result<SpectralGrid> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let w = params.omega;
    let periods = (w * ds.lx / (2.0 * PI * epsilon)).round().max(1.0);
    let lx = 2.0 * PI * periods / w;
    let lz = ds.lz / epsilon;
    let nx = next_pow2_for(2.0 * (w + delta) * BAND_MARGIN, lx);
    let nz = next_pow2_for(2.0 * delta * BAND_MARGIN, lz);
    SpectralGrid::new(nx, nz, lx, lz)
}

/// Values of the band-limited trigonometric interpolant of `zeta` at the
/// tensor points `xs × zs`, row-major in `(x, z)`.
fn interpolate(zeta: &ComplexField2D, xs: &[f64], zs: &[f64]) -> Vec<Complex64> {
    let g = zeta.grid;
    let spec = zeta.fft().band_limit();
    let n = g.len() as f64;
    let modes_x: Vec<usize> = (0..g.nx).filter(|&i| i != g.nx / 2).collect();
    let modes_z: Vec<usize> = (0..g.nz).filter(|&j| j != g.nz / 2).collect();

    // a[m][j] = Σ_n c[m][n] e^{i K_n z_j}
    let a: Vec<Vec<Complex64>> = modes_x
        .par_iter()
        .map(|&m| {
            zs.iter()
                .map(|&z| {
                    modes_z
                        .iter()
                        .map(|&nn| spec.coeffs[g.index(m, nn)] * Complex64::from_polar(1.0, g.kz(nn) * z))
                        .sum()
                })
                .collect()
        })
        .collect();
    let ex: Vec<Vec<Complex64>> = modes_x
        .iter()
        .map(|&m| xs.iter().map(|&x| Complex64::from_polar(1.0 / n, g.kx(m) * x)).collect())
        .collect();

    let mut out = vec![Complex64::new(0.0, 0.0); xs.len() * zs.len()];
    out.par_chunks_mut(zs.len()).enumerate().for_each(|(i, row)| {
        for (mi, am) in a.iter().enumerate() {
            let e = ex[mi][i];
            for (r, v) in row.iter_mut().zip(am) {
                *r += v * e;
            }
        }
    });
    out
}

/// Builds `η̃₁` and `η₁` from the envelope `ζ` (centred on the grid origin).
pub fn wavepacket(zeta: &ComplexField2D, epsilon: f64, bank: &MultiplierBank) -> Result<Wavepacket> {
    let params = *bank.params();
    let grid = physical_grid(&zeta.grid, epsilon, &params, bank.delta())?;
    bank.check_resolution(&grid, 8)?;
    let (kx_max, kz_max) = grid.k_max();
    let env = zeta.fft().band_limit();
    let env_total = env.quadrature(|_, _| 1.0);
    let aliased = env.quadrature(|k1, k2| {
        if (epsilon * k1).abs() > kx_max || (epsilon * k2).abs() > kz_max {
            1.0
        } else {
            0.0
        }
    });
    if env_total > 0.0 && aliased / env_total > TRUNCATION_LIMIT {
        return Err(Error::Resolution(format!(
            "{:.3e} of the envelope spectrum lies beyond the physical band",
            aliased / env_total
        )));
    }

    let xs: Vec<f64> = (0..grid.nx).map(|i| epsilon * (grid.x(i) - grid.lx / 2.0)).collect();
    let zs: Vec<f64> = (0..grid.nz).map(|j| epsilon * (grid.z(j) - grid.lz / 2.0)).collect();
    let samples = interpolate(zeta, &xs, &zs);
    let w = params.omega;
    let values = samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| s * Complex64::from_polar(0.5 * epsilon, w * grid.x(i / grid.nz)))
        .collect();
    let plus_raw = ComplexField2D { grid, values };
    let eta1_tilde = plus_raw.re().scale(2.0);

    let spec = eta1_tilde.fft().band_limit();
    let chi = bank.array("chi", &grid)?;
    let total = spec.quadrature(|_, _| 1.0);
    let kept = spec.quadrature_array(&chi);
    let truncated_fraction = if total > 0.0 { (total - kept) / total } else { 0.0 };
    if truncated_fraction > TRUNCATION_LIMIT {
        return Err(Error::Truncation {
            fraction: truncated_fraction,
            limit: TRUNCATION_LIMIT,
        });
    }
    let eta1_spec = bank.apply_spectrum(&spec, "cov")?;
    let eta1 = eta1_spec.ifft_real();
    let eta1_plus = bank.apply_spectrum(&eta1_spec, "chi_plus")?.ifft();
    Ok(Wavepacket {
        epsilon,
        plus_raw,
        eta1_tilde,
        eta1,
        eta1_plus,
        truncated_fraction,
    })
}

/// `η = η₁ + F(η₁)` at speed `c = ((1−ε²)Λ)^{1/2}`.
pub fn reconstruct_surface(
    zeta: &ComplexField2D,
    epsilon: f64,
    params: &DispersionParams,
    _coeffs: &DsCoefficients,
    bank: &MultiplierBank,
) -> Result<ReconstructionResult> {
    if epsilon == 0.0 {
        let zero = RealField2D::zeros(zeta.grid);
        return Ok(ReconstructionResult {
            epsilon,
            wave_speed: params.lambda_crit.sqrt(),
            truncated_fraction: 0.0,
            eta1: zero.clone(),
            eta2_approx: zero.clone(),
            eta: zero,
        });
    }
    let wp = wavepacket(zeta, epsilon, bank)?;
    let f = reduction_f(&wp.eta1, epsilon, bank)?;
    let eta = wp.eta1.add(&f)?;
    Ok(ReconstructionResult {
        epsilon,
        wave_speed: ((1.0 - epsilon * epsilon) * params.lambda_crit).sqrt(),
        truncated_fraction: wp.truncated_fraction,
        eta1: wp.eta1,
        eta2_approx: f,
        eta,
    })
}
