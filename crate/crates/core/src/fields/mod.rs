//! Periodic spectral grid approximating the plane, band-limited fields on it,
//! and the Fourier-multiplier bank.
//!
//! Samples are stored row-major with `x` as the slow index:
//! `values[ix * nz + iz]` holds the sample at `(ix·dx, iz·dz)`.
//!
//! Fields are kept strictly band-limited: every mode with `|m| = n/2` (the
//! Nyquist modes) is zero. Products are formed on the refined grid
//! ([`SpectralGrid::refined`]), which holds every product of up to four
//! band-limited fields without aliasing onto the zero mode and every cubic
//! product without aliasing into the original band.

pub mod fft;
pub mod io;
pub mod multiplier;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use multiplier::{MultiplierBank, Symbol};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Uniform periodic grid on `[0, lx) × [0, lz)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    pub nx: usize,
    pub nz: usize,
    pub lx: f64,
    pub lz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Z,
}

impl SpectralGrid {
    pub fn new(nx: usize, nz: usize, lx: f64, lz: f64) -> Result<Self> {
        for (n, name) in [(nx, "nx"), (nz, "nz")] {
            if n < 16 || !n.is_power_of_two() {
                return Err(Error::Domain(format!(
                    "{name} = {n} must be a power of two and at least 16"
                )));
            }
        }
        if !(lx > 0.0 && lz > 0.0 && lx.is_finite() && lz.is_finite()) {
            return Err(Error::Domain(format!(
                "box lengths must be positive, got {lx} x {lz}"
            )));
        }
        Ok(Self { nx, nz, lx, lz })
    }

    pub fn len(&self) -> usize {
        self.nx * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dz(&self) -> f64 {
        self.lz / self.nz as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dz()
    }

    pub fn area(&self) -> f64 {
        self.lx * self.lz
    }

    pub fn dkx(&self) -> f64 {
        2.0 * PI / self.lx
    }

    pub fn dkz(&self) -> f64 {
        2.0 * PI / self.lz
    }

    #[inline]
    pub fn index(&self, ix: usize, iz: usize) -> usize {
        ix * self.nz + iz
    }

    pub fn x(&self, ix: usize) -> f64 {
        ix as f64 * self.dx()
    }

    pub fn z(&self, iz: usize) -> f64 {
        iz as f64 * self.dz()
    }

    /// Signed mode number in the standard layout; the Nyquist index maps to
    /// `-n/2`.
    #[inline]
    pub fn mode(i: usize, n: usize) -> i64 {
        if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    #[inline]
    pub fn slot(m: i64, n: usize) -> usize {
        if m >= 0 {
            m as usize
        } else {
            (m + n as i64) as usize
        }
    }

    pub fn kx(&self, ix: usize) -> f64 {
        Self::mode(ix, self.nx) as f64 * self.dkx()
    }

    pub fn kz(&self, iz: usize) -> f64 {
        Self::mode(iz, self.nz) as f64 * self.dkz()
    }

    /// `(k₁, k₂)` of the mode stored at flat index `idx`.
    #[inline]
    pub fn wavenumber(&self, idx: usize) -> (f64, f64) {
        (self.kx(idx / self.nz), self.kz(idx % self.nz))
    }

    /// True unless the mode sits on a Nyquist line.
    #[inline]
    pub fn in_band(&self, idx: usize) -> bool {
        let (ix, iz) = (idx / self.nz, idx % self.nz);
        ix != self.nx / 2 && iz != self.nz / 2
    }

    /// Same box, twice the points per direction.
    pub fn refined(&self) -> Self {
        Self {
            nx: 2 * self.nx,
            nz: 2 * self.nz,
            lx: self.lx,
            lz: self.lz,
        }
    }

    /// Wavenumber magnitude resolved without aliasing in each direction.
    pub fn k_max(&self) -> (f64, f64) {
        (
            (self.nx / 2 - 1) as f64 * self.dkx(),
            (self.nz / 2 - 1) as f64 * self.dkz(),
        )
    }

    fn check(&self, len: usize) -> Result<()> {
        if len == self.len() {
            Ok(())
        } else {
            Err(Error::Shape {
                expected: self.len(),
                actual: len,
            })
        }
    }
}

/// Spectral coefficients (unnormalised DFT) of a field on `grid`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub grid: SpectralGrid,
    pub coeffs: Vec<Complex64>,
}

/// Complex samples, e.g. an envelope `ζ` or a one-sided wavepacket `η₁⁺`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField2D {
    pub grid: SpectralGrid,
    pub values: Vec<Complex64>,
}

/// Real samples, e.g. a free-surface elevation `η`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField2D {
    pub grid: SpectralGrid,
    pub values: Vec<f64>,
}

impl Spectrum {
    pub fn zeros(grid: SpectralGrid) -> Self {
        Self {
            grid,
            coeffs: vec![ZERO; grid.len()],
        }
    }

    pub fn new(grid: SpectralGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        grid.check(coeffs.len())?;
        Ok(Self { grid, coeffs })
    }

    pub fn ifft(&self) -> ComplexField2D {
        let mut values = self.coeffs.clone();
        fft::inverse(&mut values, self.grid.nx, self.grid.nz);
        ComplexField2D {
            grid: self.grid,
            values,
        }
    }

    /// Inverse transform keeping the real part, i.e. the inverse of the
    /// conjugate-symmetric part of the spectrum.
    pub fn ifft_real(&self) -> RealField2D {
        self.ifft().re()
    }

    /// Pointwise multiplication by a real symbol.
    pub fn map_symbol(&self, f: impl Fn(f64, f64) -> f64 + Sync) -> Spectrum {
        let grid = self.grid;
        let coeffs = self
            .coeffs
            .par_iter()
            .enumerate()
            .map(|(i, c)| {
                let (k1, k2) = grid.wavenumber(i);
                c * f(k1, k2)
            })
            .collect();
        Spectrum { grid, coeffs }
    }

    pub fn apply_array(&self, symbol: &[f64]) -> Spectrum {
        debug_assert_eq!(symbol.len(), self.coeffs.len());
        let coeffs = self
            .coeffs
            .par_iter()
            .zip(symbol.par_iter())
            .map(|(c, s)| c * s)
            .collect();
        Spectrum {
            grid: self.grid,
            coeffs,
        }
    }

    /// Spectral derivative `(ik)^order` along `axis`; Nyquist lines are zeroed.
    pub fn derivative(&self, axis: Axis, order: u32) -> Spectrum {
        let grid = self.grid;
        let coeffs = self
            .coeffs
            .par_iter()
            .enumerate()
            .map(|(i, c)| {
                if !grid.in_band(i) {
                    return ZERO;
                }
                let (k1, k2) = grid.wavenumber(i);
                let k = match axis {
                    Axis::X => k1,
                    Axis::Z => k2,
                };
                c * Complex64::new(0.0, k).powu(order)
            })
            .collect();
        Spectrum { grid, coeffs }
    }

    /// `∫ m(k) |û(k)|² dk` for the unitary transform.
    pub fn quadrature(&self, m: impl Fn(f64, f64) -> f64 + Sync) -> f64 {
        let grid = self.grid;
        let sum = ordered_sum(self.coeffs.len(), |i| {
            let (k1, k2) = grid.wavenumber(i);
            m(k1, k2) * self.coeffs[i].norm_sqr()
        });
        sum * grid.cell_area() / grid.len() as f64
    }

    pub fn quadrature_array(&self, m: &[f64]) -> f64 {
        let sum = ordered_sum(self.coeffs.len(), |i| m[i] * self.coeffs[i].norm_sqr());
        sum * self.grid.cell_area() / self.grid.len() as f64
    }

    /// `Re ∫ u conj(v)` computed from coefficients.
    pub fn inner(&self, other: &Spectrum) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let sum = ordered_sum(self.coeffs.len(), |i| (self.coeffs[i] * other.coeffs[i].conj()).re);
        Ok(sum * self.grid.cell_area() / self.grid.len() as f64)
    }

    /// `∫ |û(k)| dk` of the unitary transform.
    pub fn l1_norm(&self) -> f64 {
        let g = self.grid;
        let s = ordered_sum(self.coeffs.len(), |i| self.coeffs[i].norm());
        s * g.cell_area() / (2.0 * PI) * g.dkx() * g.dkz()
    }

    /// Zeroes the Nyquist lines.
    pub fn band_limit(mut self) -> Self {
        let grid = self.grid;
        self.coeffs
            .par_iter_mut()
            .enumerate()
            .for_each(|(i, c)| {
                if !grid.in_band(i) {
                    *c = ZERO;
                }
            });
        self
    }

    /// Embeds the band into the refined grid, representing the same
    /// trigonometric polynomial.
    pub fn pad(&self) -> Spectrum {
        let (g, fine) = (self.grid, self.grid.refined());
        let scale = fine.len() as f64 / g.len() as f64;
        let mut out = Spectrum::zeros(fine);
        for ix in 0..g.nx {
            if ix == g.nx / 2 {
                continue;
            }
            let fx = SpectralGrid::slot(SpectralGrid::mode(ix, g.nx), fine.nx);
            for iz in 0..g.nz {
                if iz == g.nz / 2 {
                    continue;
                }
                let fz = SpectralGrid::slot(SpectralGrid::mode(iz, g.nz), fine.nz);
                out.coeffs[fine.index(fx, fz)] = self.coeffs[g.index(ix, iz)] * scale;
            }
        }
        out
    }

    /// Orthogonal projection of a spectrum on the refined grid back onto the
    /// band of `coarse`.
    pub fn truncate(&self, coarse: SpectralGrid) -> Result<Spectrum> {
        if self.grid != coarse.refined() {
            return Err(Error::GridMismatch);
        }
        let fine = self.grid;
        let scale = coarse.len() as f64 / fine.len() as f64;
        let mut out = Spectrum::zeros(coarse);
        for ix in 0..coarse.nx {
            if ix == coarse.nx / 2 {
                continue;
            }
            let fx = SpectralGrid::slot(SpectralGrid::mode(ix, coarse.nx), fine.nx);
            for iz in 0..coarse.nz {
                if iz == coarse.nz / 2 {
                    continue;
                }
                let fz = SpectralGrid::slot(SpectralGrid::mode(iz, coarse.nz), fine.nz);
                out.coeffs[coarse.index(ix, iz)] = self.coeffs[fine.index(fx, fz)] * scale;
            }
        }
        Ok(out)
    }

    /// Fraction of `Σ|U|²` carried by modes where `keep` is false.
    pub fn mass_outside(&self, keep: impl Fn(f64, f64) -> bool + Sync) -> f64 {
        let grid = self.grid;
        let total = ordered_sum(self.coeffs.len(), |i| self.coeffs[i].norm_sqr());
        let out = ordered_sum(self.coeffs.len(), |i| {
            let (k1, k2) = grid.wavenumber(i);
            if keep(k1, k2) {
                0.0
            } else {
                self.coeffs[i].norm_sqr()
            }
        });
        if total == 0.0 {
            0.0
        } else {
            out / total
        }
    }

    pub fn scale(mut self, s: f64) -> Self {
        self.coeffs.par_iter_mut().for_each(|c| *c *= s);
        self
    }

    /// Largest deviation from `U_{-k} = conj(U_k)` relative to the largest
    /// coefficient.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let g = self.grid;
        let max = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0_f64;
        for ix in 0..g.nx {
            let jx = (g.nx - ix) % g.nx;
            for iz in 0..g.nz {
                let jz = (g.nz - iz) % g.nz;
                let d = (self.coeffs[g.index(ix, iz)] - self.coeffs[g.index(jx, jz)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst / max
    }
}

fn zip_with<T: Copy + Send + Sync>(
    a: &[T],
    b: &[T],
    f: impl Fn(T, T) -> T + Sync + Send,
) -> Vec<T> {
    a.par_iter().zip(b.par_iter()).map(|(&x, &y)| f(x, y)).collect()
}

impl ComplexField2D {
    pub fn zeros(grid: SpectralGrid) -> Self {
        Self {
            grid,
            values: vec![ZERO; grid.len()],
        }
    }

    pub fn new(grid: SpectralGrid, values: Vec<Complex64>) -> Result<Self> {
        grid.check(values.len())?;
        Ok(Self { grid, values })
    }

    /// Samples `f(x, z)` at the grid points.
    pub fn from_fn(grid: SpectralGrid, f: impl Fn(f64, f64) -> Complex64 + Sync) -> Self {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| f(grid.x(i / grid.nz), grid.z(i % grid.nz)))
            .collect();
        Self { grid, values }
    }

    pub fn fft(&self) -> Spectrum {
        let mut coeffs = self.values.clone();
        fft::forward(&mut coeffs, self.grid.nx, self.grid.nz);
        Spectrum {
            grid: self.grid,
            coeffs,
        }
    }

    pub fn re(&self) -> RealField2D {
        RealField2D {
            grid: self.grid,
            values: self.values.iter().map(|c| c.re).collect(),
        }
    }

    pub fn conj(&self) -> ComplexField2D {
        ComplexField2D {
            grid: self.grid,
            values: self.values.iter().map(|c| c.conj()).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> ComplexField2D {
        ComplexField2D {
            grid: self.grid,
            values: self.values.par_iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &ComplexField2D) -> Result<ComplexField2D> {
        self.same_grid(other)?;
        Ok(ComplexField2D {
            grid: self.grid,
            values: zip_with(&self.values, &other.values, |a, b| a + b),
        })
    }

    pub fn sub(&self, other: &ComplexField2D) -> Result<ComplexField2D> {
        self.same_grid(other)?;
        Ok(ComplexField2D {
            grid: self.grid,
            values: zip_with(&self.values, &other.values, |a, b| a - b),
        })
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &ComplexField2D) -> Result<ComplexField2D> {
        self.same_grid(other)?;
        Ok(ComplexField2D {
            grid: self.grid,
            values: zip_with(&self.values, &other.values, |a, b| a + b * s),
        })
    }

    fn same_grid(&self, other: &ComplexField2D) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `Re ∫ u conj(v)`.
    pub fn inner(&self, other: &ComplexField2D) -> Result<f64> {
        self.same_grid(other)?;
        let s = ordered_sum(self.values.len(), |i| (self.values[i] * other.values[i].conj()).re);
        Ok(s * self.grid.cell_area())
    }

    pub fn l2_norm(&self) -> f64 {
        let s = ordered_sum(self.values.len(), |i| self.values[i].norm_sqr());
        (s * self.grid.cell_area()).sqrt()
    }

    pub fn h1_norm(&self) -> f64 {
        self.fft().quadrature(|a, b| 1.0 + a * a + b * b).sqrt()
    }

    pub fn h3_norm(&self) -> f64 {
        self.fft()
            .quadrature(|a, b| (1.0 + a * a + b * b).powi(3))
            .sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// The `ε`-scaled norm `(∫ (1 + ε⁻²((|k₁|−ω)² + k₂²)) |û|² dk)^{1/2}`.
    pub fn scaled_norm(&self, epsilon: f64, omega: f64) -> f64 {
        scaled_norm(&self.fft(), epsilon, omega)
    }

    /// Circular shift by whole cells: the sample at `(i, j)` moves to
    /// `(i + sx, j + sz)`.
    pub fn shift(&self, sx: i64, sz: i64) -> ComplexField2D {
        let g = self.grid;
        let mut values = vec![ZERO; g.len()];
        for ix in 0..g.nx {
            let tx = (ix as i64 + sx).rem_euclid(g.nx as i64) as usize;
            for iz in 0..g.nz {
                let tz = (iz as i64 + sz).rem_euclid(g.nz as i64) as usize;
                values[g.index(tx, tz)] = self.values[g.index(ix, iz)];
            }
        }
        ComplexField2D { grid: g, values }
    }

    /// Index of the sample with the largest modulus (first one on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        let mut val = f64::NEG_INFINITY;
        for (i, v) in self.values.iter().enumerate() {
            let m = v.norm_sqr();
            if m > val {
                val = m;
                best = i;
            }
        }
        best
    }
}

pub(crate) fn scaled_norm(spec: &Spectrum, epsilon: f64, omega: f64) -> f64 {
    let inv = 1.0 / (epsilon * epsilon);
    spec.quadrature(|k1, k2| {
        let d = k1.abs() - omega;
        1.0 + inv * (d * d + k2 * k2)
    })
    .sqrt()
}

impl RealField2D {
    pub fn zeros(grid: SpectralGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn new(grid: SpectralGrid, values: Vec<f64>) -> Result<Self> {
        grid.check(values.len())?;
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: SpectralGrid, f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| f(grid.x(i / grid.nz), grid.z(i % grid.nz)))
            .collect();
        Self { grid, values }
    }

    pub fn to_complex(&self) -> ComplexField2D {
        ComplexField2D {
            grid: self.grid,
            values: self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn fft(&self) -> Spectrum {
        self.to_complex().fft()
    }

    pub fn add(&self, other: &RealField2D) -> Result<RealField2D> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(RealField2D {
            grid: self.grid,
            values: zip_with(&self.values, &other.values, |a, b| a + b),
        })
    }

    pub fn sub(&self, other: &RealField2D) -> Result<RealField2D> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(RealField2D {
            grid: self.grid,
            values: zip_with(&self.values, &other.values, |a, b| a - b),
        })
    }

    pub fn axpy(&self, s: f64, other: &RealField2D) -> Result<RealField2D> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(RealField2D {
            grid: self.grid,
            values: zip_with(&self.values, &other.values, |a, b| a + s * b),
        })
    }

    pub fn scale(&self, s: f64) -> RealField2D {
        RealField2D {
            grid: self.grid,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    /// `∫ u v`.
    pub fn inner(&self, other: &RealField2D) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let s = ordered_sum(self.values.len(), |i| self.values[i] * other.values[i]);
        Ok(s * self.grid.cell_area())
    }

    pub fn integral(&self) -> f64 {
        grid_integral(self.grid, &self.values)
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).unwrap().sqrt()
    }

    pub fn h1_norm(&self) -> f64 {
        self.fft().quadrature(|a, b| 1.0 + a * a + b * b).sqrt()
    }

    pub fn h3_norm(&self) -> f64 {
        self.fft()
            .quadrature(|a, b| (1.0 + a * a + b * b).powi(3))
            .sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn scaled_norm(&self, epsilon: f64, omega: f64) -> f64 {
        scaled_norm(&self.fft(), epsilon, omega)
    }

    /// Spectral derivative along `axis`; `order` must be 1 or 2.
    pub fn derivative(&self, axis: Axis, order: u32) -> Result<RealField2D> {
        if !(1..=2).contains(&order) {
            return Err(Error::Domain(format!("derivative order {order} not in {{1, 2}}")));
        }
        Ok(self.fft().derivative(axis, order).ifft_real())
    }
}

impl ComplexField2D {
    pub fn derivative(&self, axis: Axis, order: u32) -> Result<ComplexField2D> {
        if !(1..=2).contains(&order) {
            return Err(Error::Domain(format!("derivative order {order} not in {{1, 2}}")));
        }
        Ok(self.fft().derivative(axis, order).ifft())
    }
}

/// Physical-space samples of a band-limited spectrum on the refined grid.
pub(crate) fn fine_complex(spec: &Spectrum) -> Vec<Complex64> {
    spec.pad().ifft().values
}

/// Real physical-space samples on the refined grid.
pub(crate) fn fine_real(spec: &Spectrum) -> Vec<f64> {
    spec.pad().ifft().values.into_iter().map(|c| c.re).collect()
}

pub(crate) fn real_spectrum(grid: SpectralGrid, values: &[f64]) -> Spectrum {
    let mut coeffs: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::forward(&mut coeffs, grid.nx, grid.nz);
    Spectrum { grid, coeffs }
}

/// Sum of `values · ΔA` over a grid.
pub(crate) fn grid_integral(grid: SpectralGrid, values: &[f64]) -> f64 {
    ordered_sum(values.len(), |i| values[i]) * grid.cell_area()
}

const SUM_CHUNK: usize = 4096;

/// `Σ_{i<n} f(i)` reduced in a fixed order, so the result does not depend on
/// how the work was scheduled across threads.
pub(crate) fn ordered_sum(n: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    let partial: Vec<f64> = (0..n.div_ceil(SUM_CHUNK))
        .into_par_iter()
        .map(|c| (c * SUM_CHUNK..((c + 1) * SUM_CHUNK).min(n)).map(&f).sum())
        .collect();
    partial.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> SpectralGrid {
        SpectralGrid::new(32, 16, 2.0 * PI, 4.0 * PI).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(SpectralGrid::new(8, 32, 1.0, 1.0).is_err());
        assert!(SpectralGrid::new(48, 32, 1.0, 1.0).is_err());
        assert!(SpectralGrid::new(32, 32, 0.0, 1.0).is_err());
    }

    #[test]
    fn zero_mode_is_origin() {
        let g = grid();
        assert_eq!(g.wavenumber(0), (0.0, 0.0));
        assert_eq!(g.kx(g.nx / 2), -(g.nx as f64 / 2.0));
    }

    #[test]
    fn delta_spike_has_flat_spectrum() {
        let g = grid();
        let mut f = ComplexField2D::zeros(g);
        f.values[0] = Complex64::new(1.0, 0.0);
        for c in f.fft().coeffs {
            assert!((c - 1.0).norm() < 1e-14);
        }
    }

    #[test]
    fn round_trip() {
        let g = grid();
        let f = ComplexField2D::from_fn(g, |x, z| Complex64::new((x * z).sin() + 0.3, x.cos() * z));
        let back = f.fft().ifft();
        for (a, b) in f.values.iter().zip(&back.values) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn single_mode_has_single_coefficient() {
        let g = grid();
        let f = ComplexField2D::from_fn(g, |x, z| Complex64::new(0.0, 3.0 * x + 2.0 * 0.5 * z).exp());
        let spec = f.fft();
        let nonzero: Vec<usize> = (0..g.len()).filter(|&i| spec.coeffs[i].norm() > 1e-9).collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(g.wavenumber(nonzero[0]), (3.0, 1.0));
    }

    #[test]
    fn plancherel() {
        let g = grid();
        let f = ComplexField2D::from_fn(g, |x, z| Complex64::new((2.0 * x).cos() * (0.5 * z).sin(), x.sin()));
        let direct = f.l2_norm().powi(2);
        let spectral = f.fft().quadrature(|_, _| 1.0);
        assert_relative_eq!(direct, spectral, max_relative = 1e-13);
    }

    #[test]
    fn derivatives() {
        let g = grid();
        let f = RealField2D::from_fn(g, |x, _| (3.0 * x).sin());
        let d = f.derivative(Axis::X, 1).unwrap();
        for ix in 0..g.nx {
            assert!((d.values[g.index(ix, 0)] - 3.0 * (3.0 * g.x(ix)).cos()).abs() < 1e-12);
        }
        let c = RealField2D::from_fn(g, |_, _| 2.5);
        assert!(c.derivative(Axis::Z, 2).unwrap().sup_norm() < 1e-13);
        let w = 2.0;
        let e = ComplexField2D::from_fn(g, |x, _| Complex64::new(0.0, w * x).exp());
        let d2 = e.derivative(Axis::X, 2).unwrap();
        for (a, b) in d2.values.iter().zip(&e.values) {
            assert!((a + b * w * w).norm() < 1e-11);
        }
        assert!(f.derivative(Axis::X, 3).is_err());
    }

    #[test]
    fn padding_preserves_samples_and_truncation_inverts_it() {
        let g = grid();
        let f = ComplexField2D::from_fn(g, |x, z| Complex64::new((2.0 * x).cos() + (z).sin(), (x - z).sin()));
        let spec = f.fft().band_limit();
        let fine = spec.pad();
        let back = fine.truncate(g).unwrap();
        for (a, b) in spec.coeffs.iter().zip(&back.coeffs) {
            assert!((a - b).norm() < 1e-12);
        }
        // Every coarse sample is also a fine sample.
        let fv = fine.ifft();
        for ix in 0..g.nx {
            for iz in 0..g.nz {
                let a = f.values[g.index(ix, iz)];
                let b = fv.values[fine.grid.index(2 * ix, 2 * iz)];
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn shift_moves_argmax() {
        let g = grid();
        let f = ComplexField2D::from_fn(g, |x, z| Complex64::new((-(x - 1.0).powi(2) - (z - 2.0).powi(2)).exp(), 0.0));
        let i = f.argmax();
        let s = f.shift(3, -2);
        let j = s.argmax();
        assert_eq!((j / g.nz) as i64, ((i / g.nz) as i64 + 3).rem_euclid(g.nx as i64));
        assert_eq!((j % g.nz) as i64, ((i % g.nz) as i64 - 2).rem_euclid(g.nz as i64));
    }
}
