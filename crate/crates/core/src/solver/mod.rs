//! Ground states of `T₀` on the natural constraint set, and the physical
//! surface built from them.
//!
//! Optimizers implement [`Optimizer`] and are looked up by name through
//! [`optimizer`]; `"bb-projected"` is the default.

mod bb;
mod reconstruct;
mod scan;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::DsCoefficients;
use crate::ds::{energy_spectrum, gradient_parts, ray_factor, ray_value, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::fields::{ComplexField2D, SpectralGrid, Spectrum};

pub use bb::BbProjected;
pub use reconstruct::{
    physical_grid, reconstruct_surface, wavepacket, ReconstructionResult, Wavepacket, TRUNCATION_LIMIT,
};
pub use scan::RayScan;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub nz: usize,
    pub lx: f64,
    pub lz: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<SpectralGrid> {
        SpectralGrid::new(self.nx, self.nz, self.lx, self.lz)
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            nx: 256,
            nz: 256,
            lx: 16.0,
            lz: 40.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitialGuess {
    pub amplitude: f64,
    /// Widths in units of `sqrt(a₁/a₃)` and `sqrt(a₂/a₃)`.
    pub sigma_x: f64,
    pub sigma_z: f64,
    /// Relative amplitude of the smooth random perturbation.
    pub noise: f64,
    pub seed: u64,
    /// Translation of the guess in grid cells.
    pub offset: [i64; 2],
}

impl Default for InitialGuess {
    fn default() -> Self {
        Self {
            amplitude: 1.0,
            sigma_x: 1.0,
            sigma_z: 1.0,
            noise: 0.02,
            seed: 0,
            offset: [0, 0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule", content = "tau")]
pub enum StepRule {
    Fixed(f64),
    AdaptiveBb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub grid: GridSpec,
    pub initial: InitialGuess,
    pub step: StepRule,
    pub max_iters: usize,
    pub tol_residual: f64,
    pub recentre_every: usize,
    pub optimizer: String,
    /// Diagnostic bound on `‖ζ‖₁`; exceeding it is reported, not enforced.
    pub norm_bound: f64,
    /// Iterations stop with a collapse error if `‖ζ‖₁` drops below this.
    pub collapse_floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            initial: InitialGuess::default(),
            step: StepRule::AdaptiveBb,
            max_iters: 5000,
            tol_residual: 1e-7,
            recentre_every: 25,
            optimizer: "bb-projected".into(),
            norm_bound: 1e6,
            collapse_floor: 1e-10,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_residual > 0.0 && self.tol_residual.is_finite()) {
            return Err(Error::Domain(format!(
                "tol_residual must be positive, got {}",
                self.tol_residual
            )));
        }
        if self.max_iters < 1 {
            return Err(Error::Domain("max_iters must be at least 1".into()));
        }
        if let StepRule::Fixed(t) = self.step {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Domain(format!("fixed step must be positive, got {t}")));
            }
        }
        let g = &self.initial;
        if !(g.amplitude > 0.0 && g.sigma_x > 0.0 && g.sigma_z > 0.0 && g.noise >= 0.0) {
            return Err(Error::Domain("initial guess needs positive amplitude and widths".into()));
        }
        self.grid.build()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub t0: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub zeta: ComplexField2D,
    pub grid: SpectralGrid,
    pub optimizer: String,
    pub breakdown: EnergyBreakdown,
    /// `‖∇T₀‖₂ / ‖ζ‖₂`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub h1_norm: f64,
    pub norm_bound_exceeded: bool,
    /// `¼ D₁ ‖ζ‖₁²`-style lower bound margin: `T₀ / (¼ D₁ ‖ζ‖₁²)`.
    pub lower_bound_ratio: f64,
    pub trace: Vec<TraceEntry>,
}

pub trait Optimizer: Send + Sync {
    fn name(&self) -> &'static str;
    fn minimise(&self, config: &SolverConfig, coeffs: &DsCoefficients) -> Result<SolveReport>;
}

pub fn available_optimizers() -> Vec<&'static str> {
    vec![BbProjected.name(), RayScan.name()]
}

pub fn optimizer(name: &str) -> Result<Box<dyn Optimizer>> {
    match name {
        "bb-projected" => Ok(Box::new(BbProjected)),
        "ray-scan" => Ok(Box::new(RayScan)),
        _ => Err(Error::UnknownStrategy {
            name: name.to_string(),
            available: available_optimizers().join(", "),
        }),
    }
}

/// Runs the optimizer named in `config`. A run that exhausts its budget
/// yields [`Error::NoConvergence`] carrying the final report.
pub fn solve_ground_state(config: &SolverConfig, coeffs: &DsCoefficients) -> Result<SolveReport> {
    config.validate()?;
    let report = optimizer(&config.optimizer)?.minimise(config, coeffs)?;
    if report.converged {
        Ok(report)
    } else {
        Err(Error::NoConvergence(Box::new(report)))
    }
}

/// Anisotropic Gaussian centred on the grid origin (with periodic wrap),
/// optionally perturbed and translated.
pub fn initial_guess(grid: SpectralGrid, guess: &InitialGuess, c: &DsCoefficients) -> ComplexField2D {
    let sx = guess.sigma_x * (c.a1 / c.a3).sqrt();
    let sz = guess.sigma_z * (c.a2 / c.a3).sqrt();
    let wrap = |u: f64, l: f64| u - l * (u / l).round();

    let mut rng = ChaCha8Rng::seed_from_u64(guess.seed);
    const MODES: i32 = 3;
    let mut terms = Vec::new();
    if guess.noise > 0.0 {
        for mx in -MODES..=MODES {
            for mz in -MODES..=MODES {
                let a: f64 = rng.random_range(-1.0..1.0);
                let ph: f64 = rng.random_range(0.0..2.0 * PI);
                terms.push((mx as f64, mz as f64, a, ph));
            }
        }
    }
    let norm = guess.noise / ((2 * MODES + 1) as f64);
    let (kx, kz) = (PI / (4.0 * sx), PI / (4.0 * sz));

    let field = ComplexField2D::from_fn(grid, |x, z| {
        let (u, v) = (wrap(x, grid.lx), wrap(z, grid.lz));
        let base = (-(u * u) / (2.0 * sx * sx) - v * v / (2.0 * sz * sz)).exp();
        let pert: f64 = terms
            .iter()
            .map(|&(mx, mz, a, ph)| a * (mx * kx * u + mz * kz * v + ph).cos())
            .sum();
        Complex64::new(guess.amplitude * base * (1.0 + norm * pert), 0.0)
    });
    let field = field.fft().band_limit().ifft();
    field.shift(guess.offset[0], guess.offset[1])
}

/// State of an iterate sitting on the natural constraint.
#[derive(Clone)]
pub(crate) struct Point {
    pub spec: Spectrum,
    pub energy: EnergyBreakdown,
    /// `∇T₀` at `spec` as a spectrum.
    pub grad: Spectrum,
}

/// Quadratic and quartic gradient parts at an arbitrary (unprojected) field.
pub(crate) struct Parts {
    energy: EnergyBreakdown,
    lin: Spectrum,
    cubic: Spectrum,
}

pub(crate) fn parts(spec: &Spectrum, c: &DsCoefficients) -> Parts {
    let (energy, lin, cubic) = gradient_parts(spec, c);
    Parts { energy, lin, cubic }
}

impl Parts {
    /// `T₀` after projecting onto the constraint: `Q² / 4S`.
    pub fn projected_value(&self) -> f64 {
        self.energy.q * self.energy.q / (4.0 * self.energy.s)
    }

    /// Scales onto the natural constraint.
    pub fn project(self, spec: Spectrum) -> Result<Point> {
        let l = ray_factor(&self.energy)?;
        let (l2, l3, l4) = (l * l, l * l * l, l * l * l * l);
        let e = self.energy;
        let (q, snl, sloc) = (e.q * l2, e.s_nonlocal * l4, e.s_local * l4);
        let energy = EnergyBreakdown::new(q, snl, sloc);
        let coeffs = self
            .lin
            .coeffs
            .par_iter()
            .zip(self.cubic.coeffs.par_iter())
            .map(|(a, b)| a * l - b * l3)
            .collect();
        Ok(Point {
            spec: spec.scale(l),
            energy,
            grad: Spectrum {
                grid: self.lin.grid,
                coeffs,
            },
        })
    }
}

pub(crate) fn preconditioner(c: &DsCoefficients) -> impl Fn(f64, f64) -> f64 + Sync + '_ {
    move |k1, k2| 1.0 / (2.0 * (c.a1 * k1 * k1 + c.a2 * k2 * k2 + c.a3))
}

pub(crate) fn l2(spec: &Spectrum) -> f64 {
    spec.quadrature(|_, _| 1.0).sqrt()
}

pub(crate) fn residual(p: &Point) -> f64 {
    l2(&p.grad) / l2(&p.spec)
}

/// `spec + s·dir` on the same grid.
pub(crate) fn axpy(spec: &Spectrum, s: f64, dir: &Spectrum) -> Spectrum {
    Spectrum {
        grid: spec.grid,
        coeffs: spec
            .coeffs
            .par_iter()
            .zip(dir.coeffs.par_iter())
            .map(|(a, b)| a + b * s)
            .collect(),
    }
}

pub(crate) fn sub(a: &Spectrum, b: &Spectrum) -> Spectrum {
    axpy(a, -1.0, b)
}

/// Exact circular shift of a band-limited spectrum by whole cells.
pub(crate) fn shift_spectrum(spec: &Spectrum, sx: i64, sz: i64) -> Spectrum {
    let g = spec.grid;
    let (dx, dz) = (sx as f64 * g.dx(), sz as f64 * g.dz());
    spec.clone().map_phase(|k1, k2| -(k1 * dx + k2 * dz))
}

impl Spectrum {
    fn map_phase(mut self, phase: impl Fn(f64, f64) -> f64 + Sync) -> Spectrum {
        let grid = self.grid;
        self.coeffs.par_iter_mut().enumerate().for_each(|(i, c)| {
            let (k1, k2) = grid.wavenumber(i);
            *c *= Complex64::from_polar(1.0, phase(k1, k2));
        });
        self
    }
}

/// Cell offset moving the peak of `spec` onto the origin.
pub(crate) fn peak_offset(spec: &Spectrum) -> (i64, i64) {
    let g = spec.grid;
    let i = spec.ifft().argmax();
    let (ix, iz) = ((i / g.nz) as i64, (i % g.nz) as i64);
    (-ix, -iz)
}

pub(crate) fn recentre(p: &mut Point, extra: &mut [&mut Spectrum]) {
    let (sx, sz) = peak_offset(&p.spec);
    if sx == 0 && sz == 0 {
        return;
    }
    p.spec = shift_spectrum(&p.spec, sx, sz);
    p.grad = shift_spectrum(&p.grad, sx, sz);
    for s in extra.iter_mut() {
        **s = shift_spectrum(s, sx, sz);
    }
}

/// Projected starting point; the guess is recentred before the first step.
pub(crate) fn start(config: &SolverConfig, c: &DsCoefficients) -> Result<(SpectralGrid, Point)> {
    let grid = config.grid.build()?;
    let z0 = initial_guess(grid, &config.initial, c);
    let spec = z0.fft().band_limit();
    let (sx, sz) = peak_offset(&spec);
    let spec = shift_spectrum(&spec, sx, sz);
    let p = parts(&spec, c).project(spec)?;
    Ok((grid, p))
}

pub(crate) fn check_collapse(p: &Point, floor: f64) -> Result<()> {
    let h1 = p.spec.quadrature(|a, b| 1.0 + a * a + b * b).sqrt();
    if !(h1 >= floor) {
        return Err(Error::Collapse { norm: h1, floor });
    }
    Ok(())
}

pub(crate) fn finish(
    p: Point,
    c: &DsCoefficients,
    config: &SolverConfig,
    name: &str,
    iterations: usize,
    trace: Vec<TraceEntry>,
) -> SolveReport {
    let r = residual(&p);
    let h1 = p.spec.quadrature(|a, b| 1.0 + a * a + b * b).sqrt();
    // Recompute the energy from scratch rather than trusting the scaled values.
    let breakdown = energy_spectrum(&p.spec, c);
    let converged = r <= config.tol_residual && breakdown.nehari_defect() <= 1e-8 && breakdown.t0 > 0.0;
    SolveReport {
        zeta: p.spec.ifft(),
        grid: p.spec.grid,
        optimizer: name.to_string(),
        breakdown,
        residual: r,
        iterations,
        converged,
        h1_norm: h1,
        norm_bound_exceeded: h1 > config.norm_bound,
        lower_bound_ratio: breakdown.t0 / (0.25 * c.coercivity() * h1 * h1),
        trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::{ds_coefficients, solve_dispersion};
    use crate::ds::{energy, gradient};

    fn coeffs() -> DsCoefficients {
        ds_coefficients(&solve_dispersion(0.25).unwrap()).unwrap()
    }

    #[test]
    fn registry() {
        assert!(optimizer("bb-projected").is_ok());
        assert!(optimizer("ray-scan").is_ok());
        match optimizer("newton") {
            Err(Error::UnknownStrategy { available, .. }) => assert!(available.contains("ray-scan")),
            other => panic!("unexpected {:?}", other.map(|o| o.name())),
        }
    }

    #[test]
    fn validation() {
        let mut cfg = SolverConfig {
            tol_residual: 0.0,
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Domain(_))));
        cfg.tol_residual = 1e-6;
        cfg.max_iters = 0;
        assert!(cfg.validate().is_err());
        cfg.max_iters = 10;
        cfg.grid.nx = 100;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn projected_parts_match_direct_evaluation() {
        let c = coeffs();
        let grid = SpectralGrid::new(32, 32, 6.0, 12.0).unwrap();
        let z = initial_guess(grid, &InitialGuess::default(), &c);
        let spec = z.fft().band_limit();
        let p = parts(&spec, &c).project(spec).unwrap();
        let zz = p.spec.ifft();
        let e = energy(&zz, &c);
        assert!((e.q - p.energy.q).abs() < 1e-12 * e.q);
        assert!((e.s - p.energy.s).abs() < 1e-12 * e.s);
        let g = gradient(&zz, &c);
        let diff = g.sub(&p.grad.ifft()).unwrap().l2_norm();
        assert!(diff < 1e-12 * g.l2_norm());
    }

    #[test]
    fn spectral_shift_matches_sample_shift() {
        let c = coeffs();
        let grid = SpectralGrid::new(32, 16, 6.0, 12.0).unwrap();
        let z = initial_guess(grid, &InitialGuess::default(), &c);
        let a = shift_spectrum(&z.fft().band_limit(), 3, -5).ifft();
        let b = z.shift(3, -5);
        assert!(a.sub(&b).unwrap().sup_norm() < 1e-12);
    }
}
