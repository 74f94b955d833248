//! Davey–Stewartson lumps and the gravity–capillary surfaces they describe.
//!
//! Modules, from the bottom up:
//! - [`dispersion`]: the linear dispersion relation and the envelope coefficients,
//! - [`fields`]: periodic grids, FFT-based fields and Fourier multipliers,
//! - [`ds`]: the envelope functional and its gradient,
//! - [`solver`]: ground states on the natural constraint and surface reconstruction,
//! - [`reduction`]: the water-wave functionals and expansion checks,
//! - [`profile`]: profile decomposition of lattice sequences.

pub mod dispersion;
pub mod ds;
pub mod error;
pub mod fields;
pub mod profile;
pub mod reduction;
pub mod solver;

pub use dispersion::{ds_coefficients, kernel_f, solve_dispersion, DispersionParams, DsCoefficients};
pub use error::{Error, Result};
pub use fields::{ComplexField2D, MultiplierBank, RealField2D, SpectralGrid, Spectrum};
pub use solver::{solve_ground_state, SolveReport, SolverConfig};
