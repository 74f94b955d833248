//! Fourier multipliers `m(D)` indexed by name.
//!
//! Every symbol is real and even under `k → −k`, so real fields stay real.
//! Symbol arrays are evaluated lazily per grid and cached; Nyquist lines are
//! always zero so multipliers preserve the band.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};


use super::{ComplexField2D, RealField2D, SpectralGrid, Spectrum};
use crate::dispersion::{kernel_f, DispersionParams};
use crate::error::{Error, Result};

/// A real, even Fourier symbol `m(k₁, k₂)`.
pub trait Symbol: Send + Sync {
    fn name(&self) -> &str;
    fn eval(&self, k1: f64, k2: f64) -> f64;
}

struct FnSymbol<F> {
    name: String,
    f: F,
}

impl<F: Fn(f64, f64) -> f64 + Send + Sync> Symbol for FnSymbol<F> {
    fn name(&self) -> &str {
        &self.name
    }

    fn eval(&self, k1: f64, k2: f64) -> f64 {
        (self.f)(k1, k2)
    }
}

/// Builds a [`Symbol`] from a closure.
pub fn symbol_fn(
    name: &str,
    f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
) -> Box<dyn Symbol> {
    Box::new(FnSymbol {
        name: name.to_string(),
        f,
    })
}

/// `k₁²/|k|²`-type direction factors, zero at the origin.
fn direction(a: f64, b: f64, k1: f64, k2: f64) -> f64 {
    let r2 = k1 * k1 + k2 * k2;
    if r2 == 0.0 {
        0.0
    } else {
        a * b / r2
    }
}

type GridKey = (usize, usize, u64, u64);

fn key(g: &SpectralGrid) -> GridKey {
    (g.nx, g.nz, g.lx.to_bits(), g.lz.to_bits())
}

/// Registry of named multipliers built around one dispersion relation and
/// one cutoff radius `δ`.
///
/// Built-in names: `K0`, `L0`, `H0`, `chi_plus`, `chi_minus`, `chi`, `m_DS`,
/// `gtilde`, `gtilde2`, `red_F`, `cov`.
pub struct MultiplierBank {
    params: DispersionParams,
    delta: f64,
    symbols: BTreeMap<String, Box<dyn Symbol>>,
    cache: Mutex<HashMap<(String, GridKey), Arc<Vec<f64>>>>,
}

impl std::fmt::Debug for MultiplierBank {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MultiplierBank")
            .field("params", &self.params)
            .field("delta", &self.delta)
            .field("symbols", &self.symbols.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl MultiplierBank {
    /// Bank with the default cutoff `δ = ω/4`.
    pub fn with_default_delta(params: DispersionParams) -> Self {
        Self::new(params, params.omega / 4.0).expect("ω/4 is an admissible cutoff")
    }

    pub fn new(params: DispersionParams, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < params.omega / 3.0) {
            return Err(Error::Domain(format!(
                "cutoff radius {delta} must lie in (0, ω/3) = (0, {})",
                params.omega / 3.0
            )));
        }
        let mut bank = Self {
            params,
            delta,
            symbols: BTreeMap::new(),
            cache: Mutex::new(HashMap::new()),
        };
        bank.register_builtins();
        Ok(bank)
    }

    fn register_builtins(&mut self) {
        let p = self.params;
        let (w, lam, d) = (p.omega, p.lambda_crit, self.delta);
        let in_ball = move |k1: f64, k2: f64, c: f64| (k1 - c).powi(2) + k2 * k2 < d * d;

        self.register(symbol_fn("K0", |k1, k2| {
            direction(k1, k1, k1, k2) * kernel_f(k1.hypot(k2)).f
        }));
        self.register(symbol_fn("L0", |k1, k2| {
            direction(k1, k2, k1, k2) * kernel_f(k1.hypot(k2)).f
        }));
        self.register(symbol_fn("H0", |k1, k2| {
            direction(k2, k2, k1, k2) * kernel_f(k1.hypot(k2)).f
        }));
        self.register(symbol_fn("chi_plus", move |k1, k2| {
            if in_ball(k1, k2, w) {
                1.0
            } else {
                0.0
            }
        }));
        self.register(symbol_fn("chi_minus", move |k1, k2| {
            if in_ball(k1, k2, -w) {
                1.0
            } else {
                0.0
            }
        }));
        self.register(symbol_fn("chi", move |k1, k2| {
            if in_ball(k1, k2, w) || in_ball(k1, k2, -w) {
                1.0
            } else {
                0.0
            }
        }));
        self.register(symbol_fn("m_DS", move |k1, k2| {
            let den = (1.0 - lam) * k1 * k1 + k2 * k2;
            if den == 0.0 {
                0.0
            } else {
                k1 * k1 / den
            }
        }));
        self.register(symbol_fn("gtilde", move |k1, k2| p.gtilde(k1, k2)));
        self.register(symbol_fn("gtilde2", move |k1, k2| p.gtilde2(k1, k2)));
        self.register(symbol_fn("red_F", move |k1, k2| {
            if in_ball(k1, k2, w) || in_ball(k1, k2, -w) {
                0.0
            } else {
                1.0 / p.gtilde(k1, k2)
            }
        }));
        self.register(symbol_fn("cov", move |k1, k2| {
            if !(in_ball(k1, k2, w) || in_ball(k1, k2, -w)) {
                return 0.0;
            }
            let r = ((k1.abs() - w).powi(2) + k2 * k2).sqrt();
            if r < 1e-6 * w {
                return 1.0;
            }
            (p.gtilde2(k1, k2) / p.gtilde(k1, k2)).sqrt()
        }));
    }

    /// Adds or replaces a symbol.
    pub fn register(&mut self, symbol: Box<dyn Symbol>) {
        let name = symbol.name().to_string();
        self.cache
            .get_mut()
            .expect("multiplier cache poisoned")
            .retain(|(n, _), _| *n != name);
        self.symbols.insert(name, symbol);
    }

    pub fn names(&self) -> Vec<&str> {
        self.symbols.keys().map(String::as_str).collect()
    }

    pub fn params(&self) -> &DispersionParams {
        &self.params
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eval(&self, name: &str, k1: f64, k2: f64) -> Result<f64> {
        self.symbols
            .get(name)
            .map(|s| s.eval(k1, k2))
            .ok_or_else(|| Error::UnknownSymbol(name.to_string()))
    }

    /// Symbol sampled on the modes of `grid` (zero on Nyquist lines).
    pub fn array(&self, name: &str, grid: &SpectralGrid) -> Result<Arc<Vec<f64>>> {
        let symbol = self
            .symbols
            .get(name)
            .ok_or_else(|| Error::UnknownSymbol(name.to_string()))?;
        let k = (name.to_string(), key(grid));
        if let Some(a) = self.cache.lock().expect("multiplier cache poisoned").get(&k) {
            return Ok(a.clone());
        }
        let values: Vec<f64> = (0..grid.len())
            .map(|i| {
                if grid.in_band(i) {
                    let (k1, k2) = grid.wavenumber(i);
                    symbol.eval(k1, k2)
                } else {
                    0.0
                }
            })
            .collect();
        let arc = Arc::new(values);
        self.cache
            .lock()
            .expect("multiplier cache poisoned")
            .entry(k)
            .or_insert_with(|| arc.clone());
        Ok(arc)
    }

    pub fn apply_spectrum(&self, spec: &Spectrum, name: &str) -> Result<Spectrum> {
        let m = self.array(name, &spec.grid)?;
        Ok(spec.apply_array(&m))
    }

    /// `m(D)u` for a real field; the imaginary round-off is discarded.
    pub fn apply(&self, field: &RealField2D, name: &str) -> Result<RealField2D> {
        Ok(self.apply_spectrum(&field.fft(), name)?.ifft_real())
    }

    pub fn apply_complex(&self, field: &ComplexField2D, name: &str) -> Result<ComplexField2D> {
        Ok(self.apply_spectrum(&field.fft(), name)?.ifft())
    }

    /// Number of grid modes inside each cutoff ball.
    pub fn modes_in_ball(&self, grid: &SpectralGrid) -> Result<usize> {
        let chi = self.array("chi_plus", grid)?;
        Ok(chi.iter().filter(|&&c| c > 0.0).count())
    }

    /// Fails unless each cutoff ball holds at least `min_modes` modes and
    /// lies inside the resolved band.
    pub fn check_resolution(&self, grid: &SpectralGrid, min_modes: usize) -> Result<()> {
        let n = self.modes_in_ball(grid)?;
        if n < min_modes {
            return Err(Error::Resolution(format!(
                "{n} modes inside the cutoff ball of radius {:.4}, need at least {min_modes}",
                self.delta
            )));
        }
        let (kx, kz) = grid.k_max();
        if kx < self.params.omega + self.delta || kz < self.delta {
            return Err(Error::Resolution(format!(
                "band |k1| <= {kx:.3}, |k2| <= {kz:.3} does not contain the cutoff balls"
            )));
        }
        Ok(())
    }

    /// Splits `η` into `η₁⁺ = F⁻¹[χ⁺η̂]`, `η₁⁻ = conj(η₁⁺)` and the remainder
    /// `η₂ = η − 2 Re η₁⁺`.
    pub fn split_spectrum(
        &self,
        eta: &RealField2D,
    ) -> Result<(ComplexField2D, ComplexField2D, RealField2D)> {
        self.check_resolution(&eta.grid, 8)?;
        let plus = self.apply_spectrum(&eta.fft(), "chi_plus")?.ifft();
        let minus = plus.conj();
        let values = eta
            .values
            .iter()
            .zip(&plus.values)
            .map(|(e, p)| e - 2.0 * p.re)
            .collect();
        let rest = RealField2D {
            grid: eta.grid,
            values,
        };
        Ok((plus, minus, rest))
    }
}
