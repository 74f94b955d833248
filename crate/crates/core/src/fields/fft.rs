//! Two-dimensional FFTs on the row-major `(x, z)` layout.
//!
//! Convention: the forward transform is the unnormalised DFT
//! `U_k = Σ_x u(x) e^{-i k·x}`, the inverse carries the factor `1/(nx·nz)`.
//! With cell area `ΔA`, the unitary continuous transform is approximated by
//! `û(k) ≈ ΔA U_k / 2π`, so `∫ m(k)|û|² dk ≈ (ΔA / N) Σ m_k |U_k|²`.
//!
//! Plans are cached process-wide per length. Each row is transformed
//! independently, so parallel execution gives bitwise the same result as a
//! serial run.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

type Plan = Arc<dyn Fft<f64>>;

fn plans(n: usize) -> (Plan, Plan) {
    static CACHE: OnceLock<Mutex<HashMap<usize, (Plan, Plan)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

const ROWS_PER_TASK: usize = 8;

fn transform_rows(data: &mut [Complex64], row_len: usize, plan: &Plan) {
    data.par_chunks_mut(row_len * ROWS_PER_TASK)
        .for_each(|chunk| plan.process(chunk));
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    dst.par_chunks_mut(rows).enumerate().for_each(|(c, out)| {
        for (r, v) in out.iter_mut().enumerate() {
            *v = src[r * cols + c];
        }
    });
}

fn transform(data: &mut [Complex64], nx: usize, nz: usize, forward: bool) {
    assert_eq!(data.len(), nx * nz);
    let (fz, iz) = plans(nz);
    let (fx, ix) = plans(nx);
    let (pz, px) = if forward { (fz, fx) } else { (iz, ix) };

    transform_rows(data, nz, &pz);
    let mut t = vec![Complex64::new(0.0, 0.0); data.len()];
    transpose(data, &mut t, nx, nz);
    transform_rows(&mut t, nx, &px);
    transpose(&t, data, nz, nx);
}

/// In-place unnormalised forward transform.
pub fn forward(data: &mut [Complex64], nx: usize, nz: usize) {
    transform(data, nx, nz, true);
}

/// In-place inverse transform including the `1/N` factor.
pub fn inverse(data: &mut [Complex64], nx: usize, nz: usize) {
    transform(data, nx, nz, false);
    let scale = 1.0 / (nx * nz) as f64;
    data.par_iter_mut().for_each(|v| *v *= scale);
}
