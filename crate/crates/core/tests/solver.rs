use dslump::ds::energy;
use dslump::reduction::{functional_h, l3_pairing, reduction_f, VerifyContext};
use dslump::solver::{optimizer, reconstruct_surface, wavepacket, GridSpec, SolverConfig};
use dslump::{ds_coefficients, solve_dispersion, ComplexField2D, MultiplierBank, SpectralGrid};
use num_complex::Complex64;

fn small_config() -> SolverConfig {
    SolverConfig {
        grid: GridSpec {
            nx: 128,
            nz: 128,
            lx: 16.0,
            lz: 40.0,
        },
        ..SolverConfig::default()
    }
}

#[test]
fn converged_report_satisfies_invariants() {
    let c = ds_coefficients(&solve_dispersion(0.25).unwrap()).unwrap();
    let cfg = small_config();
    let r = optimizer("bb-projected").unwrap().minimise(&cfg, &c).unwrap();
    assert!(r.converged);
    assert!(r.residual <= cfg.tol_residual);
    assert!(r.breakdown.nehari_defect() <= 1e-8);
    assert!(r.breakdown.t0 > 0.0);
    assert!(r.lower_bound_ratio >= 1.0);
    for w in r.trace.windows(2) {
        assert!(w[1].t0 <= w[0].t0 * (1.0 + 1e-12), "T0 increased: {} -> {}", w[0].t0, w[1].t0);
    }
    let e = energy(&r.zeta, &c);
    assert!((e.t0 - r.breakdown.t0).abs() < 1e-14 * e.t0);
}

#[test]
fn translated_guess_reaches_same_energy() {
    let c = ds_coefficients(&solve_dispersion(0.25).unwrap()).unwrap();
    let cfg = small_config();
    let mut moved = cfg.clone();
    moved.initial.offset = [5, 3];
    let a = optimizer("bb-projected").unwrap().minimise(&cfg, &c).unwrap();
    let b = optimizer("bb-projected").unwrap().minimise(&moved, &c).unwrap();
    let rel = (a.breakdown.t0 - b.breakdown.t0).abs() / a.breakdown.t0;
    assert!(rel < 1e-10, "{rel}");
}

#[test]
fn solves_are_deterministic() {
    let c = ds_coefficients(&solve_dispersion(0.25).unwrap()).unwrap();
    let mut cfg = small_config();
    cfg.initial.seed = 9;
    let a = optimizer("bb-projected").unwrap().minimise(&cfg, &c).unwrap();
    let b = optimizer("bb-projected").unwrap().minimise(&cfg, &c).unwrap();
    assert_eq!(a.zeta, b.zeta);
    assert_eq!(a.trace, b.trace);
}

#[test]
fn invalid_configs_rejected() {
    let cfg = SolverConfig {
        tol_residual: 0.0,
        ..SolverConfig::default()
    };
    assert!(cfg.validate().is_err());
    let cfg = SolverConfig {
        max_iters: 0,
        ..SolverConfig::default()
    };
    assert!(cfg.validate().is_err());
    assert!(optimizer("simplex").is_err());
}

fn envelope() -> ComplexField2D {
    VerifyContext::default_envelope()
}

#[test]
fn constant_envelope_gives_a_cosine() {
    let p = solve_dispersion(0.25).unwrap();
    let bank = MultiplierBank::with_default_delta(p);
    let g = SpectralGrid::new(32, 32, 52.0, 52.0).unwrap();
    let amp = 0.7;
    let zeta = ComplexField2D::from_fn(g, |_, _| Complex64::new(amp, 0.0));
    let eps = 0.1;
    let wp = wavepacket(&zeta, eps, &bank).unwrap();
    let grid = wp.eta1_tilde.grid;
    for i in (0..grid.nx).step_by(7) {
        for j in (0..grid.nz).step_by(5) {
            let expect = eps * amp * (p.omega * grid.x(i)).cos();
            assert!((wp.eta1_tilde.values[grid.index(i, j)] - expect).abs() < 1e-12);
        }
    }
}

#[test]
fn zero_envelope_and_zero_epsilon() {
    let p = solve_dispersion(0.25).unwrap();
    let c = ds_coefficients(&p).unwrap();
    let bank = MultiplierBank::with_default_delta(p);
    let zero = ComplexField2D::zeros(envelope().grid);
    let r = reconstruct_surface(&zero, 0.1, &p, &c, &bank).unwrap();
    assert_eq!(r.eta.sup_norm(), 0.0);
    let r = reconstruct_surface(&envelope(), 0.0, &p, &c, &bank).unwrap();
    assert_eq!(r.eta.sup_norm(), 0.0);
    assert!((r.wave_speed - p.lambda_crit.sqrt()).abs() < 1e-15);
}

#[test]
fn wave_speed_below_critical() {
    let p = solve_dispersion(0.25).unwrap();
    let c = ds_coefficients(&p).unwrap();
    let bank = MultiplierBank::with_default_delta(p);
    for eps in [0.2, 0.1, 0.05] {
        let r = reconstruct_surface(&envelope(), eps, &p, &c, &bank).unwrap();
        assert!(r.wave_speed < p.lambda_crit.sqrt());
        let (a, b) = (r.eta1.fft(), r.eta2_approx.fft());
        for (x, y) in a.coeffs.iter().zip(&b.coeffs) {
            assert!(x.norm() * y.norm() <= 1e-12 * (1.0 + x.norm_sqr() + y.norm_sqr()));
        }
    }
}

#[test]
fn scaled_norm_matches_envelope_norm() {
    // |||η̃₁|||² = ½‖ζ‖₁²
    let bank = MultiplierBank::with_default_delta(solve_dispersion(0.25).unwrap());
    let zeta = envelope();
    let target = 0.5 * zeta.h1_norm().powi(2);
    for eps in [0.1, 0.05] {
        let wp = wavepacket(&zeta, eps, &bank).unwrap();
        let got = wp.eta1_tilde.scaled_norm(eps, bank.params().omega).powi(2);
        assert!((got - target).abs() < 0.01 * target, "eps {eps}: {got} vs {target}");
    }
}

#[test]
fn sup_estimate_trend() {
    // ‖η̂₁‖_{L¹} / |||η₁||| decreases with ε
    let bank = MultiplierBank::with_default_delta(solve_dispersion(0.25).unwrap());
    let omega = bank.params().omega;
    let ratios: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&eps| {
            let wp = wavepacket(&envelope(), eps, &bank).unwrap();
            wp.eta1.fft().l1_norm() / wp.eta1.scaled_norm(eps, omega)
        })
        .collect();
    assert!(ratios[0] > ratios[1] && ratios[1] > ratios[2], "{ratios:?}");
}

#[test]
fn quadratic_energy_splits_over_disjoint_spectra() {
    let p = solve_dispersion(0.25).unwrap();
    let bank = MultiplierBank::with_default_delta(p);
    for eps in [0.2, 0.1] {
        let wp = wavepacket(&envelope(), eps, &bank).unwrap();
        let f = reduction_f(&wp.eta1, eps, &bank).unwrap();
        let sum = wp.eta1.add(&f).unwrap();
        let lhs = functional_h(&sum, &p);
        let rhs = functional_h(&wp.eta1, &p) + functional_h(&f, &p);
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs(), "{lhs} vs {rhs}");
        // the correction is quadratically small relative to the packet
        let ratio = f.h3_norm() / wp.eta1.scaled_norm(eps, p.omega).powi(2);
        assert!(ratio.is_finite() && ratio < 50.0, "{ratio}");
    }
}

#[test]
fn cubic_pairing_matches_quadratic_energy() {
    let p = solve_dispersion(0.25).unwrap();
    let bank = MultiplierBank::with_default_delta(p);
    let wp = wavepacket(&envelope(), 0.1, &bank).unwrap();
    let (lhs, rhs) = l3_pairing(&wp, &bank).unwrap();
    assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()), "{lhs} vs {rhs}");
}
