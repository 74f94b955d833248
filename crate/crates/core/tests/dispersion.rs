use dslump::dispersion::{ds_coefficients, kernel_f, solve_dispersion};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn identities_hold(beta in 0.02f64..0.33) {
        let p = solve_dispersion(beta).unwrap();
        let (b, l) = p.identity_check();
        prop_assert!((b - beta).abs() < 1e-10);
        prop_assert!((l - p.lambda_crit).abs() < 1e-10);
    }

    #[test]
    fn coefficients_positive(beta in 0.02f64..0.33) {
        let p = solve_dispersion(beta).unwrap();
        let c = ds_coefficients(&p).unwrap();
        prop_assert!(c.c1 > 0.0 && c.c2 > 0.0);
        prop_assert!(c.a1 > 0.0 && c.a2 > 0.0 && c.a3 > 0.0);
        prop_assert!(p.d2g(p.omega) > 0.0);
        prop_assert!(p.gtilde_d22() > 0.0);
        prop_assert!((p.gtilde_d22() - p.gtilde_d22_numeric()).abs() < 1e-7 * p.gtilde_d22());
    }

    #[test]
    fn g_touches_zero_only_at_omega(beta in 0.02f64..0.33) {
        let p = solve_dispersion(beta).unwrap();
        let n = 10_000;
        let h = 10.0 * p.omega / n as f64;
        let vals: Vec<(f64, f64)> = (0..=n).map(|i| (i as f64 * h, p.g(i as f64 * h))).collect();
        prop_assert!(vals.iter().all(|v| v.1 >= -1e-12));
        let min = vals.iter().copied().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        prop_assert!((min.0 - p.omega).abs() <= h);
        // away from ω the symbol is bounded below by its quadratic growth
        let far = vals.iter().filter(|v| (v.0 - p.omega).abs() > 0.1 * p.omega);
        let floor = 0.25 * p.d2g(p.omega) * (0.1 * p.omega).powi(2) * 0.5;
        for v in far {
            prop_assert!(v.1 > floor.min(1e-6), "g({}) = {}", v.0, v.1);
        }
    }

    #[test]
    fn kernel_is_even(s in 0.0f64..20.0) {
        let (a, b) = (kernel_f(s), kernel_f(-s));
        prop_assert_eq!(a.f, b.f);
        prop_assert_eq!(a.df, -b.df);
        prop_assert_eq!(a.d2f, b.d2f);
    }

    #[test]
    fn gtilde_nonnegative(k1 in -6.0f64..6.0, k2 in -6.0f64..6.0) {
        let p = solve_dispersion(0.25).unwrap();
        prop_assert!(p.gtilde(k1, k2) >= -1e-12);
    }
}

#[test]
fn kernel_branches_agree_across_switch() {
    for i in 0..=450 {
        let s = 0.05 + 0.001 * i as f64;
        let k = kernel_f(s);
        let direct = s / s.tanh();
        assert!((k.f - direct).abs() < 1e-13, "s = {s}");
    }
    let (lo, hi) = (kernel_f(0.5 - 1e-12), kernel_f(0.5 + 1e-12));
    // the two points are 2e-12 apart, so allow for the slope
    assert!((lo.f - hi.f).abs() < 1e-13 + 2e-12 * lo.df.abs());
    assert!((lo.df - hi.df).abs() < 1e-11);
    assert!((lo.d2f - hi.d2f).abs() < 1e-10);
}

#[test]
fn out_of_regime_rejected() {
    for beta in [0.0, -0.1, 1.0 / 3.0, 0.5, f64::NAN] {
        assert!(solve_dispersion(beta).is_err(), "beta = {beta}");
    }
}
