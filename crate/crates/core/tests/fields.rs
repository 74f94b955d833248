use dslump::fields::io::Field;
use dslump::{ComplexField2D, MultiplierBank, RealField2D, SpectralGrid, Spectrum};
use dslump::solve_dispersion;
use num_complex::Complex64;
use proptest::prelude::*;

fn grid() -> SpectralGrid {
    SpectralGrid::new(32, 16, 12.0, 7.0).unwrap()
}

fn field_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, 2 * 32 * 16)
}

fn complex_field(v: &[f64]) -> ComplexField2D {
    let values = v.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
    ComplexField2D::new(grid(), values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fft_round_trip(v in field_strategy()) {
        let u = complex_field(&v);
        let back = u.fft().ifft();
        for (a, b) in u.values.iter().zip(&back.values) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn plancherel(v in field_strategy()) {
        let u = complex_field(&v);
        let phys = u.l2_norm().powi(2);
        let spec = u.fft().quadrature(|_, _| 1.0);
        prop_assert!((phys - spec).abs() < 1e-12 * phys.max(1.0));
    }

    #[test]
    fn pad_truncate_round_trip(v in field_strategy()) {
        let s = complex_field(&v).fft().band_limit();
        let back = s.pad().truncate(grid()).unwrap();
        for (a, b) in s.coeffs.iter().zip(&back.coeffs) {
            prop_assert!((a - b).norm() < 1e-10);
        }
        // the padded spectrum represents the same function
        let coarse = s.ifft();
        let fine = s.pad().ifft();
        for i in 0..grid().nx {
            for j in 0..grid().nz {
                let a = coarse.values[grid().index(i, j)];
                let b = fine.values[grid().refined().index(2 * i, 2 * j)];
                prop_assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn multipliers_commute(v in field_strategy(), a in 0usize..7, b in 0usize..7) {
        let bank = MultiplierBank::with_default_delta(solve_dispersion(0.25).unwrap());
        let names = ["K0", "L0", "H0", "chi", "chi_plus", "m_DS", "gtilde"];
        let s = complex_field(&v).fft();
        let ab = bank.apply_spectrum(&bank.apply_spectrum(&s, names[a]).unwrap(), names[b]).unwrap();
        let ba = bank.apply_spectrum(&bank.apply_spectrum(&s, names[b]).unwrap(), names[a]).unwrap();
        let scale = s.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
        for (x, y) in ab.coeffs.iter().zip(&ba.coeffs) {
            prop_assert!((x - y).norm() <= 1e-12 * scale * 100.0);
        }
    }

    #[test]
    fn binary_and_csv_round_trip(v in field_strategy()) {
        let c = complex_field(&v);
        let r = c.re();
        for f in [Field::Complex(c), Field::Real(r)] {
            let mut buf = vec![];
            f.write_binary(&mut buf).unwrap();
            prop_assert_eq!(&Field::read_binary(buf.as_slice()).unwrap(), &f);
            let mut buf = vec![];
            f.write_csv(&mut buf).unwrap();
            prop_assert_eq!(&Field::read_csv(buf.as_slice()).unwrap(), &f);
        }
    }

    #[test]
    fn symbols_even(k1 in -5.0f64..5.0, k2 in -5.0f64..5.0) {
        let bank = MultiplierBank::with_default_delta(solve_dispersion(0.25).unwrap());
        for name in ["K0", "L0", "H0", "chi", "m_DS", "gtilde", "gtilde2", "cov"] {
            let a = bank.eval(name, k1, k2).unwrap();
            let b = bank.eval(name, -k1, -k2).unwrap();
            prop_assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0), "{}", name);
        }
        let (p, m) = (bank.eval("chi_plus", k1, k2).unwrap(), bank.eval("chi_minus", k1, k2).unwrap());
        prop_assert!(p * m == 0.0);
        prop_assert_eq!(p + m, bank.eval("chi", k1, k2).unwrap());
    }
}

#[test]
fn derivative_of_a_mode() {
    let g = grid();
    let u = RealField2D::from_fn(g, |x, z| (2.0 * std::f64::consts::PI * 3.0 * x / g.lx).sin() * (2.0 * std::f64::consts::PI * z / g.lz).cos());
    let ux = u.derivative(dslump::fields::Axis::X, 1).unwrap();
    let k = 2.0 * std::f64::consts::PI * 3.0 / g.lx;
    let expect = RealField2D::from_fn(g, |x, z| k * (k * x).cos() * (2.0 * std::f64::consts::PI * z / g.lz).cos());
    for (a, b) in ux.values.iter().zip(&expect.values) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn concurrent_results_are_bitwise_serial() {
    let g = SpectralGrid::new(128, 128, 10.0, 10.0).unwrap();
    let u = ComplexField2D::from_fn(g, |x, z| Complex64::new((x - 5.0).sin() * (-(z - 5.0).powi(2)).exp(), 0.3 * x.cos()));
    let serial = (u.fft(), u.l2_norm(), u.h1_norm());
    let threads: Vec<_> = (0..8)
        .map(|_| {
            let u = u.clone();
            std::thread::spawn(move || (u.fft(), u.l2_norm(), u.h1_norm()))
        })
        .collect();
    for t in threads {
        let r: (Spectrum, f64, f64) = t.join().unwrap();
        assert_eq!(r.0, serial.0);
        assert_eq!(r.1.to_bits(), serial.1.to_bits());
        assert_eq!(r.2.to_bits(), serial.2.to_bits());
    }
}

#[test]
fn grids_validated() {
    assert!(SpectralGrid::new(30, 32, 1.0, 1.0).is_err());
    assert!(SpectralGrid::new(32, 32, 0.0, 1.0).is_err());
    assert!(SpectralGrid::new(32, 32, 1.0, f64::INFINITY).is_err());
}
