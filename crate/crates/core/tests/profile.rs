use dslump::profile::{aligned_distance, decompose, synthesize, LatticeEntry, LatticeSequence, TrackSpec};
use proptest::prelude::*;

fn profile(dim: usize, seed: &[f64]) -> LatticeEntry {
    let mut e = LatticeEntry::new();
    // a peak at the origin keeps the argmax unambiguous
    e.insert([0, 0], (0..dim).map(|c| 3.0 + c as f64).collect());
    for (i, v) in seed.iter().enumerate() {
        let site = [(i % 3) as i64 - 1, (i / 3) as i64 + 1];
        e.insert(site, (0..dim).map(|c| v * (1.0 + 0.1 * c as f64)).collect());
    }
    e
}

fn tracks(k: usize) -> Vec<TrackSpec> {
    let dirs = [[1, 0], [-1, 1], [0, -2], [2, 2]];
    (0..k)
        .map(|l| TrackSpec {
            start: [10 * l as i64, -7 * l as i64],
            velocity: dirs[l],
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn recovers_well_separated_profiles(
        k in 1usize..=4,
        dim in 1usize..=3,
        vals in prop::collection::vec(prop::collection::vec(-1.5f64..1.5, 0..5), 4),
    ) {
        let len = 48;
        let truth: Vec<LatticeEntry> = (0..k).map(|l| profile(dim, &vals[l])).collect();
        let seq = synthesize(dim, &truth, &tracks(k), 0.0, 0, len).unwrap();
        let r = decompose(&seq, 1e-3, 0.5).unwrap();
        prop_assert_eq!(r.count(), k);
        prop_assert!(!r.cap_reached);
        for x in &truth {
            let err = r.profiles.iter().map(|y| aligned_distance(y, x)).fold(f64::INFINITY, f64::min);
            prop_assert!(err <= 1e-6);
        }
        prop_assert!(r.norm_gap <= 1e-8);
        if k > 1 {
            prop_assert!(r.min_track_distance.unwrap() >= len as f64 / 2.0);
        }
    }

    #[test]
    fn translation_equivariance(w1 in -50i64..50, w2 in -50i64..50, k in 1usize..=3) {
        let truth: Vec<LatticeEntry> = (0..k).map(|l| profile(2, &[0.5, -0.25 * l as f64])).collect();
        let seq = synthesize(2, &truth, &tracks(k), 0.0, 0, 40).unwrap();
        let a = decompose(&seq, 1e-3, 0.5).unwrap();
        let b = decompose(&seq.translate([w1, w2]), 1e-3, 0.5).unwrap();
        prop_assert_eq!(a.count(), b.count());
        for (pa, pb) in a.profiles.iter().zip(&b.profiles) {
            prop_assert!(pa.distance(pb) <= 1e-12);
        }
        for (ta, tb) in a.tracks.iter().zip(&b.tracks) {
            for (x, y) in ta.iter().zip(tb) {
                prop_assert_eq!([x[0] + w1, x[1] + w2], *y);
            }
        }
    }

    #[test]
    fn translate_preserves_norm(w1 in -9i64..9, w2 in -9i64..9, vals in prop::collection::vec(-2.0f64..2.0, 0..6)) {
        let p = profile(2, &vals);
        let t = p.translate([w1, w2]);
        prop_assert_eq!(p.norm_sq(), t.norm_sq());
        prop_assert_eq!(t.translate([-w1, -w2]), p);
    }

    #[test]
    fn json_round_trip(vals in prop::collection::vec(-2.0f64..2.0, 0..6), seed in 0u64..100) {
        let seq = synthesize(2, &[profile(2, &vals)], &tracks(1), 1e-3, seed, 8).unwrap();
        let back = LatticeSequence::from_json(&seq.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, seq);
    }
}

fn peaked(dim: usize, peak: f64, seed: &[f64]) -> LatticeEntry {
    let mut e = profile(dim, seed);
    e.insert([0, 0], vec![peak; dim]);
    e
}

#[test]
fn noisy_inputs_still_decompose() {
    let truth: Vec<LatticeEntry> = (0..2).map(|l| peaked(1, 3.0 + l as f64, &[1.0, -0.5 * l as f64])).collect();
    let seq = synthesize(1, &truth, &tracks(2), 1e-6, 3, 48).unwrap();
    let r = decompose(&seq, 1e-3, 0.5).unwrap();
    assert_eq!(r.count(), 2);
    for x in &truth {
        let err = r.profiles.iter().map(|y| aligned_distance(y, x)).fold(f64::INFINITY, f64::min);
        assert!(err < 1e-4, "{err}");
    }
}

#[test]
fn tied_peaks_under_noise_fail_cleanly() {
    let truth: Vec<LatticeEntry> = (0..2).map(|l| peaked(1, 3.0, &[1.0, -0.5 * l as f64])).collect();
    let seq = synthesize(1, &truth, &tracks(2), 1e-6, 3, 48).unwrap();
    match decompose(&seq, 1e-3, 0.5) {
        Ok(r) => assert!(r.count() <= 2),
        Err(e) => assert!(matches!(e, dslump::Error::NonConvergentTail(_)), "{e}"),
    }
}

#[test]
fn rejects_bad_inputs() {
    let empty = LatticeSequence::new(1, vec![]).unwrap();
    assert!(decompose(&empty, 1e-3, 0.5).is_err());
    let p = profile(2, &[]);
    assert!(synthesize(3, std::slice::from_ref(&p), &tracks(1), 0.0, 0, 4).is_err());
    assert!(synthesize(2, &[p], &tracks(2), 0.0, 0, 4).is_err());
    let seq = synthesize(1, &[profile(1, &[])], &tracks(1), 0.0, 0, 8).unwrap();
    assert!(decompose(&seq, 0.0, 0.5).is_err());
    assert!(decompose(&seq, 1e-3, 0.0).is_err());
    assert!(LatticeSequence::from_json(r#"{"schema":"other","version":1,"dim":1,"entries":[[]]}"#).is_err());
    assert!(LatticeSequence::from_json(r#"{"schema":"dslump-lattice","version":2,"dim":1,"entries":[[]]}"#).is_err());
}
