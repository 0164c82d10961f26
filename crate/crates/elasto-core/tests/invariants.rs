//! Property tests for the correlation engine: invariants that must hold
//! for arbitrary finite input segments, not just the constructed oracles
//! in the unit suites.

use elasto_core::{ncc, ncc_fft, subwindow_median_max, Segment};
use proptest::prelude::*;

/// Random segment long enough for every lag the suite uses, with enough
/// spread that zero-variance rejection never triggers.
fn segment_values() -> impl Strategy<Value = Vec<f64>> {
    (48usize..192)
        .prop_flat_map(|len| proptest::collection::vec(-100.0f64..100.0, len))
        .prop_filter("needs signal variance", |v| {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64 > 1e-6
        })
}

fn pair_values() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    segment_values().prop_flat_map(|a| {
        let len = a.len();
        (
            Just(a),
            proptest::collection::vec(-100.0f64..100.0, len).prop_filter(
                "needs signal variance",
                |v| {
                    let mean = v.iter().sum::<f64>() / v.len() as f64;
                    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64 > 1e-6
                },
            ),
        )
    })
}

proptest! {
    #[test]
    fn correlation_is_invariant_to_affine_amplitude((a, b) in pair_values(),
                                                    gain in prop_oneof![-8.0f64..-0.05, 0.05f64..8.0],
                                                    offset in -50.0f64..50.0) {
        let max_lag = a.len() / 6;
        let sa = Segment::new(&a, 0).unwrap();
        let sb = Segment::new(&b, 0).unwrap();
        let scaled: Vec<f64> = b.iter().map(|v| gain * v + offset).collect();
        let sb_scaled = Segment::new(&scaled, 0).unwrap();

        let plain = ncc(&sa, &sb, max_lag).unwrap();
        let transformed = ncc(&sa, &sb_scaled, max_lag).unwrap();
        // Zero-normalized correlation removes gain and offset entirely; a
        // negative gain flips the curve's sign.
        let sign = gain.signum();
        for (p, t) in plain.full.iter().zip(&transformed.full) {
            prop_assert!((sign * p - t).abs() <= 1e-9,
                "curve value {p} became {t} under gain {gain}, offset {offset}");
        }
    }

    #[test]
    fn correlation_values_are_bounded((a, b) in pair_values()) {
        let max_lag = a.len() / 6;
        let sa = Segment::new(&a, 0).unwrap();
        let sb = Segment::new(&b, 0).unwrap();
        let r = ncc(&sa, &sb, max_lag).unwrap();
        for v in &r.full {
            prop_assert!((-1.0..=1.0).contains(v), "correlation {v} escaped [-1, 1]");
        }
        prop_assert!((-1.0..=1.0).contains(&r.peak_value));
        // Parabolic refinement never moves the peak further than half a
        // sample from the integer argmax.
        prop_assert!((r.refined_lag() - r.peak_lag).abs() <= 0.5 + 1e-12);
    }

    #[test]
    fn self_correlation_peaks_at_zero_lag(a in segment_values()) {
        let max_lag = a.len() / 6;
        let sa = Segment::new(&a, 0).unwrap();
        let r = ncc(&sa, &sa, max_lag).unwrap();
        prop_assert_eq!(r.peak_lag, 0.0);
        prop_assert!((r.peak_value - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn fft_route_matches_direct_route((a, b) in pair_values()) {
        let max_lag = a.len() / 6;
        let sa = Segment::new(&a, 0).unwrap();
        let sb = Segment::new(&b, 0).unwrap();
        let direct = ncc(&sa, &sb, max_lag).unwrap();
        let fast = ncc_fft(&sa, &sb, max_lag).unwrap();
        prop_assert_eq!(direct.full.len(), fast.full.len());
        for (d, f) in direct.full.iter().zip(&fast.full) {
            prop_assert!((d - f).abs() <= 1e-6, "direct {d} vs FFT {f}");
        }
    }

    #[test]
    fn subwindow_median_is_bounded((a, b) in pair_values()) {
        let sa = Segment::new(&a, 0).unwrap();
        let sb = Segment::new(&b, 0).unwrap();
        let score = subwindow_median_max(&sa, &sb, 3, a.len() / 8).unwrap();
        prop_assert!((-1.0..=1.0).contains(&score));
    }
}
