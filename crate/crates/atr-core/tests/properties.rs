//! Property-based tests for the metric, the selection mask, acquisition
//! determinism, and trace round-trips.

use proptest::collection::vec;
use proptest::prelude::*;

use atr_core::acquisition::{acquire_uwb, acquire_vna, Frontend, UwbConfig, VnaConfig};
use atr_core::channel::{
    apply_drift, apply_perturbation, synth_enclosure, DriftState, EnclosureProfile, Loading,
    NoiseParams, PerturbationEvent, Position,
};
use atr_core::detection::{build_mask, channel_distance, mnd};
use atr_core::trace::{parse_trace_str, records_to_string, TraceRecord};

fn magnitudes(len: usize) -> impl Strategy<Value = Vec<f64>> {
    vec(0.0..10.0f64, len)
}

proptest! {
    /// Swapping the arguments never changes a single bit of the distance.
    #[test]
    fn distance_is_bit_exact_symmetric(a in magnitudes(32), b in magnitudes(32)) {
        let ab = channel_distance(&a, &b).unwrap();
        let ba = channel_distance(&b, &a).unwrap();
        prop_assert_eq!(ab.values(), ba.values());
    }

    /// Every element lies in [0, 1]; equal inputs give exactly zero.
    #[test]
    fn distance_is_bounded_and_zero_on_equal(a in magnitudes(32)) {
        let d = channel_distance(&a, &a).unwrap();
        prop_assert!(d.values().iter().all(|&x| x == 0.0));
        let shifted: Vec<f64> = a.iter().map(|x| x * 0.5 + 1.0).collect();
        let d = channel_distance(&a, &shifted).unwrap();
        prop_assert!(d.values().iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    /// Rescaling both responses by one positive factor is invariant to
    /// 1e-12 for arbitrary scales, and bit-exact for powers of two.
    #[test]
    fn distance_is_scale_invariant(
        a in magnitudes(16),
        b in magnitudes(16),
        scale in 1e-6..1e6f64,
        exponent in -40i32..40,
    ) {
        let base = channel_distance(&a, &b).unwrap();

        let sa: Vec<f64> = a.iter().map(|x| x * scale).collect();
        let sb: Vec<f64> = b.iter().map(|x| x * scale).collect();
        let scaled = channel_distance(&sa, &sb).unwrap();
        for (x, y) in base.values().iter().zip(scaled.values()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }

        let pow2 = (2.0f64).powi(exponent);
        let pa: Vec<f64> = a.iter().map(|x| x * pow2).collect();
        let pb: Vec<f64> = b.iter().map(|x| x * pow2).collect();
        let scaled = channel_distance(&pa, &pb).unwrap();
        prop_assert_eq!(base.values(), scaled.values());
    }

    /// MND with a full mask equals MND without a mask, bit for bit.
    #[test]
    fn full_mask_equals_unmasked(a in magnitudes(40), b in magnitudes(40)) {
        let full = build_mask(&vec![0.0; 40], 0.0).unwrap();
        prop_assert_eq!(
            mnd(&a, &b, Some(&full)).unwrap(),
            mnd(&a, &b, None).unwrap()
        );
    }

    /// The mask always keeps exactly L - floor(q * L) indices, and the kept
    /// alphas are never larger than the dropped ones.
    #[test]
    fn mask_counts_and_ordering(alpha in vec(0.0..1.0f64, 1..200), q in 0.0..0.99f64) {
        let mask = build_mask(&alpha, q).unwrap();
        let drop = (q * alpha.len() as f64).floor() as usize;
        prop_assert_eq!(mask.kept_count(), alpha.len() - drop);
        let max_kept = alpha
            .iter()
            .zip(mask.keep())
            .filter(|(_, &k)| k)
            .map(|(a, _)| *a)
            .fold(f64::NEG_INFINITY, f64::max);
        let min_dropped = alpha
            .iter()
            .zip(mask.keep())
            .filter(|(_, &k)| !k)
            .map(|(a, _)| *a)
            .fold(f64::INFINITY, f64::min);
        prop_assert!(max_kept <= min_dropped);
    }

    /// Trace serialization round-trips bit-exactly, order preserved.
    #[test]
    fn trace_round_trip(
        seeds in vec((0.0..100.0f64, vec(0.0..1e6f64, 1..20)), 1..12),
        label in proptest::option::of("[a-z]{1,8}"),
    ) {
        let records: Vec<TraceRecord> = seeds
            .iter()
            .map(|(t, values)| {
                let mut r = TraceRecord::new(Frontend::Uwb, *t, values.clone());
                if let Some(l) = &label {
                    r = r.with_label("event", l);
                }
                r
            })
            .collect();
        let text = records_to_string(&records).unwrap();
        prop_assert_eq!(parse_trace_str(&text).unwrap(), records);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Synthesis, perturbation, drift, and both frontends are pure: calling
    /// twice with the same inputs gives identical values.
    #[test]
    fn pipeline_is_pure(seed in 0u64..1_000_000, draw in 0u64..1000) {
        let profile = EnclosureProfile::with_loading(Loading::Server, seed);
        let taps_a = synth_enclosure(&profile).unwrap();
        let taps_b = synth_enclosure(&profile).unwrap();
        prop_assert_eq!(&taps_a, &taps_b);

        let event = PerturbationEvent::needle(Position::new(0.4, 0.6), 1.0, 40.0);
        prop_assert_eq!(
            apply_perturbation(&taps_a, &event, &profile).unwrap(),
            apply_perturbation(&taps_a, &event, &profile).unwrap()
        );

        let drift = DriftState {
            temperature_offset: 11.0,
            cpu_load: 0.5,
            fan_phase: 2.0,
            psu_on: true,
            booted: true,
        };
        let drifted = apply_drift(&taps_a, &drift, &profile).unwrap();
        prop_assert_eq!(&drifted, &apply_drift(&taps_a, &drift, &profile).unwrap());

        let noise = NoiseParams::new(5e-3, seed ^ 0xabcd);
        let vna = VnaConfig::default();
        prop_assert_eq!(
            acquire_vna(&drifted, &vna, &noise, draw).unwrap(),
            acquire_vna(&drifted, &vna, &noise, draw).unwrap()
        );
        let uwb = UwbConfig::default();
        prop_assert_eq!(
            acquire_uwb(&drifted, &uwb, &noise, draw).unwrap(),
            acquire_uwb(&drifted, &uwb, &noise, draw).unwrap()
        );
    }

    /// With zero noise, repeated acquisition of an unperturbed channel gives
    /// identical responses and exactly zero intra distance; with noise, the
    /// intra distance is strictly positive.
    #[test]
    fn intra_distance_degenerates_only_without_noise(seed in 0u64..100_000) {
        let profile = EnclosureProfile::with_loading(Loading::Empty, seed);
        let taps = synth_enclosure(&profile).unwrap();
        let config = VnaConfig::default();

        let silent = NoiseParams::noiseless(1);
        let a = acquire_vna(&taps, &config, &silent, 0).unwrap();
        let b = acquire_vna(&taps, &config, &silent, 1).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(mnd(&a.values, &b.values, None).unwrap(), 0.0);

        let noisy = NoiseParams::new(5e-3, 1);
        let a = acquire_vna(&taps, &config, &noisy, 0).unwrap();
        let b = acquire_vna(&taps, &config, &noisy, 1).unwrap();
        prop_assert!(mnd(&a.values, &b.values, None).unwrap() > 0.0);
    }
}
