//! Property tests for the model invariants that hold over whole parameter
//! ranges rather than at hand-picked points.

use proptest::prelude::*;

use qkdsim::config::SystemConfig;
use qkdsim::keyrate::binary_entropy;
use qkdsim::model::SideChannelModel;
use qkdsim::sidechan::distinguishability;

fn arb_model() -> impl Strategy<Value = SideChannelModel> {
    (
        1e-12..300e-12f64, // max_temporal_offset
        1e-9..40e-9f64,    // relaxation_time
        0.0..0.5f64,       // max_amplitude_deviation
        0.4e-9..2.2e-9f64, // base_offset
    )
        .prop_map(|(dmax, tau, dev, base)| SideChannelModel {
            base_offset: base,
            max_temporal_offset: dmax,
            relaxation_time: tau,
            max_amplitude_deviation: dev,
            min_interval: 2.5e-9,
            enabled: true,
        })
}

fn arb_dist() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(1e-6..1.0f64, 20).prop_map(|mut v| {
        let s: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= s);
        v
    })
}

proptest! {
    // The memory effect only relaxes: both the temporal offset and the
    // amplitude factor are non-increasing in the firing interval.
    #[test]
    fn side_channel_relaxes_monotonically(model in arb_model()) {
        let mut prev_off = f64::INFINITY;
        let mut prev_amp = f64::INFINITY;
        for k in 1..=16u32 {
            let interval = k as f64 * 2.5e-9;
            let off = model.temporal_offset(interval).unwrap();
            let amp = model.amplitude_factor(interval).unwrap();
            prop_assert!(off <= prev_off);
            prop_assert!(amp <= prev_amp);
            prop_assert!(amp >= 1.0);
            prop_assert!(off >= 0.0);
            prev_off = off;
            prev_amp = amp;
        }
    }

    // With the side channel disabled the waveform ignores the interval.
    #[test]
    fn disabled_waveform_is_interval_free(
        base in 0.4e-9..2.2e-9f64,
        i1 in 2.5e-9..40e-9f64,
        i2 in 2.5e-9..40e-9f64,
        t in 0.0..2.5e-9f64,
    ) {
        let model = SideChannelModel::disabled(base, 2.5e-9);
        let a = model.pulse_waveform(t, i1, 65e-12).unwrap();
        let b = model.pulse_waveform(t, i2, 65e-12).unwrap();
        prop_assert_eq!(a, b);
    }

    // Splitting a total dB loss across channel and receiver legs never
    // changes the transmittance.
    #[test]
    fn transmittance_split_invariant(total in 0.0..40.0f64, frac in 0.0..1.0f64) {
        let a = SystemConfig {
            channel_loss_db: total,
            receiver_loss_db: 0.0,
            ..SystemConfig::default()
        };
        let b = SystemConfig {
            channel_loss_db: total * frac,
            receiver_loss_db: total * (1.0 - frac),
            ..SystemConfig::default()
        };
        prop_assert!((a.link_transmittance() - b.link_transmittance()).abs() < 1e-12);
    }

    #[test]
    fn entropy_symmetric_and_bounded(e in 0.0..=1.0f64) {
        let h = binary_entropy(e).unwrap();
        let h2 = binary_entropy(1.0 - e).unwrap();
        prop_assert!((h - h2).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&h));
    }

    // Total variation distance is a bounded metric.
    #[test]
    fn tv_is_a_metric(a in arb_dist(), b in arb_dist(), c in arb_dist()) {
        let ab = distinguishability(&a, &b).unwrap();
        let ba = distinguishability(&b, &a).unwrap();
        let ac = distinguishability(&a, &c).unwrap();
        let cb = distinguishability(&c, &b).unwrap();
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!(distinguishability(&a, &a).unwrap() < 1e-12);
        prop_assert!(ab <= ac + cb + 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab));
    }
}
