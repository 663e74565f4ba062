//! Slot-level Monte Carlo simulator of a polarization-based BB84 quantum key
//! distribution link built from four gain-switched laser diodes.
//!
//! The crate models the trade-off such transmitters face: driving the lasers
//! with zero DC bias keeps spontaneous-emission noise negligible but leaves a
//! timing/intensity side channel open (pulse shape depends on each laser's
//! firing history, so arrival times leak which laser fired), while biasing
//! near threshold closes the side channel at the cost of a uniform
//! spontaneous-emission background that raises the QBER. Temporal filtering
//! of the detection window buys part of that cost back.
//!
//! The pieces, bottom to top:
//!
//! - [`config::SystemConfig`] — source, channel, detector and protocol
//!   parameters (defaults describe a 400 MHz reference link);
//! - [`model`] — polarization encoding and the interval-dependent pulse
//!   model;
//! - [`engine`] — deterministic, seeded, thread-count-independent Monte
//!   Carlo of Alice's sequence and Bob's detections;
//! - [`sifting`] — temporal windowing, squashing, basis sifting, QBER;
//! - [`keyrate`] — binary entropy, the asymptotic secure rate, window
//!   sweeps and noise-knob calibration;
//! - [`sidechan`] — per-interval waveforms, total-variation
//!   distinguishability and closure certification;
//! - [`scenario`] / [`report`] — spec files, bundled reference scenarios,
//!   and the result-file formats the `qkdsim` CLI writes.
//!
//! ```
//! use qkdsim::prelude::*;
//!
//! let config = SystemConfig::default();
//! let side_channel = SideChannelModel::default();
//! let run = simulate_run(&config, &side_channel, 100_000, RngSeed(7)).unwrap();
//! let stats = squash_and_sift(&run.record, &config, RngSeed(7));
//! assert!(stats.sifted_count > 0);
//! ```

pub mod config;
pub mod engine;
pub mod error;
pub mod keyrate;
pub mod model;
pub mod record;
pub mod report;
pub mod rng;
pub mod scenario;
pub mod sidechan;
pub mod sifting;

/// The common imports in one place.
pub mod prelude {
    pub use crate::config::SystemConfig;
    pub use crate::engine::{generate_alice_sequence, simulate_run, ScenarioResult};
    pub use crate::error::{Error, Result};
    pub use crate::keyrate::{
        binary_entropy, calibrate, calibrate_observed, secure_key_rate, sweep_windows,
        CalibrationKnob, CalibrationOptions, CalibrationProbe, KeyRateInputs, WindowSweepResult,
    };
    pub use crate::model::{Basis, Polarization, SideChannelModel};
    pub use crate::record::{
        build_histogram, AlicePrep, Detection, DetectionOrigin, DetectionRecord, SlotHistogram,
    };
    pub use crate::rng::RngSeed;
    pub use crate::scenario::ScenarioSpec;
    pub use crate::sidechan::{
        certify_closure, distinguishability, waveform_for_interval, IntervalWaveformSet,
    };
    pub use crate::sifting::{
        apply_window, qber_decomposition, squash_and_sift, SiftedStats, TimeWindow,
    };
}

// The guide chapters double as doc-tests so their snippets stay honest.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            #[allow(dead_code)]
            struct $name;
        };
    }
    chapter!(Introduction, "../../../book/src/introduction.md");
    chapter!(Protocol, "../../../book/src/protocol.md");
    chapter!(PhotonStatistics, "../../../book/src/photon-statistics.md");
    chapter!(SideChannels, "../../../book/src/side-channels.md");
    chapter!(TemporalFiltering, "../../../book/src/temporal-filtering.md");
    chapter!(KeyRates, "../../../book/src/key-rates.md");
    chapter!(Calibration, "../../../book/src/calibration.md");
}
