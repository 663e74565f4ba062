//! Asymptotic secure key rate, the temporal-filtering window sweep, and
//! calibration of noise knobs against target QBERs.
//!
//! The secure rate follows the standard decoy-state form
//!
//! ```text
//! R = q { -eta mu f(e) H2(e) + eta mu e^{-mu} [1 - H2(e)] } * clock
//! ```
//!
//! clamped at zero. Sweeps evaluate it with the *measured* sifted flux in
//! place of the analytic `q * eta * mu`, so detector-level effects propagate
//! into the reported rates.

use crate::config::SystemConfig;
use crate::engine::simulate_run;
use crate::error::{Error, Result};
use crate::model::SideChannelModel;
use crate::record::DetectionRecord;
use crate::rng::RngSeed;
use crate::sifting::{apply_window, squash_and_sift, SiftedStats, TimeWindow};

/// Binary Shannon entropy, `H2(e) = -e log2 e - (1-e) log2 (1-e)`, with
/// `H2(0) = H2(1) = 0` by continuity.
pub fn binary_entropy(e: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&e) {
        return Err(Error::InvalidParameter(format!(
            "entropy argument must lie in [0, 1], got {e}"
        )));
    }
    if e == 0.0 || e == 1.0 {
        return Ok(0.0);
    }
    Ok(-e * e.log2() - (1.0 - e) * (1.0 - e).log2())
}

/// Inputs to the closed-form secure-rate evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyRateInputs {
    /// Sifting ratio q.
    pub q: f64,
    /// Mean photon number mu.
    pub mu: f64,
    /// End-to-end transmittance eta.
    pub eta: f64,
    /// QBER.
    pub e_det: f64,
    /// Error-correction coefficient f(e).
    pub f: f64,
    /// Clock rate in Hz.
    pub clock_rate: f64,
    /// Fraction of the detected flux surviving temporal filtering
    /// (1 for the full window).
    pub retained_fraction: f64,
}

impl KeyRateInputs {
    pub fn validate(&self) -> Result<()> {
        for (name, v, lo, hi) in [
            ("q", self.q, 0.0, 1.0),
            ("eta", self.eta, 0.0, 1.0),
            ("e_det", self.e_det, 0.0, 0.5),
            ("retained_fraction", self.retained_fraction, 0.0, 1.0),
        ] {
            if !(lo..=hi).contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in [{lo}, {hi}], got {v}"
                )));
            }
        }
        if self.mu < 0.0 || self.f < 1.0 || self.clock_rate <= 0.0 {
            return Err(Error::InvalidParameter(
                "mu >= 0, f >= 1 and clock_rate > 0 required".into(),
            ));
        }
        Ok(())
    }
}

/// Error-correction / privacy-amplification balance of the rate equation,
/// per unit of sifted flux: `-f H2(e) + e^{-mu} (1 - H2(e))`.
fn rate_factor(e_det: f64, f: f64, mu: f64) -> Result<f64> {
    let h = binary_entropy(e_det)?;
    Ok(-f * h + (-mu).exp() * (1.0 - h))
}

/// Secure key rate in bits per second, clamped at zero.
pub fn secure_key_rate(inputs: &KeyRateInputs) -> Result<f64> {
    inputs.validate()?;
    let per_pulse = inputs.q
        * inputs.retained_fraction
        * inputs.eta
        * inputs.mu
        * rate_factor(inputs.e_det, inputs.f, inputs.mu)?;
    Ok(per_pulse.max(0.0) * inputs.clock_rate)
}

/// One evaluated window of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    /// Window duration, seconds.
    pub width: f64,
    /// Chosen placement (first retained bin).
    pub start_bin: usize,
    pub qber: f64,
    /// Measured sifted flux, bits per second.
    pub sifted_rate: f64,
    /// Secure rate from the measured QBER and sifted flux, bits per second.
    pub secure_rate: f64,
    /// Fraction of all detections the window kept.
    pub retained_fraction: f64,
    pub sifted_count: u64,
}

/// Result of sweeping the temporal-filter width.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSweepResult {
    /// Rows sorted by width, ascending.
    pub rows: Vec<SweepRow>,
    /// Width maximizing the secure rate; ties resolve to the wider window.
    pub optimal_width: f64,
}

impl WindowSweepResult {
    pub fn optimal_row(&self) -> &SweepRow {
        self.rows
            .iter()
            .find(|r| r.width == self.optimal_width)
            .expect("optimal width comes from rows")
    }

    /// Row whose width is closest to `width`.
    pub fn row_near(&self, width: f64) -> &SweepRow {
        self.rows
            .iter()
            .min_by(|a, b| {
                (a.width - width)
                    .abs()
                    .partial_cmp(&(b.width - width).abs())
                    .unwrap()
            })
            .expect("sweep has rows")
    }
}

/// For each width, place the window where it retains the most detections
/// (the receiver would gate around the observed lobe), sift, and evaluate
/// the secure rate with empirical flux and QBER.
pub fn sweep_windows(
    record: &DetectionRecord,
    config: &SystemConfig,
    widths: &[f64],
    seed: RngSeed,
) -> Result<WindowSweepResult> {
    if widths.is_empty() {
        return Err(Error::InvalidParameter("widths must be nonempty".into()));
    }
    let bins_per_slot = config.bins_per_slot();
    // Per-bin totals decide the placement cheaply.
    let mut per_bin = vec![0u64; bins_per_slot];
    for d in &record.detections {
        per_bin[d.time_bin as usize] += 1;
    }

    let mut rows = Vec::with_capacity(widths.len());
    let mut sorted_widths: Vec<f64> = widths.to_vec();
    sorted_widths.sort_by(|a, b| a.partial_cmp(b).unwrap());

    for &width in &sorted_widths {
        let k_f = width / config.bin_width;
        let k = k_f.round() as usize;
        if k == 0 || k > bins_per_slot || (k_f - k as f64).abs() > 1e-6 * k as f64 {
            return Err(Error::InvalidParameter(format!(
                "width {width} is not a whole number of {} s bins",
                config.bin_width
            )));
        }
        let mut best_start = 0usize;
        let mut run: u64 = per_bin[..k].iter().sum();
        let mut best_count = run;
        for start in 1..=(bins_per_slot - k) {
            run = run - per_bin[start - 1] + per_bin[start + k - 1];
            if run > best_count {
                best_count = run;
                best_start = start;
            }
        }

        let window = TimeWindow::new(best_start, best_start + k - 1, bins_per_slot)?;
        let filtered = apply_window(record, window);
        let mut stats = squash_and_sift(&filtered, config, seed);
        stats.retained_fraction = if record.detections.is_empty() {
            0.0
        } else {
            filtered.detections.len() as f64 / record.detections.len() as f64
        };
        rows.push(make_row(width, best_start, &stats, config, record.n_slots));
    }

    let optimal_width = rows
        .iter()
        .fold(None::<&SweepRow>, |best, r| match best {
            None => Some(r),
            Some(b) => {
                // Strictly-greater keeps the wider window on ties because
                // rows are sorted ascending by width.
                if r.secure_rate >= b.secure_rate {
                    Some(r)
                } else {
                    Some(b)
                }
            }
        })
        .expect("nonempty rows")
        .width;

    Ok(WindowSweepResult {
        rows,
        optimal_width,
    })
}

fn make_row(
    width: f64,
    start_bin: usize,
    stats: &SiftedStats,
    config: &SystemConfig,
    n_slots: u64,
) -> SweepRow {
    let flux = stats.sifted_count as f64 / n_slots as f64;
    let factor = rate_factor(stats.qber, config.ec_coefficient, config.mean_photon_number)
        .expect("qber in range");
    let secure = (flux * factor).max(0.0) * config.clock_rate;
    SweepRow {
        width,
        start_bin,
        qber: stats.qber,
        sifted_rate: stats.sifted_rate,
        secure_rate: secure,
        retained_fraction: stats.retained_fraction,
        sifted_count: stats.sifted_count,
    }
}

/// Which configuration knob `calibrate` adjusts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalibrationKnob {
    OpticalErrorProb,
    SeRatePerLaser,
}

impl CalibrationKnob {
    pub fn name(self) -> &'static str {
        match self {
            CalibrationKnob::OpticalErrorProb => "optical_error_prob",
            CalibrationKnob::SeRatePerLaser => "se_rate_per_laser",
        }
    }

    fn apply(self, config: &SystemConfig, value: f64) -> SystemConfig {
        let mut c = config.clone();
        match self {
            CalibrationKnob::OpticalErrorProb => c.optical_error_prob = value,
            CalibrationKnob::SeRatePerLaser => c.se_rate_per_laser = value,
        }
        c
    }

    fn upper_bound(self) -> f64 {
        match self {
            CalibrationKnob::OpticalErrorProb => 0.5,
            CalibrationKnob::SeRatePerLaser => 0.1,
        }
    }
}

/// Options for [`calibrate`].
#[derive(Debug, Clone, Copy)]
pub struct CalibrationOptions {
    /// Slots per bisection probe.
    pub probe_slots: u64,
    /// Slots for the final refinement probes.
    pub refine_slots: u64,
    /// Acceptable |simulated - target| in QBER, absolute (0.0002 = 0.02 pp).
    pub tolerance: f64,
    pub max_iterations: u32,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            probe_slots: 10_000_000,
            refine_slots: 100_000_000,
            tolerance: 2e-4,
            max_iterations: 40,
        }
    }
}

/// One bisection probe, reported to the observer of
/// [`calibrate_observed`].
#[derive(Debug, Clone, Copy)]
pub struct CalibrationProbe {
    pub iteration: u32,
    pub value: f64,
    pub qber: f64,
    pub slots: u64,
}

/// Bisect one noise knob until the simulated full-window QBER meets the
/// target. All probes reuse the same seed (common random numbers), which
/// makes the probed QBER a monotone function of the knob and the search
/// deterministic; monotonicity is asserted as the bracket shrinks.
pub fn calibrate(
    config: &SystemConfig,
    side_channel: &SideChannelModel,
    target_qber: f64,
    knob: CalibrationKnob,
    seed: RngSeed,
    opts: &CalibrationOptions,
) -> Result<f64> {
    calibrate_observed(
        config,
        side_channel,
        target_qber,
        knob,
        seed,
        opts,
        &mut |_| {},
    )
}

/// [`calibrate`] with a per-probe callback, so callers can trace the search.
#[allow(clippy::too_many_arguments)]
pub fn calibrate_observed(
    config: &SystemConfig,
    side_channel: &SideChannelModel,
    target_qber: f64,
    knob: CalibrationKnob,
    seed: RngSeed,
    opts: &CalibrationOptions,
    observer: &mut dyn FnMut(CalibrationProbe),
) -> Result<f64> {
    if !(0.0..0.5).contains(&target_qber) {
        return Err(Error::InvalidParameter(format!(
            "target QBER must lie in [0, 0.5), got {target_qber}"
        )));
    }
    let mut probes = 0u32;
    let mut probe = |value: f64, n: u64| -> Result<f64> {
        let c = knob.apply(config, value);
        c.validate()?;
        let res = simulate_run(&c, side_channel, n, seed)?;
        let qber = squash_and_sift(&res.record, &c, seed).qber;
        probes += 1;
        observer(CalibrationProbe {
            iteration: probes,
            value,
            qber,
            slots: n,
        });
        Ok(qber)
    };

    let (mut lo, mut hi) = (0.0, knob.upper_bound());
    let q_lo = probe(lo, opts.probe_slots)?;
    if q_lo >= target_qber {
        // The knob only adds errors; the floor already exceeds the target.
        if (q_lo - target_qber).abs() <= opts.tolerance {
            return Ok(lo);
        }
        return Err(Error::Calibration {
            target: target_qber,
            lo,
            hi,
            reason: format!("QBER at {}=0 is already {q_lo:.6}", knob.name()),
        });
    }
    let q_hi = probe(hi, opts.probe_slots)?;
    if q_hi < target_qber {
        return Err(Error::Calibration {
            target: target_qber,
            lo,
            hi,
            reason: format!("QBER at {}={hi} only reaches {q_hi:.6}", knob.name()),
        });
    }

    let mut q_at_lo = q_lo;
    let mut q_at_hi = q_hi;
    let mut mid = 0.5 * (lo + hi);
    for iter in 0..opts.max_iterations {
        mid = 0.5 * (lo + hi);
        // Refine with more slots once the bracket is tight.
        let n = if hi - lo < 0.02 * knob.upper_bound() {
            opts.refine_slots
        } else {
            opts.probe_slots
        };
        let q_mid = probe(mid, n)?;
        // With common random numbers the response must stay ordered.
        debug_assert!(
            q_mid >= q_at_lo - 10.0 * opts.tolerance && q_mid <= q_at_hi + 10.0 * opts.tolerance,
            "QBER not monotone in {} at iteration {iter}",
            knob.name()
        );
        if (q_mid - target_qber).abs() <= opts.tolerance {
            return Ok(mid);
        }
        if q_mid < target_qber {
            lo = mid;
            q_at_lo = q_mid;
        } else {
            hi = mid;
            q_at_hi = q_mid;
        }
    }
    Err(Error::Calibration {
        target: target_qber,
        lo,
        hi,
        reason: format!(
            "bisection did not converge within {} iterations (last probe {mid})",
            opts.max_iterations
        ),
    })
}
