//! Side-channel quantification: per-interval detection waveforms, their
//! pairwise distinguishability, and closure certification.
//!
//! An eavesdropper who can resolve a pulse's arrival time learns which laser
//! fired whenever pulses from different firing intervals look different. The
//! total variation distance between two binned waveforms bounds that
//! single-shot advantage: guessing probability <= (1 + TV) / 2.

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::model::{SideChannelModel, FWHM_TO_SIGMA};

/// Binned detection-time distributions for a grid of firing intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalWaveformSet {
    /// Strictly increasing intervals, seconds.
    pub intervals: Vec<f64>,
    /// One probability vector over timing bins per interval; each sums to 1.
    pub waveforms: Vec<Vec<f64>>,
}

impl IntervalWaveformSet {
    /// Waveforms over the reference measurement grid: one slot period up to
    /// 40 ns in slot-period steps.
    pub fn reference_grid(model: &SideChannelModel, config: &SystemConfig) -> Result<Self> {
        let slot = config.slot_period();
        let n = (40e-9 / slot).floor() as usize;
        let intervals: Vec<f64> = (1..=n.max(1)).map(|k| k as f64 * slot).collect();
        Self::for_intervals(&intervals, model, config)
    }

    pub fn for_intervals(
        intervals: &[f64],
        model: &SideChannelModel,
        config: &SystemConfig,
    ) -> Result<Self> {
        let mut sorted = intervals.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted.dedup();
        let waveforms = sorted
            .iter()
            .map(|&i| waveform_for_interval(i, model, config))
            .collect::<Result<Vec<_>>>()?;
        Ok(IntervalWaveformSet {
            intervals: sorted,
            waveforms,
        })
    }

    /// Largest TV distance over all interval pairs.
    pub fn max_pairwise_tv(&self) -> Result<f64> {
        let mut max = 0.0f64;
        for i in 0..self.waveforms.len() {
            for j in i + 1..self.waveforms.len() {
                max = max.max(distinguishability(&self.waveforms[i], &self.waveforms[j])?);
            }
        }
        Ok(max)
    }
}

/// The detection-time distribution a receiver records for pulses emitted at
/// the given interval: the emitted Gaussian convolved with detection jitter,
/// integrated per timing bin and normalized. Probability mass jittered past
/// the slot boundary wraps into the opposite edge, exactly as the engine's
/// free-running binning sees it.
pub fn waveform_for_interval(
    interval: f64,
    model: &SideChannelModel,
    config: &SystemConfig,
) -> Result<Vec<f64>> {
    if interval < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "interval must be >= 0, got {interval}"
        )));
    }
    let bins = config.bins_per_slot();
    let slot = config.slot_period();
    let center = model.base_offset + model.temporal_offset(interval)?;
    let sigma_p = config.optical_pulse_fwhm / FWHM_TO_SIGMA;
    let sigma_j = config.detection_jitter_fwhm / FWHM_TO_SIGMA;
    let sigma = (sigma_p * sigma_p + sigma_j * sigma_j).sqrt();

    let mut w = vec![0.0f64; bins];
    if sigma <= 0.0 {
        let bin = ((center.rem_euclid(slot)) / config.bin_width) as usize;
        w[bin.min(bins - 1)] = 1.0;
        return Ok(w);
    }
    // Fold +-6 sigma of the Gaussian onto the slot, bin by bin.
    let lo_slot = ((center - 6.0 * sigma) / slot).floor() as i64;
    let hi_slot = ((center + 6.0 * sigma) / slot).floor() as i64;
    for s in lo_slot..=hi_slot {
        for (b, cell) in w.iter_mut().enumerate() {
            let t0 = s as f64 * slot + b as f64 * config.bin_width;
            let t1 = t0 + config.bin_width;
            *cell += phi((t1 - center) / sigma) - phi((t0 - center) / sigma);
        }
    }
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    Ok(w)
}

/// Standard normal CDF.
fn phi(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Total variation distance between two discrete distributions,
/// `TV = 1/2 sum |a_i - b_i|`, in [0, 1].
pub fn distinguishability(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>())
}

/// Outcome of a closure check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureReport {
    /// Largest pairwise TV over the interval grid.
    pub max_tv: f64,
    /// Largest relative pulse-energy deviation |a(i) - 1| over the grid.
    pub max_amplitude_deviation: f64,
    pub epsilon: f64,
    /// True when both figures fall below epsilon.
    pub pass: bool,
}

/// Certify that the side channel is closed: both the timing
/// distinguishability (max pairwise TV over the reference grid) and the
/// relative intensity deviation must stay below `epsilon`. Intensity is
/// checked separately from timing because decoy-state security treats
/// intensity errors on their own.
pub fn certify_closure(
    model: &SideChannelModel,
    config: &SystemConfig,
    epsilon: f64,
) -> Result<ClosureReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let set = IntervalWaveformSet::reference_grid(model, config)?;
    let max_tv = set.max_pairwise_tv()?;
    let max_amp = set
        .intervals
        .iter()
        .map(|&i| (model.amplitude_factor(i).unwrap() - 1.0).abs())
        .fold(0.0f64, f64::max);
    Ok(ClosureReport {
        max_tv,
        max_amplitude_deviation: max_amp,
        epsilon,
        pass: max_tv < epsilon && max_amp < epsilon,
    })
}
