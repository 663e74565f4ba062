//! System configuration: source, channel, detector and protocol parameters.

use crate::error::{Error, Result};

/// Full parameterization of the simulated link.
///
/// Times are in seconds, rates in hertz, losses in dB. The default values
/// describe a 400 MHz four-laser polarization BB84 link: mean photon number
/// 0.5, 10 dB channel and 2 dB receiver loss, 50% detector efficiency,
/// 500 cps dark counts, 65 ps optical pulses broadened to a 750 ps
/// detection lobe, binned at the 125 ps timing resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Slot clock; the slot period is `1 / clock_rate`.
    pub clock_rate: f64,
    /// Mean photon number per pulse at Alice's output.
    pub mean_photon_number: f64,
    /// Quantum channel attenuation, dB.
    pub channel_loss_db: f64,
    /// Bob's optics and coupling loss, dB.
    pub receiver_loss_db: f64,
    /// Single-photon detector efficiency, in [0, 1].
    pub detector_efficiency: f64,
    /// Dark counts per second, per detector channel.
    pub dark_count_rate: f64,
    /// FWHM of the optical pulse, seconds.
    pub optical_pulse_fwhm: f64,
    /// FWHM of the Gaussian system jitter convolved onto detection times.
    pub detection_jitter_fwhm: f64,
    /// Timing resolution of the receiver's binning, seconds.
    pub bin_width: f64,
    /// DC bias current as a fraction of lasing threshold, in [0, 1).
    pub dc_bias_ratio: f64,
    /// Expected spontaneous-emission photons per laser per slot at Alice's
    /// output, before channel loss.
    pub se_rate_per_laser: f64,
    /// Probability that a signal photon projects onto the wrong detector of
    /// the correct basis (polarization extinction / misalignment).
    pub optical_error_prob: f64,
    /// Error-correction inefficiency f(e).
    pub ec_coefficient: f64,
    /// Sifting ratio q.
    pub sifting_ratio: f64,
    /// Per-channel detector dead time, seconds. 0 disables it.
    pub dead_time: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            clock_rate: 4.0e8,
            mean_photon_number: 0.5,
            channel_loss_db: 10.0,
            receiver_loss_db: 2.0,
            detector_efficiency: 0.5,
            dark_count_rate: 500.0,
            optical_pulse_fwhm: 65e-12,
            detection_jitter_fwhm: 747e-12,
            bin_width: 125e-12,
            dc_bias_ratio: 0.0,
            se_rate_per_laser: 0.0,
            optical_error_prob: 0.0,
            ec_coefficient: 1.22,
            sifting_ratio: 0.5,
            dead_time: 0.0,
        }
    }
}

fn check(ok: bool, field: &'static str, reason: String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidConfig { field, reason })
    }
}

impl SystemConfig {
    /// Slot period in seconds.
    pub fn slot_period(&self) -> f64 {
        1.0 / self.clock_rate
    }

    /// Number of timing bins per slot.
    pub fn bins_per_slot(&self) -> usize {
        (self.slot_period() / self.bin_width).round() as usize
    }

    /// End-to-end transmittance: channel and receiver loss times detector
    /// efficiency. Excludes protocol effects such as sifting.
    pub fn link_transmittance(&self) -> f64 {
        let loss_db = self.channel_loss_db + self.receiver_loss_db;
        10f64.powf(-loss_db / 10.0) * self.detector_efficiency
    }

    pub fn validate(&self) -> Result<()> {
        check(
            self.clock_rate > 0.0 && self.clock_rate.is_finite(),
            "clock_rate",
            format!("must be > 0, got {}", self.clock_rate),
        )?;
        check(
            self.mean_photon_number >= 0.0,
            "mean_photon_number",
            format!("must be >= 0, got {}", self.mean_photon_number),
        )?;
        check(
            self.channel_loss_db >= 0.0,
            "channel_loss_db",
            format!("must be >= 0 dB, got {}", self.channel_loss_db),
        )?;
        check(
            self.receiver_loss_db >= 0.0,
            "receiver_loss_db",
            format!("must be >= 0 dB, got {}", self.receiver_loss_db),
        )?;
        for (field, v) in [
            ("detector_efficiency", self.detector_efficiency),
            ("optical_error_prob", self.optical_error_prob),
            ("sifting_ratio", self.sifting_ratio),
        ] {
            check(
                (0.0..=1.0).contains(&v),
                match field {
                    "detector_efficiency" => "detector_efficiency",
                    "optical_error_prob" => "optical_error_prob",
                    _ => "sifting_ratio",
                },
                format!("must be a probability in [0, 1], got {v}"),
            )?;
        }
        check(
            self.dark_count_rate >= 0.0,
            "dark_count_rate",
            format!("must be >= 0, got {}", self.dark_count_rate),
        )?;
        check(
            self.optical_pulse_fwhm > 0.0,
            "optical_pulse_fwhm",
            format!("must be > 0, got {}", self.optical_pulse_fwhm),
        )?;
        check(
            self.detection_jitter_fwhm >= 0.0,
            "detection_jitter_fwhm",
            format!("must be >= 0, got {}", self.detection_jitter_fwhm),
        )?;
        check(
            (0.0..1.0).contains(&self.dc_bias_ratio),
            "dc_bias_ratio",
            format!(
                "laser must stay below threshold: need [0, 1), got {}",
                self.dc_bias_ratio
            ),
        )?;
        check(
            self.se_rate_per_laser >= 0.0,
            "se_rate_per_laser",
            format!("must be >= 0, got {}", self.se_rate_per_laser),
        )?;
        check(
            self.ec_coefficient >= 1.0,
            "ec_coefficient",
            format!("must be >= 1, got {}", self.ec_coefficient),
        )?;
        check(
            self.dead_time >= 0.0,
            "dead_time",
            format!("must be >= 0, got {}", self.dead_time),
        )?;
        // The bin grid has to tile the slot exactly.
        let ratio = self.slot_period() / self.bin_width;
        let k = ratio.round();
        check(
            self.bin_width > 0.0 && k >= 1.0 && (ratio - k).abs() < 1e-6 * k,
            "bin_width",
            format!(
                "must divide the slot period exactly; {} / {} = {ratio}",
                self.slot_period(),
                self.bin_width
            ),
        )?;
        Ok(())
    }
}
