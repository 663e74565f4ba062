//! Scenario specs: a flat key/value file format describing one run, plus the
//! two bundled reference scenarios.
//!
//! A spec file holds `key = value` lines grouped into `[source]`,
//! `[channel]`, `[detector]`, `[sidechannel]`, `[protocol]` and `[sweep]`
//! sections. Keys may be omitted (they fall back to the bundled defaults);
//! unknown keys are rejected with their line number.

use std::fmt::Write as _;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::model::SideChannelModel;

/// A fully resolved scenario: configuration, side-channel model, run length,
/// seed and the sweep grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub config: SystemConfig,
    pub side_channel: SideChannelModel,
    pub n_slots: u64,
    pub seed: Option<u64>,
    /// Sweep widths in seconds, ascending.
    pub sweep_widths: Vec<f64>,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        let config = SystemConfig::default();
        let side_channel = SideChannelModel {
            min_interval: config.slot_period(),
            ..SideChannelModel::default()
        };
        ScenarioSpec {
            name: "unnamed".into(),
            config,
            side_channel,
            n_slots: 10_000_000,
            seed: None,
            sweep_widths: reference_sweep_grid(),
        }
    }
}

/// The standard sweep grid: 0.5 ns to 2.5 ns in 0.25 ns steps.
pub fn reference_sweep_grid() -> Vec<f64> {
    (2..=10).map(|k| k as f64 * 0.25e-9).collect()
}

/// Text of the bundled zero-DC-bias scenario.
pub const PAPER_ZERO_BIAS: &str = include_str!("../scenarios/paper-zero-bias.spec");
/// Text of the bundled high-DC-bias scenario.
pub const PAPER_HIGH_BIAS: &str = include_str!("../scenarios/paper-high-bias.spec");

impl ScenarioSpec {
    /// Resolve a bundled scenario by name.
    pub fn bundled(name: &str) -> Option<Result<ScenarioSpec>> {
        match name {
            "paper-zero-bias" => Some(ScenarioSpec::parse(PAPER_ZERO_BIAS)),
            "paper-high-bias" => Some(ScenarioSpec::parse(PAPER_HIGH_BIAS)),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        self.side_channel.validate()?;
        if self.n_slots == 0 {
            return Err(Error::InvalidParameter("n_slots must be >= 1".into()));
        }
        if self.sweep_widths.is_empty() {
            return Err(Error::InvalidParameter(
                "sweep widths must be nonempty".into(),
            ));
        }
        Ok(())
    }

    /// Parse a spec file; missing keys keep their defaults.
    pub fn parse(text: &str) -> Result<ScenarioSpec> {
        let mut spec = ScenarioSpec::default();
        let mut section = String::new();
        let mut base_offset_set = false;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(sec) = line.strip_prefix('[') {
                let sec = sec.strip_suffix(']').ok_or(Error::SpecParse {
                    line: line_no,
                    reason: format!("malformed section header {line:?}"),
                })?;
                section = sec.trim().to_string();
                match section.as_str() {
                    "source" | "channel" | "detector" | "sidechannel" | "protocol" | "sweep" => {}
                    other => {
                        return Err(Error::SpecParse {
                            line: line_no,
                            reason: format!("unknown section [{other}]"),
                        })
                    }
                }
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(Error::SpecParse {
                line: line_no,
                reason: format!("expected key = value, got {line:?}"),
            })?;
            let key = key.trim();
            let value = value.trim();
            let num = |v: &str| -> Result<f64> {
                v.parse::<f64>().map_err(|_| Error::SpecParse {
                    line: line_no,
                    reason: format!("{key}: not a number: {v:?}"),
                })
            };
            let int = |v: &str| -> Result<u64> {
                // Accept 1e8-style counts too.
                if let Ok(i) = v.parse::<u64>() {
                    return Ok(i);
                }
                let f = v.parse::<f64>().map_err(|_| Error::SpecParse {
                    line: line_no,
                    reason: format!("{key}: not a count: {v:?}"),
                })?;
                if f < 0.0 || f.fract() != 0.0 || f > 1.8e19 {
                    return Err(Error::SpecParse {
                        line: line_no,
                        reason: format!("{key}: not a whole count: {v:?}"),
                    });
                }
                Ok(f as u64)
            };
            let flag = |v: &str| -> Result<bool> {
                match v {
                    "true" | "1" | "yes" => Ok(true),
                    "false" | "0" | "no" => Ok(false),
                    _ => Err(Error::SpecParse {
                        line: line_no,
                        reason: format!("{key}: not a boolean: {v:?}"),
                    }),
                }
            };

            match (section.as_str(), key) {
                ("", "name") => spec.name = value.to_string(),
                ("source", "clock_rate") => spec.config.clock_rate = num(value)?,
                ("source", "mean_photon_number") => spec.config.mean_photon_number = num(value)?,
                ("source", "optical_pulse_fwhm") => spec.config.optical_pulse_fwhm = num(value)?,
                ("source", "se_rate_per_laser") => spec.config.se_rate_per_laser = num(value)?,
                ("source", "dc_bias_ratio") => spec.config.dc_bias_ratio = num(value)?,
                ("channel", "channel_loss_db") => spec.config.channel_loss_db = num(value)?,
                ("detector", "receiver_loss_db") => spec.config.receiver_loss_db = num(value)?,
                ("detector", "detector_efficiency") => {
                    spec.config.detector_efficiency = num(value)?
                }
                ("detector", "dark_count_rate") => spec.config.dark_count_rate = num(value)?,
                ("detector", "detection_jitter_fwhm") => {
                    spec.config.detection_jitter_fwhm = num(value)?
                }
                ("detector", "bin_width") => spec.config.bin_width = num(value)?,
                ("detector", "dead_time") => spec.config.dead_time = num(value)?,
                ("sidechannel", "enabled") => spec.side_channel.enabled = flag(value)?,
                ("sidechannel", "base_offset") => {
                    spec.side_channel.base_offset = num(value)?;
                    base_offset_set = true;
                }
                ("sidechannel", "max_temporal_offset") => {
                    spec.side_channel.max_temporal_offset = num(value)?
                }
                ("sidechannel", "relaxation_time") => {
                    spec.side_channel.relaxation_time = num(value)?
                }
                ("sidechannel", "max_amplitude_deviation") => {
                    spec.side_channel.max_amplitude_deviation = num(value)?
                }
                ("protocol", "optical_error_prob") => spec.config.optical_error_prob = num(value)?,
                ("protocol", "ec_coefficient") => spec.config.ec_coefficient = num(value)?,
                ("protocol", "sifting_ratio") => spec.config.sifting_ratio = num(value)?,
                ("protocol", "n_slots") => spec.n_slots = int(value)?,
                ("protocol", "seed") => spec.seed = Some(int(value)?),
                ("sweep", "widths_ns") => {
                    let mut widths = Vec::new();
                    for part in value.split(',') {
                        widths.push(num(part.trim())? * 1e-9);
                    }
                    widths.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    spec.sweep_widths = widths;
                }
                (sec, key) => {
                    return Err(Error::SpecParse {
                        line: line_no,
                        reason: if sec.is_empty() {
                            format!("unknown key {key:?} before any section")
                        } else {
                            format!("unknown key {key:?} in section [{sec}]")
                        },
                    })
                }
            }
        }
        // The relaxation law anchors at the minimum physical interval, which
        // is one slot period.
        spec.side_channel.min_interval = spec.config.slot_period();
        let _ = base_offset_set;
        spec.validate()?;
        Ok(spec)
    }

    /// Render back to the file format; `parse(render())` reproduces `self`.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "name = {}", self.name);
        let c = &self.config;
        let _ = writeln!(s, "\n[source]");
        let _ = writeln!(s, "clock_rate = {:e}", c.clock_rate);
        let _ = writeln!(s, "mean_photon_number = {}", c.mean_photon_number);
        let _ = writeln!(s, "optical_pulse_fwhm = {:e}", c.optical_pulse_fwhm);
        let _ = writeln!(s, "se_rate_per_laser = {:e}", c.se_rate_per_laser);
        let _ = writeln!(s, "dc_bias_ratio = {}", c.dc_bias_ratio);
        let _ = writeln!(s, "\n[channel]");
        let _ = writeln!(s, "channel_loss_db = {}", c.channel_loss_db);
        let _ = writeln!(s, "\n[detector]");
        let _ = writeln!(s, "receiver_loss_db = {}", c.receiver_loss_db);
        let _ = writeln!(s, "detector_efficiency = {}", c.detector_efficiency);
        let _ = writeln!(s, "dark_count_rate = {}", c.dark_count_rate);
        let _ = writeln!(s, "detection_jitter_fwhm = {:e}", c.detection_jitter_fwhm);
        let _ = writeln!(s, "bin_width = {:e}", c.bin_width);
        let _ = writeln!(s, "dead_time = {:e}", c.dead_time);
        let m = &self.side_channel;
        let _ = writeln!(s, "\n[sidechannel]");
        let _ = writeln!(s, "enabled = {}", m.enabled);
        let _ = writeln!(s, "base_offset = {:e}", m.base_offset);
        let _ = writeln!(s, "max_temporal_offset = {:e}", m.max_temporal_offset);
        let _ = writeln!(s, "relaxation_time = {:e}", m.relaxation_time);
        let _ = writeln!(s, "max_amplitude_deviation = {}", m.max_amplitude_deviation);
        let _ = writeln!(s, "\n[protocol]");
        let _ = writeln!(s, "optical_error_prob = {:e}", c.optical_error_prob);
        let _ = writeln!(s, "ec_coefficient = {}", c.ec_coefficient);
        let _ = writeln!(s, "sifting_ratio = {}", c.sifting_ratio);
        let _ = writeln!(s, "n_slots = {}", self.n_slots);
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "seed = {seed}");
        }
        let _ = writeln!(s, "\n[sweep]");
        let widths: Vec<String> = self.sweep_widths.iter().map(|&w| width_ns(w)).collect();
        let _ = writeln!(s, "widths_ns = {}", widths.join(", "));
        s
    }
}

/// Shortest decimal nanosecond string that parses back to exactly `w`
/// seconds; keeps render/parse a strict round trip despite the unit change.
fn width_ns(w: f64) -> String {
    let ns = w * 1e9;
    for prec in 0..=17 {
        let s = format!("{ns:.prec$}");
        if let Ok(v) = s.parse::<f64>() {
            if v * 1e-9 == w {
                return s;
            }
        }
    }
    format!("{ns:e}")
}
