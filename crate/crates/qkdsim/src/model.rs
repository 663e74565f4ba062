//! Domain types and closed-form physics models: polarization encoding,
//! the interval-dependent side channel of gain-switched lasers, and the
//! emitted pulse waveform.

use crate::error::{Error, Result};

/// Gaussian FWHM-to-sigma conversion factor, 2*sqrt(2 ln 2).
pub const FWHM_TO_SIGMA: f64 = 2.354_820_045_030_949_3;

/// BB84 measurement basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    Rectilinear,
    Diagonal,
}

/// The four BB84 polarization states. One laser diode is assigned to each.
///
/// Bit mapping: H -> 0, V -> 1, D -> 0, A -> 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Polarization {
    H = 0,
    V = 1,
    D = 2,
    A = 3,
}

impl Polarization {
    pub const ALL: [Polarization; 4] = [
        Polarization::H,
        Polarization::V,
        Polarization::D,
        Polarization::A,
    ];

    pub fn basis(self) -> Basis {
        match self {
            Polarization::H | Polarization::V => Basis::Rectilinear,
            Polarization::D | Polarization::A => Basis::Diagonal,
        }
    }

    pub fn bit(self) -> u8 {
        self as u8 & 1
    }

    pub fn from_basis_bit(basis: Basis, bit: u8) -> Polarization {
        match (basis, bit & 1) {
            (Basis::Rectilinear, 0) => Polarization::H,
            (Basis::Rectilinear, _) => Polarization::V,
            (Basis::Diagonal, 0) => Polarization::D,
            (Basis::Diagonal, _) => Polarization::A,
        }
    }

    pub fn from_index(i: u8) -> Polarization {
        Polarization::ALL[i as usize & 3]
    }

    /// The other state of the same basis.
    pub fn orthogonal(self) -> Polarization {
        Polarization::from_index(self as u8 ^ 1)
    }
}

/// Interval-dependent emission model of one gain-switched laser.
///
/// When a laser fires twice in quick succession, residual carriers from the
/// first pulse shift the second pulse earlier or later and change its energy.
/// Both effects decay as the interval grows; this model uses a single
/// exponential relaxation anchored at the minimum interval (one slot period):
///
/// - temporal offset:   delta(i) = max_temporal_offset * exp(-(i - min)/tau)
/// - amplitude factor:  a(i)     = 1 + max_amplitude_deviation * exp(-(i - min)/tau)
///
/// With `enabled = false` the pulse is interval-independent, which models a
/// laser biased close to threshold where consecutive pulses overlap.
#[derive(Debug, Clone, PartialEq)]
pub struct SideChannelModel {
    /// Nominal pulse peak position within the slot, seconds.
    pub base_offset: f64,
    /// Disparity amplitude at the minimum interval, seconds.
    pub max_temporal_offset: f64,
    /// Relaxation time constant of the carrier memory, seconds.
    pub relaxation_time: f64,
    /// Peak intensity deviation at the minimum interval, dimensionless.
    pub max_amplitude_deviation: f64,
    /// Anchor interval of the relaxation law, normally one slot period.
    pub min_interval: f64,
    /// Whether the memory effect is active.
    pub enabled: bool,
}

impl Default for SideChannelModel {
    fn default() -> Self {
        // Defaults are qualitative: strong enough that pulses 2.5 ns and
        // 40 ns after the previous firing are clearly distinguishable at
        // 125 ps binning.
        SideChannelModel {
            base_offset: 1.70e-9,
            max_temporal_offset: 150e-12,
            relaxation_time: 10e-9,
            max_amplitude_deviation: 0.3,
            min_interval: 2.5e-9,
            enabled: true,
        }
    }
}

impl SideChannelModel {
    /// An inactive model: nominal pulse regardless of interval.
    pub fn disabled(base_offset: f64, min_interval: f64) -> Self {
        SideChannelModel {
            base_offset,
            max_temporal_offset: 0.0,
            relaxation_time: 10e-9,
            max_amplitude_deviation: 0.0,
            min_interval,
            enabled: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.relaxation_time <= 0.0 || !self.relaxation_time.is_finite() {
            return Err(Error::InvalidConfig {
                field: "relaxation_time",
                reason: format!("must be > 0, got {}", self.relaxation_time),
            });
        }
        if self.max_temporal_offset < 0.0 {
            return Err(Error::InvalidConfig {
                field: "max_temporal_offset",
                reason: format!("must be >= 0, got {}", self.max_temporal_offset),
            });
        }
        if self.max_amplitude_deviation < 0.0 {
            return Err(Error::InvalidConfig {
                field: "max_amplitude_deviation",
                reason: format!("must be >= 0, got {}", self.max_amplitude_deviation),
            });
        }
        if self.min_interval <= 0.0 || !self.min_interval.is_finite() {
            return Err(Error::InvalidConfig {
                field: "min_interval",
                reason: format!("must be > 0, got {}", self.min_interval),
            });
        }
        Ok(())
    }

    fn relaxation(&self, interval: f64) -> f64 {
        if !self.enabled {
            return 0.0;
        }
        // Intervals below the anchor cannot occur physically; clamp.
        let d = (interval - self.min_interval).max(0.0);
        (-d / self.relaxation_time).exp()
    }

    /// Shift of the pulse peak for a given interval since the same laser
    /// last fired. Zero when disabled; decays to zero as the interval grows.
    pub fn temporal_offset(&self, interval: f64) -> Result<f64> {
        if interval < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "interval must be >= 0, got {interval}"
            )));
        }
        Ok(self.max_temporal_offset * self.relaxation(interval))
    }

    /// Pulse energy relative to the fully relaxed pulse; >= 1, non-increasing
    /// in the interval, exactly 1 when disabled.
    pub fn amplitude_factor(&self, interval: f64) -> Result<f64> {
        if interval < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "interval must be >= 0, got {interval}"
            )));
        }
        Ok(1.0 + self.max_amplitude_deviation * self.relaxation(interval))
    }

    /// Intensity density (1/s) of the emitted pulse at time `t_rel` within
    /// the slot: a Gaussian of the given FWHM centered at
    /// `base_offset + temporal_offset(interval)`, scaled by
    /// `amplitude_factor(interval)`, so it integrates to the amplitude factor.
    pub fn pulse_waveform(&self, t_rel: f64, interval: f64, fwhm: f64) -> Result<f64> {
        if fwhm <= 0.0 || !fwhm.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "fwhm must be > 0, got {fwhm}"
            )));
        }
        let center = self.base_offset + self.temporal_offset(interval)?;
        let amp = self.amplitude_factor(interval)?;
        let sigma = fwhm / FWHM_TO_SIGMA;
        let z = (t_rel - center) / sigma;
        Ok(amp * (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt()))
    }
}
