//! Detection records and slot-aligned histograms.

use crate::config::SystemConfig;
use crate::model::Polarization;

/// Ground-truth origin of a detection. Diagnostics only: the sifting path
/// never looks at it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum DetectionOrigin {
    Signal = 0,
    SpontEmission = 1,
    Dark = 2,
}

impl DetectionOrigin {
    pub const ALL: [DetectionOrigin; 3] = [
        DetectionOrigin::Signal,
        DetectionOrigin::SpontEmission,
        DetectionOrigin::Dark,
    ];
}

/// One click on one of Bob's four detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Detection {
    /// Slot the click was recorded in. Jitter can carry a photon across the
    /// slot boundary, in which case this is the neighbouring slot.
    pub slot: u64,
    /// Detector channel, named by the polarization it projects onto.
    pub channel: Polarization,
    /// Timing bin within the slot, `0..bins_per_slot`.
    pub time_bin: u8,
    pub origin: DetectionOrigin,
}

/// Alice's preparation for one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlicePrep {
    pub slot: u64,
    pub polarization: Polarization,
    /// Slots since the same laser last fired; `None` for its first firing
    /// of the run (fully relaxed).
    pub interval_slots: Option<u64>,
}

impl AlicePrep {
    pub fn bit(&self) -> u8 {
        self.polarization.bit()
    }
    /// Interval in seconds; infinite for the first firing.
    pub fn interval(&self, slot_period: f64) -> f64 {
        match self.interval_slots {
            Some(k) => k as f64 * slot_period,
            None => f64::INFINITY,
        }
    }
}

/// Per-slot ground truth and Bob's detections for a run.
///
/// Alice's preparations are stored only for slots that received at least one
/// detection; a full run prepares every slot, but at 10^8 slots per scenario
/// a dense table would dwarf the data anyone consumes. Both vectors are
/// sorted by slot.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRecord {
    pub n_slots: u64,
    pub detections: Vec<Detection>,
    pub alice: Vec<AlicePrep>,
}

impl DetectionRecord {
    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }

    /// Alice's preparation for a slot, if that slot holds any detection.
    pub fn alice_for(&self, slot: u64) -> Option<&AlicePrep> {
        self.alice
            .binary_search_by_key(&slot, |a| a.slot)
            .ok()
            .map(|i| &self.alice[i])
    }

    /// Detections grouped by slot, in slot order.
    pub fn by_slot(&self) -> impl Iterator<Item = (u64, &[Detection])> {
        SlotGroups {
            detections: &self.detections,
            pos: 0,
        }
    }

    pub fn assert_invariants(&self, bins_per_slot: usize) {
        for d in &self.detections {
            assert!(d.slot < self.n_slots, "detection outside run");
            assert!((d.time_bin as usize) < bins_per_slot, "bin outside slot");
        }
        assert!(
            self.detections.windows(2).all(|w| w[0].slot <= w[1].slot),
            "detections not sorted by slot"
        );
    }
}

struct SlotGroups<'a> {
    detections: &'a [Detection],
    pos: usize,
}

impl<'a> Iterator for SlotGroups<'a> {
    type Item = (u64, &'a [Detection]);
    fn next(&mut self) -> Option<Self::Item> {
        if self.pos >= self.detections.len() {
            return None;
        }
        let start = self.pos;
        let slot = self.detections[start].slot;
        let mut end = start + 1;
        while end < self.detections.len() && self.detections[end].slot == slot {
            end += 1;
        }
        self.pos = end;
        Some((slot, &self.detections[start..end]))
    }
}

/// Detection counts per (detector channel, timing bin), folded over slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotHistogram {
    /// `counts[channel][bin]`.
    pub counts: [Vec<u64>; 4],
    pub total: u64,
}

impl SlotHistogram {
    pub fn new(bins: usize) -> Self {
        SlotHistogram {
            counts: std::array::from_fn(|_| vec![0; bins]),
            total: 0,
        }
    }

    pub fn bins(&self) -> usize {
        self.counts[0].len()
    }

    pub fn add(&mut self, channel: Polarization, bin: u8) {
        self.counts[channel as usize][bin as usize] += 1;
        self.total += 1;
    }

    /// Counts summed over the four channels.
    pub fn summed(&self) -> Vec<u64> {
        let mut out = vec![0u64; self.bins()];
        for ch in &self.counts {
            for (o, c) in out.iter_mut().zip(ch) {
                *o += c;
            }
        }
        out
    }

    /// Normalized view over all cells; sums to 1 when total > 0.
    pub fn normalized(&self) -> [Vec<f64>; 4] {
        let t = self.total.max(1) as f64;
        std::array::from_fn(|c| self.counts[c].iter().map(|&x| x as f64 / t).collect())
    }

    /// FWHM of the detection lobe in seconds, measured on the channel-summed
    /// histogram with linear interpolation at the half-maximum crossings.
    ///
    /// The lobe may wrap across the slot boundary (jitter spill lands in the
    /// neighbouring slot's first bins), so the histogram is first rotated to
    /// center the peak.
    #[allow(clippy::needless_range_loop)]
    pub fn lobe_fwhm(&self, bin_width: f64) -> Option<f64> {
        let summed = self.summed();
        let n = summed.len();
        if n == 0 || self.total == 0 {
            return None;
        }
        let peak_idx = (0..n).max_by_key(|&i| summed[i])?;
        let shift = (n / 2) as i64 - peak_idx as i64;
        let rot: Vec<f64> = (0..n)
            .map(|i| summed[((i as i64 - shift).rem_euclid(n as i64)) as usize] as f64)
            .collect();
        let peak = rot[n / 2];
        // Estimate the flat background as the mean of the lowest quartile of
        // bins, so a uniform noise floor does not inflate the width.
        let mut sorted = rot.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let floor = sorted[..(n / 4).max(1)].iter().sum::<f64>() / (n / 4).max(1) as f64;
        let half = floor + 0.5 * (peak - floor);

        let crossing = |i0: usize, i1: usize| -> f64 {
            let (a, b) = (rot[i0], rot[i1]);
            if (b - a).abs() < f64::EPSILON {
                return i1 as f64;
            }
            i0 as f64 + (half - a) / (b - a)
        };
        let mut left = None;
        for i in (0..n / 2).rev() {
            if rot[i] < half {
                left = Some(crossing(i, i + 1));
                break;
            }
        }
        let mut right = None;
        for i in n / 2 + 1..n {
            if rot[i] < half {
                right = Some(crossing(i - 1, i));
                break;
            }
        }
        match (left, right) {
            (Some(l), Some(r)) => Some((r - l) * bin_width),
            _ => None,
        }
    }
}

/// Rebuild the per-channel timing histogram from a record.
pub fn build_histogram(record: &DetectionRecord, config: &SystemConfig) -> SlotHistogram {
    let mut h = SlotHistogram::new(config.bins_per_slot());
    for d in &record.detections {
        h.add(d.channel, d.time_bin);
    }
    h
}
