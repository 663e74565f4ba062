//! Seeded Monte Carlo generation of Alice's random sequence and Bob's
//! detection events.
//!
//! Slots are simulated independently: every random draw for slot `i` comes
//! from counter-based streams keyed on `(seed, stream, i)`, so a run can be
//! partitioned across any number of threads and still produce bit-identical
//! results. Jitter can carry a signal photon across the slot boundary; such
//! detections are recorded in whichever slot they land in, the way a
//! free-running binning receiver would see them.

use rayon::prelude::*;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::model::{Polarization, SideChannelModel, FWHM_TO_SIGMA};
use crate::record::{
    build_histogram, AlicePrep, Detection, DetectionOrigin, DetectionRecord, SlotHistogram,
};
use crate::rng::{RngSeed, SlotRng, Stream};

/// Everything `simulate_run` produces.
#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub record: DetectionRecord,
    pub histogram: SlotHistogram,
    pub config_echo: SystemConfig,
}

/// Which laser fires in a slot. Laser `L` always emits polarization `L`.
#[inline]
pub fn laser_for_slot(seed: RngSeed, slot: u64) -> Polarization {
    Polarization::from_index(SlotRng::new(seed, Stream::Alice, slot).below(4) as u8)
}

/// Alice's full random sequence: per slot the fired polarization and the
/// interval (in slots) since that laser last fired. The first firing of each
/// laser has no interval, meaning a fully relaxed pulse.
pub fn generate_alice_sequence(n_slots: u64, seed: RngSeed) -> Vec<AlicePrep> {
    let mut last: [Option<u64>; 4] = [None; 4];
    let mut out = Vec::with_capacity(n_slots as usize);
    for slot in 0..n_slots {
        let pol = laser_for_slot(seed, slot);
        let li = pol as usize;
        let interval_slots = last[li].map(|p| slot - p);
        last[li] = Some(slot);
        out.push(AlicePrep {
            slot,
            polarization: pol,
            interval_slots,
        });
    }
    out
}

/// Route a photon of the given polarization through Bob's passive basis
/// choice. `optical_error_prob` is the chance of projecting onto the wrong
/// detector of the correct basis.
#[inline]
fn route(pol: Polarization, optical_error_prob: f64, rng: &mut SlotRng) -> Polarization {
    let u = rng.uniform();
    if u < 0.5 {
        // Measured in its own basis.
        if u < 0.5 * (1.0 - optical_error_prob) {
            pol
        } else {
            pol.orthogonal()
        }
    } else {
        // Conjugate basis: 50/50 between its two detectors.
        let conj_base = match pol.basis() {
            crate::model::Basis::Rectilinear => 2,
            crate::model::Basis::Diagonal => 0,
        };
        Polarization::from_index(conj_base + (u >= 0.75) as u8)
    }
}

struct ChunkOutput {
    detections: Vec<Detection>,
}

fn simulate_chunk(
    config: &SystemConfig,
    side_channel: &SideChannelModel,
    n_slots: u64,
    seed: RngSeed,
    start: u64,
    end: u64,
) -> ChunkOutput {
    let slot_period = config.slot_period();
    let bins = config.bins_per_slot() as i64;
    let bin_width = config.bin_width;
    let eta = config.link_transmittance();
    let mu_eta = config.mean_photon_number * eta;
    let sigma_pulse = config.optical_pulse_fwhm / FWHM_TO_SIGMA;
    let sigma_jitter = config.detection_jitter_fwhm / FWHM_TO_SIGMA;
    let lambda_se = 4.0 * config.se_rate_per_laser * eta;
    let lambda_dark = 4.0 * config.dark_count_rate * slot_period;
    let exp_se = (-lambda_se).exp();
    let exp_dark = (-lambda_dark).exp();
    let e_opt = config.optical_error_prob;

    // exp(-mu*eta*a) cached per interval length in slots; the amplitude
    // factor only depends on the interval.
    let mut exp_sig_cache: Vec<f64> = Vec::new();
    let exp_sig_inf = (-mu_eta).exp();
    let mut exp_sig = |interval_slots: Option<u64>| -> f64 {
        if !side_channel.enabled {
            return exp_sig_inf;
        }
        match interval_slots {
            None => exp_sig_inf,
            Some(k) if k as usize <= 512 => {
                let k = k as usize;
                if exp_sig_cache.len() <= k {
                    exp_sig_cache.resize(k + 1, f64::NAN);
                }
                if exp_sig_cache[k].is_nan() {
                    let a = side_channel
                        .amplitude_factor(k as f64 * slot_period)
                        .expect("interval >= 0");
                    exp_sig_cache[k] = (-mu_eta * a).exp();
                }
                exp_sig_cache[k]
            }
            Some(k) => {
                let a = side_channel
                    .amplitude_factor(k as f64 * slot_period)
                    .expect("interval >= 0");
                (-mu_eta * a).exp()
            }
        }
    };

    // Recover the firing history at the chunk boundary. Laser choice is a
    // pure function of (seed, slot), so scanning backwards reproduces the
    // exact per-laser intervals the sequential run would see.
    let mut last: [Option<u64>; 4] = [None; 4];
    if start > 0 {
        let mut found = 0;
        for s in (0..start).rev() {
            let li = laser_for_slot(seed, s) as usize;
            if last[li].is_none() {
                last[li] = Some(s);
                found += 1;
                if found == 4 {
                    break;
                }
            }
        }
    }

    let mut detections = Vec::new();
    for slot in start..end {
        let pol = laser_for_slot(seed, slot);
        let li = pol as usize;
        let interval_slots = last[li].map(|p| slot - p);
        last[li] = Some(slot);

        // Signal photons.
        let mut sig_rng = SlotRng::new(seed, Stream::Signal, slot);
        let n_photons = sig_rng.poisson(exp_sig(interval_slots));
        if n_photons > 0 {
            let interval = interval_slots
                .map(|k| k as f64 * slot_period)
                .unwrap_or(f64::INFINITY);
            let center = side_channel.base_offset
                + side_channel
                    .temporal_offset(interval)
                    .expect("interval >= 0");
            for _ in 0..n_photons {
                let channel = route(pol, e_opt, &mut sig_rng);
                let t = center + sigma_pulse * sig_rng.normal() + sigma_jitter * sig_rng.normal();
                // Bin on the free-running grid; spill lands in a neighbour.
                let shift = (t / slot_period).floor();
                let rslot = slot as i64 + shift as i64;
                if rslot < 0 || rslot as u64 >= n_slots {
                    continue;
                }
                let mut bin = ((t - shift * slot_period) / bin_width) as i64;
                bin = bin.clamp(0, bins - 1);
                detections.push(Detection {
                    slot: rslot as u64,
                    channel,
                    time_bin: bin as u8,
                    origin: DetectionOrigin::Signal,
                });
            }
        }

        // Spontaneous emission from the four DC-biased lasers plus detector
        // dark counts, both uniform over the slot.
        let mut noise_rng = SlotRng::new(seed, Stream::Noise, slot);
        let n_se = noise_rng.poisson(exp_se);
        for _ in 0..n_se {
            let se_pol = Polarization::from_index(noise_rng.below(4) as u8);
            let channel = route(se_pol, e_opt, &mut noise_rng);
            let bin = noise_rng.below(bins as u32) as u8;
            detections.push(Detection {
                slot,
                channel,
                time_bin: bin,
                origin: DetectionOrigin::SpontEmission,
            });
        }
        let n_dark = noise_rng.poisson(exp_dark);
        for _ in 0..n_dark {
            let channel = Polarization::from_index(noise_rng.below(4) as u8);
            let bin = noise_rng.below(bins as u32) as u8;
            detections.push(Detection {
                slot,
                channel,
                time_bin: bin,
                origin: DetectionOrigin::Dark,
            });
        }
    }
    ChunkOutput { detections }
}

/// Apply per-channel detector dead time to a slot-sorted detection list.
/// A click suppresses later clicks on the same channel until `dead_time`
/// has elapsed. No-op when `dead_time` is 0 (the default).
fn apply_dead_time(detections: &mut Vec<Detection>, config: &SystemConfig) {
    if config.dead_time <= 0.0 {
        return;
    }
    let slot_period = config.slot_period();
    let bin_width = config.bin_width;
    let mut live_at = [f64::NEG_INFINITY; 4];
    detections.retain(|d| {
        let t = d.slot as f64 * slot_period + (d.time_bin as f64 + 0.5) * bin_width;
        let ch = d.channel as usize;
        if t < live_at[ch] {
            false
        } else {
            live_at[ch] = t + config.dead_time;
            true
        }
    });
}

/// Run the full Monte Carlo: Alice's random firing sequence, photon
/// generation with the interval-dependent side channel, channel and
/// detector losses folded into the photon statistics, spontaneous-emission
/// and dark-count noise, jitter, and binning.
pub fn simulate_run(
    config: &SystemConfig,
    side_channel: &SideChannelModel,
    n_slots: u64,
    seed: RngSeed,
) -> Result<ScenarioResult> {
    config.validate()?;
    side_channel.validate()?;
    if n_slots == 0 {
        return Err(Error::InvalidParameter("n_slots must be >= 1".into()));
    }

    const CHUNK: u64 = 1 << 18;
    let ranges: Vec<(u64, u64)> = (0..n_slots)
        .step_by(CHUNK as usize)
        .map(|s| (s, (s + CHUNK).min(n_slots)))
        .collect();

    let chunks: Vec<ChunkOutput> = ranges
        .par_iter()
        .map(|&(s, e)| simulate_chunk(config, side_channel, n_slots, seed, s, e))
        .collect();

    let mut detections: Vec<Detection> = chunks.into_iter().flat_map(|c| c.detections).collect();
    // Jitter spill can cross chunk boundaries, so impose a canonical order
    // before any per-slot processing. The order must not depend on how slots
    // were partitioned.
    detections.sort_unstable_by_key(|d| (d.slot, d.channel as u8, d.time_bin, d.origin as u8));
    apply_dead_time(&mut detections, config);

    // Alice rows for every slot that holds a detection.
    let mut alice = Vec::new();
    let mut prev_slot = u64::MAX;
    for d in &detections {
        if d.slot != prev_slot {
            prev_slot = d.slot;
            alice.push(alice_for_slot(seed, d.slot));
        }
    }

    let record = DetectionRecord {
        n_slots,
        detections,
        alice,
    };
    let histogram = build_histogram(&record, config);
    Ok(ScenarioResult {
        record,
        histogram,
        config_echo: config.clone(),
    })
}

/// Alice's preparation for one slot, recovered from the seed alone.
fn alice_for_slot(seed: RngSeed, slot: u64) -> AlicePrep {
    let pol = laser_for_slot(seed, slot);
    let mut interval_slots = None;
    for s in (0..slot).rev() {
        if laser_for_slot(seed, s) == pol {
            interval_slots = Some(slot - s);
            break;
        }
    }
    AlicePrep {
        slot,
        polarization: pol,
        interval_slots,
    }
}
