//! Runs a scenario end to end and writes the machine-readable result files:
//! `summary.txt` (key = value), `histogram.csv`, `sweep.csv` and
//! `tv_matrix.csv`. Scalars are printed with six significant digits so the
//! files diff stably; writes go through a temp file and rename.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::engine::simulate_run;
use crate::error::{Error, Result};
use crate::keyrate::{sweep_windows, WindowSweepResult};
use crate::record::SlotHistogram;
use crate::rng::RngSeed;
use crate::scenario::ScenarioSpec;
use crate::sidechan::{certify_closure, distinguishability, ClosureReport, IntervalWaveformSet};
use crate::sifting::{qber_decomposition, squash_and_sift, SiftedStats, TimeWindow};

/// Default closure threshold used in run reports.
pub const DEFAULT_CLOSURE_EPSILON: f64 = 0.05;

/// Everything a scenario run produces.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub spec: ScenarioSpec,
    pub seed: u64,
    pub full_window: SiftedStats,
    /// QBER split by ground-truth origin at the full window.
    pub qber_signal: f64,
    pub qber_se: f64,
    pub qber_dark: f64,
    pub sweep: WindowSweepResult,
    pub histogram: SlotHistogram,
    pub lobe_fwhm: Option<f64>,
    pub closure: ClosureReport,
    pub tv_intervals: Vec<f64>,
    pub tv_matrix: Vec<Vec<f64>>,
    /// Per-bin counts of ground-truth spontaneous-emission detections.
    pub se_bin_counts: Vec<u64>,
}

/// Simulate, sift, sweep and certify one scenario.
pub fn run_scenario(spec: &ScenarioSpec, seed: u64) -> Result<RunArtifacts> {
    spec.validate()?;
    let rng = RngSeed(seed);
    let result = simulate_run(&spec.config, &spec.side_channel, spec.n_slots, rng)?;
    let bins = spec.config.bins_per_slot();
    let full = TimeWindow::full(bins);
    let stats = squash_and_sift(&result.record, &spec.config, rng);
    let decomp = qber_decomposition(&result.record, &spec.config, full, rng);
    let sweep = sweep_windows(&result.record, &spec.config, &spec.sweep_widths, rng)?;
    let lobe_fwhm = result.histogram.lobe_fwhm(spec.config.bin_width);
    let mut se_bin_counts = vec![0u64; bins];
    for d in &result.record.detections {
        if d.origin == crate::record::DetectionOrigin::SpontEmission {
            se_bin_counts[d.time_bin as usize] += 1;
        }
    }
    let closure = certify_closure(&spec.side_channel, &spec.config, DEFAULT_CLOSURE_EPSILON)?;
    let set = IntervalWaveformSet::reference_grid(&spec.side_channel, &spec.config)?;
    let mut tv_matrix = Vec::with_capacity(set.intervals.len());
    for a in &set.waveforms {
        let mut row = Vec::with_capacity(set.intervals.len());
        for b in &set.waveforms {
            row.push(distinguishability(a, b)?);
        }
        tv_matrix.push(row);
    }
    Ok(RunArtifacts {
        spec: spec.clone(),
        seed,
        full_window: stats,
        qber_signal: decomp.signal,
        qber_se: decomp.spont_emission,
        qber_dark: decomp.dark,
        sweep,
        histogram: result.histogram,
        lobe_fwhm,
        closure,
        tv_intervals: set.intervals,
        tv_matrix,
        se_bin_counts,
    })
}

/// Six-significant-digit rendering used in every result file.
pub fn sig6(v: f64) -> String {
    if v == 0.0 {
        return "0.00000e0".into();
    }
    format!("{v:.5e}")
}

fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, dir.join(name))?;
    Ok(())
}

/// Render `summary.txt`.
pub fn render_summary(a: &RunArtifacts) -> String {
    let mut s = String::new();
    let opt = a.sweep.optimal_row();
    let full = a.sweep.row_near(a.spec.config.slot_period());
    let sacrifice = 1.0 - opt.sifted_rate / full.sifted_rate.max(f64::MIN_POSITIVE);
    let gain = if full.secure_rate > 0.0 {
        opt.secure_rate / full.secure_rate - 1.0
    } else {
        0.0
    };
    s.push_str(&format!("name = {}\n", a.spec.name));
    s.push_str(&format!("seed = {}\n", a.seed));
    s.push_str(&format!("n_slots = {}\n", a.spec.n_slots));
    s.push_str(&format!(
        "clock_rate_hz = {}\n",
        sig6(a.spec.config.clock_rate)
    ));
    s.push_str(&format!("detections = {}\n", a.histogram.total));
    s.push_str(&format!("qber_full = {}\n", sig6(a.full_window.qber)));
    s.push_str(&format!("no_data = {}\n", a.full_window.no_data));
    s.push_str(&format!(
        "sifted_bps_full = {}\n",
        sig6(a.full_window.sifted_rate)
    ));
    s.push_str(&format!("secure_bps_full = {}\n", sig6(full.secure_rate)));
    s.push_str(&format!(
        "optimal_width_ns = {}\n",
        sig6(a.sweep.optimal_width * 1e9)
    ));
    s.push_str(&format!("qber_opt = {}\n", sig6(opt.qber)));
    s.push_str(&format!("sifted_bps_opt = {}\n", sig6(opt.sifted_rate)));
    s.push_str(&format!("secure_bps_opt = {}\n", sig6(opt.secure_rate)));
    s.push_str(&format!("retained_opt = {}\n", sig6(opt.retained_fraction)));
    s.push_str(&format!("sacrifice_opt = {}\n", sig6(sacrifice)));
    s.push_str(&format!("filtering_gain = {}\n", sig6(gain)));
    s.push_str(&format!("qber_signal_part = {}\n", sig6(a.qber_signal)));
    s.push_str(&format!("qber_se_part = {}\n", sig6(a.qber_se)));
    s.push_str(&format!("qber_dark_part = {}\n", sig6(a.qber_dark)));
    s.push_str(&format!(
        "lobe_fwhm_ps = {}\n",
        sig6(a.lobe_fwhm.unwrap_or(0.0) * 1e12)
    ));
    s.push_str(&format!("closure_epsilon = {}\n", sig6(a.closure.epsilon)));
    s.push_str(&format!("closure_max_tv = {}\n", sig6(a.closure.max_tv)));
    s.push_str(&format!(
        "closure_max_amp_dev = {}\n",
        sig6(a.closure.max_amplitude_deviation)
    ));
    s.push_str(&format!("closure_pass = {}\n", a.closure.pass));
    s
}

fn render_histogram(a: &RunArtifacts) -> String {
    let mut s = String::from("channel,bin,count\n");
    for (ci, name) in ["H", "V", "D", "A"].iter().enumerate() {
        for (bin, count) in a.histogram.counts[ci].iter().enumerate() {
            s.push_str(&format!("{name},{bin},{count}\n"));
        }
    }
    s
}

fn render_sweep(a: &RunArtifacts) -> String {
    let mut s = String::from("width_ns,start_bin,qber,sifted_bps,secure_bps\n");
    for r in &a.sweep.rows {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            sig6(r.width * 1e9),
            r.start_bin,
            sig6(r.qber),
            sig6(r.sifted_rate),
            sig6(r.secure_rate)
        ));
    }
    s
}

fn render_tv_matrix(a: &RunArtifacts) -> String {
    let mut s = String::from("interval_ns");
    for i in &a.tv_intervals {
        s.push_str(&format!(",{}", sig6(i * 1e9)));
    }
    s.push('\n');
    for (i, row) in a.tv_matrix.iter().enumerate() {
        s.push_str(&sig6(a.tv_intervals[i] * 1e9));
        for v in row {
            s.push_str(&format!(",{}", sig6(*v)));
        }
        s.push('\n');
    }
    s
}

/// Write the four result files into `dir` (created if missing).
pub fn write_artifacts(dir: &Path, a: &RunArtifacts) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_atomic(dir, "summary.txt", &render_summary(a))?;
    write_atomic(dir, "histogram.csv", &render_histogram(a))?;
    write_atomic(dir, "sweep.csv", &render_sweep(a))?;
    write_atomic(dir, "tv_matrix.csv", &render_tv_matrix(a))?;
    Ok(())
}

/// Parse a summary file back into key/value form.
pub fn read_summary(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(Error::SpecParse {
            line: idx + 1,
            reason: format!("expected key = value in summary, got {line:?}"),
        })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn summary_num(map: &BTreeMap<String, String>, key: &str, path: &Path) -> Result<f64> {
    map.get(key)
        .and_then(|v| v.parse::<f64>().ok())
        .ok_or_else(|| Error::InvalidParameter(format!("{}: missing {key}", path.display())))
}

/// Percentage deltas between two completed runs.
#[derive(Debug, Clone)]
pub struct CompareReport {
    pub name_a: String,
    pub name_b: String,
    /// (B - A) / A of the full-window secure rate, percent.
    pub secure_full_delta_pct: f64,
    /// (B - A) / A of the secure rate at each run's own optimum, percent.
    pub secure_opt_delta_pct: f64,
    /// B - A of the full-window QBER, percentage points.
    pub qber_full_delta_pp: f64,
    /// Each run's own temporal-filtering gain (optimum vs full), percent.
    pub filtering_gain_a_pct: f64,
    pub filtering_gain_b_pct: f64,
}

/// Compare two run directories by their summary files.
pub fn compare_dirs(dir_a: &Path, dir_b: &Path) -> Result<CompareReport> {
    let pa = dir_a.join("summary.txt");
    let pb = dir_b.join("summary.txt");
    for p in [&pa, &pb] {
        if !p.exists() {
            return Err(Error::InvalidParameter(format!(
                "missing run summary: {}",
                p.display()
            )));
        }
    }
    let a = read_summary(&pa)?;
    let b = read_summary(&pb)?;
    let sa = summary_num(&a, "secure_bps_full", &pa)?;
    let sb = summary_num(&b, "secure_bps_full", &pb)?;
    let oa = summary_num(&a, "secure_bps_opt", &pa)?;
    let ob = summary_num(&b, "secure_bps_opt", &pb)?;
    let qa = summary_num(&a, "qber_full", &pa)?;
    let qb = summary_num(&b, "qber_full", &pb)?;
    let ga = summary_num(&a, "filtering_gain", &pa)?;
    let gb = summary_num(&b, "filtering_gain", &pb)?;
    let pct = |from: f64, to: f64| {
        if from == 0.0 {
            0.0
        } else {
            (to - from) / from * 100.0
        }
    };
    Ok(CompareReport {
        name_a: a.get("name").cloned().unwrap_or_default(),
        name_b: b.get("name").cloned().unwrap_or_default(),
        secure_full_delta_pct: pct(sa, sb),
        secure_opt_delta_pct: pct(oa, ob),
        qber_full_delta_pp: (qb - qa) * 100.0,
        filtering_gain_a_pct: ga * 100.0,
        filtering_gain_b_pct: gb * 100.0,
    })
}

impl CompareReport {
    pub fn render(&self) -> String {
        format!(
            "compare {} -> {}\n\
             secure_full_delta_pct = {}\n\
             secure_opt_delta_pct = {}\n\
             qber_full_delta_pp = {}\n\
             filtering_gain_a_pct = {}\n\
             filtering_gain_b_pct = {}\n",
            self.name_a,
            self.name_b,
            sig6(self.secure_full_delta_pct),
            sig6(self.secure_opt_delta_pct),
            sig6(self.qber_full_delta_pp),
            sig6(self.filtering_gain_a_pct),
            sig6(self.filtering_gain_b_pct),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> ScenarioSpec {
        let mut spec = ScenarioSpec::bundled("paper-high-bias").unwrap().unwrap();
        spec.n_slots = 300_000;
        spec
    }

    #[test]
    fn artifacts_write_and_reparse_exactly() {
        let spec = small_spec();
        let a = run_scenario(&spec, 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_artifacts(dir.path(), &a).unwrap();

        let summary = read_summary(&dir.path().join("summary.txt")).unwrap();
        // Every reported scalar re-renders to the identical string.
        for (k, v) in &summary {
            if let Ok(x) = v.parse::<f64>() {
                if v.contains('e') {
                    assert_eq!(&sig6(x), v, "key {k} drifted on re-parse");
                }
            }
        }
        assert_eq!(summary["name"], "paper-high-bias");
        assert_eq!(summary["n_slots"], "300000");

        let hist = fs::read_to_string(dir.path().join("histogram.csv")).unwrap();
        assert_eq!(hist.lines().count(), 81); // header + 4 channels x 20 bins
        let total: u64 = hist
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap())
            .sum();
        assert_eq!(total, a.histogram.total);

        let sweep = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
        assert_eq!(sweep.lines().count(), 10);
        assert!(sweep.starts_with("width_ns,start_bin,qber,sifted_bps,secure_bps"));
    }

    #[test]
    fn reruns_are_byte_identical() {
        let spec = small_spec();
        let a = run_scenario(&spec, 9).unwrap();
        let b = run_scenario(&spec, 9).unwrap();
        assert_eq!(render_summary(&a), render_summary(&b));
        assert_eq!(render_sweep(&a), render_sweep(&b));
        assert_eq!(render_histogram(&a), render_histogram(&b));
        assert_eq!(render_tv_matrix(&a), render_tv_matrix(&b));
    }

    #[test]
    fn compare_run_against_itself_is_zero() {
        let spec = small_spec();
        let a = run_scenario(&spec, 5).unwrap();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        write_artifacts(d1.path(), &a).unwrap();
        write_artifacts(d2.path(), &a).unwrap();
        let cmp = compare_dirs(d1.path(), d2.path()).unwrap();
        assert_eq!(cmp.secure_full_delta_pct, 0.0);
        assert_eq!(cmp.secure_opt_delta_pct, 0.0);
        assert_eq!(cmp.qber_full_delta_pp, 0.0);
    }

    #[test]
    fn compare_missing_dir_errors() {
        let d1 = tempfile::tempdir().unwrap();
        assert!(compare_dirs(d1.path(), Path::new("/nonexistent-qkd")).is_err());
    }

    #[test]
    fn sig6_is_stable_under_reparse() {
        for &v in &[0.0267012345, 1.0432e6, 1.25e-6, 0.0, 2.5, 123456789.0] {
            let s = sig6(v);
            let parsed: f64 = s.parse().unwrap();
            assert_eq!(sig6(parsed), s, "value {v}");
        }
    }
}
