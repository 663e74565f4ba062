//! `qkdsim` — scenario runner and reporting tool for the BB84 link
//! simulator.
//!
//! Exit codes: 0 success, 2 spec/validation error, 3 unreachable
//! calibration target, 1 anything else.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use qkdsim::error::Error;
use qkdsim::keyrate::{calibrate_observed, CalibrationKnob, CalibrationOptions};
use qkdsim::report::{self, sig6};
use qkdsim::rng::RngSeed;
use qkdsim::scenario::ScenarioSpec;
use qkdsim::sidechan::certify_closure;

#[derive(Parser)]
#[command(
    name = "qkdsim",
    about = "Simulate a four-laser polarization BB84 link: run scenarios, \
             calibrate noise knobs, compare runs, certify side-channel closure",
    version
)]
struct Cli {
    /// Worker threads for the Monte Carlo (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write summary.txt, histogram.csv, sweep.csv and
    /// tv_matrix.csv into the output directory.
    Run {
        /// Spec file path, or a bundled name (paper-zero-bias,
        /// paper-high-bias).
        #[arg(long)]
        spec: String,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
        /// Seed override; falls back to the spec, then $QKDSIM_SEED.
        #[arg(long)]
        seed: Option<u64>,
        /// Slot-count override.
        #[arg(long)]
        slots: Option<u64>,
    },
    /// Bisect one noise knob until the full-window QBER hits the target,
    /// then write the calibrated spec.
    Calibrate {
        #[arg(long)]
        spec: String,
        /// Target full-window QBER, e.g. 0.0104.
        #[arg(long)]
        target: f64,
        #[arg(long, value_enum)]
        knob: Knob,
        /// Where to write the updated spec file.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Slots per bracketing probe.
        #[arg(long)]
        slots: Option<u64>,
        /// Slots per refinement probe.
        #[arg(long)]
        refine_slots: Option<u64>,
        /// |simulated - target| tolerance in QBER.
        #[arg(long, default_value_t = 2e-4)]
        tolerance: f64,
    },
    /// Report percentage deltas between two completed run directories.
    Compare { a: PathBuf, b: PathBuf },
    /// Evaluate side-channel closure for a spec's laser model.
    Certify {
        #[arg(long)]
        spec: String,
        /// Closure threshold on both timing TV and intensity deviation.
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Knob {
    /// optical_error_prob
    OpticalError,
    /// se_rate_per_laser
    SeRate,
}

impl From<Knob> for CalibrationKnob {
    fn from(k: Knob) -> Self {
        match k {
            Knob::OpticalError => CalibrationKnob::OpticalErrorProb,
            Knob::SeRate => CalibrationKnob::SeRatePerLaser,
        }
    }
}

fn load_spec(name_or_path: &str) -> Result<ScenarioSpec, Error> {
    if let Some(bundled) = ScenarioSpec::bundled(name_or_path) {
        return bundled;
    }
    let text = std::fs::read_to_string(Path::new(name_or_path))?;
    ScenarioSpec::parse(&text)
}

fn resolve_seed(flag: Option<u64>, spec: &ScenarioSpec) -> u64 {
    if let Some(s) = flag {
        return s;
    }
    if let Some(s) = spec.seed {
        return s;
    }
    if let Ok(v) = std::env::var("QKDSIM_SEED") {
        if let Ok(s) = v.parse::<u64>() {
            return s;
        }
    }
    1
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::SpecParse { .. }
        | Error::InvalidConfig { .. }
        | Error::InvalidParameter(_)
        | Error::ShapeMismatch { .. } => 2,
        Error::Calibration { .. } => 3,
        Error::Io(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: could not size thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Run {
            spec,
            out,
            seed,
            slots,
        } => {
            let mut spec = load_spec(&spec)?;
            if let Some(n) = slots {
                spec.n_slots = n;
            }
            spec.validate()?;
            let seed = resolve_seed(seed, &spec);
            let artifacts = report::run_scenario(&spec, seed)?;
            report::write_artifacts(&out, &artifacts)?;
            print!("{}", report::render_summary(&artifacts));
            eprintln!("wrote {}", out.display());
            Ok(())
        }
        Command::Calibrate {
            spec,
            target,
            knob,
            out,
            seed,
            slots,
            refine_slots,
            tolerance,
        } => {
            let mut spec_v = load_spec(&spec)?;
            let seed = resolve_seed(seed, &spec_v);
            let mut opts = CalibrationOptions {
                tolerance,
                ..CalibrationOptions::default()
            };
            if let Some(n) = slots {
                opts.probe_slots = n;
            }
            if let Some(n) = refine_slots {
                opts.refine_slots = n;
            }
            let knob: CalibrationKnob = knob.into();
            let value = calibrate_observed(
                &spec_v.config,
                &spec_v.side_channel,
                target,
                knob,
                RngSeed(seed),
                &opts,
                &mut |p| {
                    println!(
                        "probe {:>2}: {} = {:<12} qber = {} ({} slots)",
                        p.iteration,
                        knob.name(),
                        sig6(p.value),
                        sig6(p.qber),
                        p.slots
                    );
                },
            )?;
            match knob {
                CalibrationKnob::OpticalErrorProb => spec_v.config.optical_error_prob = value,
                CalibrationKnob::SeRatePerLaser => spec_v.config.se_rate_per_laser = value,
            }
            std::fs::write(&out, spec_v.render())?;
            println!("calibrated {} = {value:e}", knob.name());
            eprintln!("wrote {}", out.display());
            Ok(())
        }
        Command::Compare { a, b } => {
            let report = report::compare_dirs(&a, &b)?;
            print!("{}", report.render());
            Ok(())
        }
        Command::Certify { spec, epsilon } => {
            let spec = load_spec(&spec)?;
            let report = certify_closure(&spec.side_channel, &spec.config, epsilon)?;
            println!("max_pairwise_tv = {}", sig6(report.max_tv));
            println!(
                "max_amplitude_deviation = {}",
                sig6(report.max_amplitude_deviation)
            );
            println!("epsilon = {}", sig6(report.epsilon));
            println!("closure = {}", if report.pass { "PASS" } else { "FAIL" });
            Ok(())
        }
    }
}
