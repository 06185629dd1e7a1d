use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nslp_cli::{
    cmd_predict, cmd_run, cmd_track, parse_calibration, parse_delta, parse_list, parse_metrics_arg,
    sim_backend, CalibrationSource, CliError, DriftKind, ExperimentConfig,
};
use nslp_core::bsf::Backend;
use nslp_core::cost::{Calibration, DeltaMode};
use nslp_core::quest::FejerConfig;

#[derive(Parser)]
#[command(name = "nslp", version, about = "Track the optimum of a drifting linear program and model its parallel cost")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track Model-n once per worker count and compare measured with predicted speedup
    Run(Common),
    /// Evaluate the cost model only
    Predict(PredictArgs),
    /// Run one tracking session and write its trace
    Track(TrackArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DriftArg {
    None,
    Translate,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    /// Deterministic simulator with synthetic costs
    Sim,
    /// One thread per worker, measured wall time
    Pool,
}

#[derive(Args)]
struct Common {
    /// Problem dimension (number of variables)
    #[arg(long, default_value_t = 400)]
    n: usize,
    /// Points per cohort of the cross (even)
    #[arg(long, default_value_t = 8)]
    k: usize,
    /// Distance between neighbouring cross points (problem units)
    #[arg(long, default_value_t = 1.0)]
    spacing: f64,
    /// Fraction of data entries changed per time unit: full, one-row or a number in [0, 1]
    #[arg(long, default_value = "one-row", value_parser = parse_delta)]
    delta: DeltaMode,
    /// How the problem drifts
    #[arg(long, value_enum, default_value_t = DriftArg::Random)]
    drift: DriftArg,
    /// Noise amplitude per changed entry (random) or speed per time unit (translate), problem units
    #[arg(long, default_value_t = 0.01)]
    drift_magnitude: f64,
    /// Worker counts, e.g. 1,2,4,8 or 1-8
    #[arg(long, default_value = "1-8", value_parser = list)]
    workers: List,
    /// Targeting iterations per run
    #[arg(long, default_value_t = 100)]
    iters: usize,
    /// Seed for the problem row order and random drift
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Quest stops once the max constraint violation is at most this (problem units)
    #[arg(long, default_value_t = 1e-9)]
    quest_tolerance: f64,
    /// Quest iteration limit
    #[arg(long, default_value_t = 1_000_000)]
    quest_max_iter: usize,
    /// Quest relaxation factor, in (0, 2)
    #[arg(long, default_value_t = 1.0)]
    quest_lambda: f64,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Execution backend
    #[arg(long, value_enum, default_value_t = BackendArg::Pool)]
    backend: BackendArg,
}

#[derive(Args)]
struct TrackArgs {
    #[command(flatten)]
    common: Common,
    /// Also stop after this many seconds of wall-clock time
    #[arg(long)]
    time_budget: Option<f64>,
}

#[derive(Args)]
struct PredictArgs {
    /// Calibration constants c_s,c_w,c_r,c_p,L_ns (nanoseconds per unit of each cost form)
    #[arg(long, value_parser = parse_calibration, conflicts_with = "metrics")]
    calib: Option<Calibration>,
    /// Metrics file measured at dimension N, as N:PATH; repeat for several dimensions
    #[arg(long, value_parser = parse_metrics_arg)]
    metrics: Vec<(usize, PathBuf)>,
    /// Dimensions to predict for
    #[arg(long, default_value = "400,800,1080", value_parser = list)]
    dims: List,
    /// Fraction of data entries changed per time unit: full, one-row or a number in [0, 1]
    #[arg(long, default_value = "one-row", value_parser = parse_delta)]
    delta: DeltaMode,
    /// Worker counts, e.g. 1,2,4,8 or 1-8
    #[arg(long, default_value = "1-8", value_parser = list)]
    workers: List,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone)]
struct List(Vec<usize>);

fn list(s: &str) -> Result<List, String> {
    parse_list(s).map(List)
}

fn config(c: Common) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        n: c.n,
        points_per_cohort: c.k,
        spacing: c.spacing,
        delta: c.delta,
        drift: match c.drift {
            DriftArg::None => DriftKind::None,
            DriftArg::Translate => DriftKind::Translate,
            DriftArg::Random => DriftKind::Random,
        },
        drift_magnitude: c.drift_magnitude,
        workers: c.workers.0,
        iterations: c.iters,
        time_budget: None,
        seed: c.seed,
        quest: FejerConfig {
            relaxation: c.quest_lambda,
            tolerance: c.quest_tolerance,
            max_iterations: c.quest_max_iter,
            ..Default::default()
        },
        out: c.out,
        backend: match c.backend {
            BackendArg::Sim => sim_backend(),
            BackendArg::Pool => Backend::WorkerPool,
        },
    };
    if cfg.backend == Backend::WorkerPool {
        if let Some(cap) = std::env::var("NSLP_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
            let dropped = cfg.cap_workers(cap.max(1));
            if !dropped.is_empty() {
                eprintln!("NSLP_THREADS={cap}: skipping worker counts {dropped:?}");
            }
        }
    }
    cfg
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(c) => {
            let cfg = config(c);
            let report = cmd_run(&cfg)?;
            for r in &report.rows {
                println!(
                    "P={:<3} time={:.3e} ns  speedup {:.3} (pred {:.3})  efficiency {:.3} (pred {:.3})",
                    r.workers, r.time_ns, r.speedup_meas, r.predicted.speedup, r.eff_meas, r.predicted.efficiency
                );
            }
            println!("wrote {}", cfg.out.display());
        }
        Command::Predict(p) => {
            let source = match p.calib {
                Some(c) => CalibrationSource::Constants(c),
                None => CalibrationSource::Metrics(p.metrics),
            };
            let bounds = cmd_predict(&source, p.delta, &p.dims.0, &p.workers.0, &p.out)?;
            for (n, b) in bounds {
                println!("n={n} bound={b:.3}");
            }
        }
        Command::Track(t) => {
            let mut cfg = config(t.common);
            if let Some(secs) = t.time_budget {
                if !(secs.is_finite() && secs > 0.0) {
                    return Err(CliError::Config("--time-budget must be positive".into()));
                }
                cfg.time_budget = Some(Duration::from_secs_f64(secs));
            }
            let trace = cmd_track(&cfg)?;
            let s = trace.summary().expect("at least one iteration");
            println!(
                "iterations={} objective={} gap={} moved_rate={:.3} stalled={}",
                s.iterations,
                s.final_objective,
                s.final_gap.map_or("n/a".into(), |g| g.to_string()),
                s.moved_rate,
                s.stalled_iterations
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Config(_) => 2,
                _ => 1,
            })
        }
    }
}
