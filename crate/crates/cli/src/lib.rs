//! Experiment driver behind the `nslp` binary.
//!
//! * [`cmd_run`] tracks a drifting Model-n problem once per worker count,
//!   records timings and compares measured speedup with the cost model.
//! * [`cmd_predict`] evaluates the cost model only.
//! * [`cmd_track`] runs a single tracking session and writes its trace.

pub mod svg;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use nslp_core::bsf::{Backend, Executor, RunMetrics, SimCosts};
use nslp_core::cost::{self, Calibration, CurveRow, DeltaMode, ScenarioModel};
use nslp_core::lp::{model_n, DenseLP, Drift, NonStationaryLP};
use nslp_core::oracle::{solve_simplex, SimplexStatus};
use nslp_core::quest::{quest_inside, FejerConfig};
use nslp_core::targeting::{run_targeting, run_targeting_for, TargetingConfig, TrackingTrace};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] nslp_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftKind {
    None,
    Translate,
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub points_per_cohort: usize,
    pub spacing: f64,
    pub delta: DeltaMode,
    pub drift: DriftKind,
    pub drift_magnitude: f64,
    pub workers: Vec<usize>,
    pub iterations: usize,
    /// Wall-clock limit for `track`, on top of the iteration count.
    pub time_budget: Option<Duration>,
    pub seed: u64,
    pub quest: FejerConfig,
    pub out: PathBuf,
    pub backend: Backend,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 400,
            points_per_cohort: 8,
            spacing: 1.0,
            delta: DeltaMode::OneRow,
            drift: DriftKind::Random,
            drift_magnitude: 0.01,
            workers: (1..=8).collect(),
            iterations: 100,
            time_budget: None,
            seed: 1,
            quest: FejerConfig::default(),
            out: PathBuf::from("out"),
            backend: Backend::WorkerPool,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(CliError::Config(format!("--n must be at least 2, got {}", self.n)));
        }
        if self.iterations == 0 {
            return Err(CliError::Config("--iters must be at least 1".into()));
        }
        if self.workers.is_empty() {
            return Err(CliError::Config("--workers is empty".into()));
        }
        if let Some(&w) = self.workers.iter().find(|&&w| w == 0 || w > self.n) {
            return Err(CliError::Config(format!(
                "worker count {w} outside 1..={}",
                self.n
            )));
        }
        if let DeltaMode::Custom(v) = self.delta {
            if !(0.0..=1.0).contains(&v) {
                return Err(CliError::Config(format!("--delta {v} outside [0, 1]")));
            }
        }
        if !(self.drift_magnitude.is_finite() && self.drift_magnitude >= 0.0) {
            return Err(CliError::Config("--drift-magnitude must be >= 0".into()));
        }
        self.targeting()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn targeting(&self) -> TargetingConfig {
        TargetingConfig {
            points_per_cohort: self.points_per_cohort,
            spacing: self.spacing,
            quest: self.quest,
            ..Default::default()
        }
    }

    /// Drops worker counts above `cap`, as set by `NSLP_THREADS`.
    pub fn cap_workers(&mut self, cap: usize) -> Vec<usize> {
        let (keep, dropped): (Vec<usize>, Vec<usize>) = self.workers.iter().partition(|&&w| w <= cap);
        self.workers = keep;
        dropped
    }
}

/// Parses `full`, `one-row` or a number in `[0, 1]`.
pub fn parse_delta(s: &str) -> std::result::Result<DeltaMode, String> {
    match s {
        "full" => Ok(DeltaMode::Full),
        "one-row" => Ok(DeltaMode::OneRow),
        _ => s
            .parse::<f64>()
            .ok()
            .filter(|v| (0.0..=1.0).contains(v))
            .map(DeltaMode::Custom)
            .ok_or_else(|| format!("expected full, one-row or a fraction in [0, 1], got {s:?}")),
    }
}

/// Parses a comma-separated list such as `1,2,4,8` or a range `1-8`.
pub fn parse_list(s: &str) -> std::result::Result<Vec<usize>, String> {
    let bad = || format!("bad list {s:?}");
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once('-') {
            let a: usize = a.trim().parse().map_err(|_| bad())?;
            let b: usize = b.trim().parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

/// Model-n with the configured drift.
pub fn build_problem(cfg: &ExperimentConfig) -> Result<NonStationaryLP> {
    let base = model_n(cfg.n, cfg.seed)?;
    let drift = match cfg.drift {
        DriftKind::None => Drift::None,
        DriftKind::Translate => {
            let step = cfg.drift_magnitude / (cfg.n as f64).sqrt();
            Drift::Translate {
                velocity: vec![step; cfg.n],
            }
        }
        DriftKind::Random => Drift::RandomSparse {
            delta: cfg.delta.value(cfg.n),
            magnitude: cfg.drift_magnitude,
            seed: cfg.seed,
        },
    };
    Ok(NonStationaryLP::new(base, drift)?)
}

/// Quest from the origin on the snapshot at clock 0.
pub fn starting_point(problem: &NonStationaryLP, quest: &FejerConfig) -> Result<Vec<f64>> {
    let lp = problem.snapshot(0);
    let p = quest_inside(&lp, &vec![0.0; lp.n()], quest)?;
    if !p.converged {
        return Err(CliError::Config(format!(
            "Quest did not converge in {} iterations (residual {:e})",
            p.iterations, p.residual
        )));
    }
    Ok(p.point)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

/// One row of `results.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub workers: usize,
    pub time_ns: f64,
    pub speedup_meas: f64,
    pub eff_meas: f64,
    pub predicted: CurveRow,
}

pub const RESULTS_HEADER: [&str; 7] = [
    "P",
    "time_ns",
    "speedup_meas",
    "eff_meas",
    "speedup_pred",
    "eff_pred",
    "bound",
];

#[derive(Debug, Clone)]
pub struct RunReport {
    pub rows: Vec<ResultRow>,
    pub metrics: Vec<RunMetrics>,
    pub calibration: Calibration,
}

/// Tracks the problem once per worker count and writes `results.csv`,
/// `metrics.csv`, `trace.csv` (of the single-worker run), `speedup.svg` and
/// `efficiency.svg` into the output directory.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out)?;
    let problem = build_problem(cfg)?;
    let z = starting_point(&problem, &cfg.quest)?;
    let tcfg = cfg.targeting();

    let mut counts = cfg.workers.clone();
    if !counts.contains(&1) {
        // The single-worker run is the speedup baseline.
        counts.insert(0, 1);
    }
    let mut runs: BTreeMap<usize, (TrackingTrace, RunMetrics)> = BTreeMap::new();
    for &w in &counts {
        let ex = Executor {
            workers: w,
            backend: cfg.backend,
        };
        runs.insert(w, run_targeting(&problem, &z, &tcfg, cfg.iterations, &ex, None)?);
    }
    let (base_trace, base_metrics) = &runs[&1];
    let calibration = cost::calibrate(&[(cfg.n, base_metrics.clone())], cfg.delta)?;
    let model = ScenarioModel {
        n: cfg.n,
        delta: cfg.delta,
        calibration,
    };
    let curves = cost::predict_curves(&model, cfg.workers.iter().copied())?;
    let base_time = base_metrics.elapsed_ns;
    let rows: Vec<ResultRow> = cfg
        .workers
        .iter()
        .zip(curves)
        .map(|(&w, predicted)| {
            let time_ns = runs[&w].1.elapsed_ns;
            let speedup_meas = base_time / time_ns;
            ResultRow {
                workers: w,
                time_ns,
                speedup_meas,
                eff_meas: speedup_meas / w as f64,
                predicted,
            }
        })
        .collect();

    let mut out = csv::Writer::from_path(cfg.out.join("results.csv"))?;
    out.write_record(RESULTS_HEADER)?;
    for r in &rows {
        out.write_record(&[
            r.workers.to_string(),
            r.time_ns.to_string(),
            r.speedup_meas.to_string(),
            r.eff_meas.to_string(),
            r.predicted.speedup.to_string(),
            r.predicted.efficiency.to_string(),
            r.predicted.bound.to_string(),
        ])?;
    }
    out.flush()?;

    let metrics: Vec<RunMetrics> = cfg.workers.iter().map(|w| runs[w].1.clone()).collect();
    write(&cfg.out.join("metrics.csv"), &metrics_csv(&metrics))?;
    write(&cfg.out.join("trace.csv"), &base_trace.to_csv())?;

    let xs: Vec<f64> = rows.iter().map(|r| r.workers as f64).collect();
    let series = |f: fn(&ResultRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    write(
        &cfg.out.join("speedup.svg"),
        &svg::line_chart(
            &format!("Speedup, n = {}", cfg.n),
            "workers",
            "speedup",
            &xs,
            &[
                ("measured", series(|r| r.speedup_meas)),
                ("predicted", series(|r| r.predicted.speedup)),
            ],
        ),
    )?;
    write(
        &cfg.out.join("efficiency.svg"),
        &svg::line_chart(
            &format!("Parallel efficiency, n = {}", cfg.n),
            "workers",
            "efficiency",
            &xs,
            &[
                ("measured", series(|r| r.eff_meas)),
                ("predicted", series(|r| r.predicted.efficiency)),
            ],
        ),
    )?;
    Ok(RunReport {
        rows,
        metrics,
        calibration,
    })
}

pub fn metrics_csv(metrics: &[RunMetrics]) -> String {
    let mut s = String::from(RunMetrics::CSV_HEADER);
    s.push('\n');
    for m in metrics {
        s.push_str(&m.csv_row());
        s.push('\n');
    }
    s
}

/// Reads a `metrics.csv`; the single-worker row if present, else the first.
pub fn read_metrics(path: &Path) -> Result<RunMetrics> {
    let mut rd = csv::Reader::from_path(path)?;
    let header = rd.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != RunMetrics::CSV_HEADER {
        return Err(CliError::Config(format!(
            "{}: unexpected header {header:?}",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let line = rec?.iter().collect::<Vec<_>>().join(",");
        rows.push(RunMetrics::from_csv_row(&line)?);
    }
    let pick = rows.iter().position(|m| m.workers == 1).unwrap_or(0);
    if rows.is_empty() {
        return Err(CliError::Config(format!("{}: no metrics rows", path.display())));
    }
    Ok(rows.swap_remove(pick))
}

/// Where `predict` gets its constants from.
#[derive(Debug, Clone, PartialEq)]
pub enum CalibrationSource {
    Constants(Calibration),
    /// Metrics files measured at the given dimensions.
    Metrics(Vec<(usize, PathBuf)>),
}

/// Parses `c_s,c_w,c_r,c_p,L_ns`.
pub fn parse_calibration(s: &str) -> std::result::Result<Calibration, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| format!("bad calibration {s:?}"))?;
    let [c_s, c_w, c_r, c_p, latency_ns] = v[..] else {
        return Err(format!("expected c_s,c_w,c_r,c_p,L_ns, got {s:?}"));
    };
    Ok(Calibration {
        c_s,
        c_w,
        c_r,
        c_p,
        latency_ns,
    })
}

/// Parses `N:PATH`.
pub fn parse_metrics_arg(s: &str) -> std::result::Result<(usize, PathBuf), String> {
    let (n, path) = s.split_once(':').ok_or_else(|| format!("expected N:PATH, got {s:?}"))?;
    let n = n.trim().parse().map_err(|_| format!("bad dimension in {s:?}"))?;
    Ok((n, PathBuf::from(path)))
}

/// Writes `curves_n{n}.csv` per dimension and `bounds.csv`. Returns the bound
/// at each dimension.
pub fn cmd_predict(
    source: &CalibrationSource,
    delta: DeltaMode,
    dims: &[usize],
    workers: &[usize],
    out: &Path,
) -> Result<Vec<(usize, f64)>> {
    if dims.is_empty() || workers.is_empty() {
        return Err(CliError::Config("need at least one dimension and worker count".into()));
    }
    let calibration = match source {
        CalibrationSource::Constants(c) => *c,
        CalibrationSource::Metrics(files) => {
            if files.is_empty() {
                return Err(CliError::Config("no calibration input: pass --calib or --metrics".into()));
            }
            let samples = files
                .iter()
                .map(|(n, p)| Ok((*n, read_metrics(p)?)))
                .collect::<Result<Vec<_>>>()?;
            cost::calibrate(&samples, delta)?
        }
    };
    fs::create_dir_all(out)?;
    let mut bounds = Vec::with_capacity(dims.len());
    let mut table = String::from("n,bound\n");
    for &n in dims {
        let model = ScenarioModel {
            n,
            delta,
            calibration,
        };
        let rows = cost::predict_curves(&model, workers.iter().copied())?;
        write(&out.join(format!("curves_n{n}.csv")), &cost::curves_csv(&rows))?;
        bounds.push((n, rows[0].bound));
        table.push_str(&format!("{n},{}\n", rows[0].bound));
    }
    write(&out.join("bounds.csv"), &table)?;
    Ok(bounds)
}

/// Per-snapshot optimum used for the gap column: solved once for a
/// stationary problem, per snapshot only for small drifting ones.
type GapOracle = Box<dyn Fn(&DenseLP, u64) -> Option<f64>>;

fn gap_oracle(problem: &NonStationaryLP) -> Option<GapOracle> {
    let solve = |lp: &DenseLP| match solve_simplex(lp) {
        Ok(r) if r.status == SimplexStatus::Optimal => r.value,
        _ => None,
    };
    match problem.drift() {
        Drift::None if problem.n() <= 200 => {
            let v = solve(problem.base());
            Some(Box::new(move |_: &DenseLP, _| v))
        }
        _ if problem.n() <= 30 => Some(Box::new(move |lp: &DenseLP, _| solve(lp))),
        _ => None,
    }
}

/// Runs one session with the first worker count and writes `trace.csv` and
/// `summary.txt`.
pub fn cmd_track(cfg: &ExperimentConfig) -> Result<TrackingTrace> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out)?;
    let problem = build_problem(cfg)?;
    let z = starting_point(&problem, &cfg.quest)?;
    let ex = Executor {
        workers: cfg.workers[0],
        backend: cfg.backend,
    };
    let oracle = gap_oracle(&problem);
    let oracle_ref = oracle.as_deref();
    let tcfg = cfg.targeting();
    let (trace, _) = match cfg.time_budget {
        Some(b) => run_targeting_for(&problem, &z, &tcfg, cfg.iterations, b, &ex, oracle_ref)?,
        None => run_targeting(&problem, &z, &tcfg, cfg.iterations, &ex, oracle_ref)?,
    };
    write(&cfg.out.join("trace.csv"), &trace.to_csv())?;
    let s = trace.summary().expect("at least one iteration");
    let gap = s.final_gap.map_or("n/a".to_string(), |g| g.to_string());
    let summary = format!(
        "iterations={}\nfinal_objective={}\nfinal_residual={}\nfinal_gap={gap}\nmoved_rate={}\nstalled_iterations={}\nreacquisitions={}\n",
        s.iterations, s.final_objective, s.final_residual, s.moved_rate, s.stalled_iterations, s.reacquisitions
    );
    write(&cfg.out.join("summary.txt"), &summary)?;
    Ok(trace)
}

/// Simulator with default synthetic costs.
pub fn sim_backend() -> Backend {
    Backend::Simulated(SimCosts::default())
}
