//! Analytic cost model of a bulk-synchronous farm.
//!
//! With `o = 2L + t_s` (per-worker order overhead) and `q = t_r + t_p`
//! (master-side result handling), one iteration on `P` workers costs
//! `P·o + q + t_w/P`. From this:
//!
//! * scalability bound `sqrt(t_w / o)`, the `P` beyond which adding workers
//!   slows the run down;
//! * speedup `P(o + q + t_w) / (P²o + Pq + t_w)`;
//! * efficiency `1 / (1 + (P²o + Pq) / t_w)`.
//!
//! [`ScenarioModel`] instantiates the parameters for the tracking workload
//! from problem size and the changed fraction `δ(n)` of the data.

use std::fmt::Write as _;

use crate::bsf::RunMetrics;
use crate::error::{Error, Result};

/// Durations in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    pub workers: usize,
    pub latency_ns: f64,
    pub t_s: f64,
    pub t_r: f64,
    pub t_p: f64,
    pub t_w: f64,
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::InvalidArgument("worker count must be at least 1".into()));
        }
        for (name, v) in [
            ("L", self.latency_ns),
            ("t_s", self.t_s),
            ("t_r", self.t_r),
            ("t_p", self.t_p),
            ("t_w", self.t_w),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidArgument(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    fn order_overhead(&self) -> f64 {
        2.0 * self.latency_ns + self.t_s
    }

    fn master_overhead(&self) -> f64 {
        self.t_r + self.t_p
    }
}

impl From<&RunMetrics> for CostParams {
    fn from(m: &RunMetrics) -> Self {
        Self {
            workers: m.workers,
            latency_ns: m.latency_ns,
            t_s: m.t_s,
            t_r: m.t_r,
            t_p: m.t_p,
            t_w: m.t_w,
        }
    }
}

pub fn scalability_bound(p: &CostParams) -> Result<f64> {
    p.validate()?;
    let o = p.order_overhead();
    if o == 0.0 {
        return Err(Error::ZeroDenominator("scalability bound"));
    }
    Ok((p.t_w / o).sqrt())
}

/// Exactly 1 at `P = 1`.
pub fn speedup(p: &CostParams) -> Result<f64> {
    p.validate()?;
    let (o, q, w) = (p.order_overhead(), p.master_overhead(), p.t_w);
    let k = p.workers as f64;
    // Grouped so numerator and denominator are the same expression at P = 1.
    let num = k * ((o + q) + w);
    let den = (k * k * o + k * q) + w;
    if den == 0.0 {
        return Err(Error::ZeroDenominator("speedup"));
    }
    Ok(num / den)
}

pub fn efficiency(p: &CostParams) -> Result<f64> {
    p.validate()?;
    if p.t_w == 0.0 {
        return Err(Error::ZeroDenominator("efficiency"));
    }
    let k = p.workers as f64;
    let overhead = k * k * p.order_overhead() + k * p.master_overhead();
    Ok(1.0 / (1.0 + overhead / p.t_w))
}

/// Fraction of the data entries changed per unit of time, as a function of `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaMode {
    /// Every entry changes.
    Full,
    /// `1 / (2(n+1))`: about one row's worth of entries.
    OneRow,
    Custom(f64),
}

impl DeltaMode {
    pub fn value(&self, n: usize) -> f64 {
        match *self {
            DeltaMode::Full => 1.0,
            DeltaMode::OneRow => 1.0 / (2.0 * (n as f64 + 1.0)),
            DeltaMode::Custom(v) => v,
        }
    }
}

/// Scale constants turning the asymptotic cost forms into nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub c_s: f64,
    pub c_w: f64,
    pub c_r: f64,
    pub c_p: f64,
    pub latency_ns: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioModel {
    pub n: usize,
    pub delta: DeltaMode,
    pub calibration: Calibration,
}

/// Cost-form values `(f_s, f_w, f_r, f_p)` at dimension `n`.
fn forms(n: usize, delta: DeltaMode) -> [f64; 4] {
    let nf = n as f64;
    let n1 = nf + 1.0;
    [
        delta.value(n) * n1 * n1 + n1,
        nf * nf * nf + nf * nf + nf,
        nf,
        nf * nf,
    ]
}

impl ScenarioModel {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidArgument(format!("scenario needs n >= 2, got {}", self.n)));
        }
        if let DeltaMode::Custom(v) = self.delta {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("change fraction {v} outside [0, 1]")));
            }
        }
        let c = &self.calibration;
        for (name, v) in [("c_s", c.c_s), ("c_w", c.c_w), ("c_r", c.c_r), ("c_p", c.c_p)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} = {v} must be positive")));
            }
        }
        if !(c.latency_ns.is_finite() && c.latency_ns >= 0.0) {
            return Err(Error::InvalidArgument("latency must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// `t_s = c_s(δ(n)(n+1)² + (n+1))`, `t_w = c_w(n³+n²+n)`, `t_r = c_r n`,
/// `t_p = c_p n²`.
pub fn scenario_params(model: &ScenarioModel, workers: usize) -> Result<CostParams> {
    model.validate()?;
    let [fs, fw, fr, fp] = forms(model.n, model.delta);
    let c = &model.calibration;
    Ok(CostParams {
        workers,
        latency_ns: c.latency_ns,
        t_s: c.c_s * fs,
        t_r: c.c_r * fr,
        t_p: c.c_p * fp,
        t_w: c.c_w * fw,
    })
}

/// Least-squares fit through the origin of each constant against its cost form,
/// from metrics measured at (preferably) two or more dimensions. The latency is
/// the mean measured latency.
pub fn calibrate(samples: &[(usize, RunMetrics)], delta: DeltaMode) -> Result<Calibration> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("calibration needs at least one sample".into()));
    }
    let mut num = [0.0; 4];
    let mut den = [0.0; 4];
    let mut latency = 0.0;
    for (n, m) in samples {
        if *n < 2 {
            return Err(Error::InvalidArgument(format!("calibration sample with n = {n}")));
        }
        let f = forms(*n, delta);
        let y = [m.t_s, m.t_w, m.t_r, m.t_p];
        for j in 0..4 {
            num[j] += y[j] * f[j];
            den[j] += f[j] * f[j];
        }
        latency += m.latency_ns;
    }
    let c = [0, 1, 2, 3].map(|j| num[j] / den[j]);
    let cal = Calibration {
        c_s: c[0],
        c_w: c[1],
        c_r: c[2],
        c_p: c[3],
        latency_ns: latency / samples.len() as f64,
    };
    ScenarioModel {
        n: 2,
        delta,
        calibration: cal,
    }
    .validate()?;
    Ok(cal)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub workers: usize,
    pub speedup: f64,
    pub efficiency: f64,
    pub bound: f64,
}

pub const CURVE_HEADER: &str = "P,speedup_pred,efficiency_pred,bound";

/// Predicted speedup and efficiency for each worker count.
pub fn predict_curves(model: &ScenarioModel, workers: impl IntoIterator<Item = usize>) -> Result<Vec<CurveRow>> {
    let rows = workers
        .into_iter()
        .map(|w| predict_row(&scenario_params(model, w)?))
        .collect::<Result<Vec<_>>>()?;
    if rows.is_empty() {
        return Err(Error::InvalidArgument("empty worker range".into()));
    }
    Ok(rows)
}

/// One curve row from explicit parameters.
pub fn predict_row(p: &CostParams) -> Result<CurveRow> {
    Ok(CurveRow {
        workers: p.workers,
        speedup: speedup(p)?,
        efficiency: efficiency(p)?,
        bound: scalability_bound(p)?,
    })
}

pub fn curves_csv(rows: &[CurveRow]) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.workers, r.speedup, r.efficiency, r.bound);
    }
    out
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument("slope needs at least two points".into()));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::ZeroDenominator("log-log slope"));
    }
    Ok(sxy / sxx)
}
