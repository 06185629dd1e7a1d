//! Quest phase: pseudo-projection of an arbitrary point onto the current
//! polytope with a simultaneous Fejer relaxation process.
//!
//! Each step moves the iterate by the relaxed mean of its orthogonal
//! projections onto the violated half-spaces. The implicit bounds `x >= 0`
//! take part as `n` extra half-spaces `-x_j <= 0`.

use crate::error::{Error, Result};
use crate::lp::{DenseLP, NonStationaryLP};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FejerConfig {
    /// Relaxation coefficient, strictly between 0 and 2.
    pub relaxation: f64,
    /// Accept an iterate once its max violation is at most this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Inner iterations per clock tick; the snapshot is re-read after each.
    pub refresh_every: usize,
}

impl Default for FejerConfig {
    fn default() -> Self {
        Self {
            relaxation: 1.0,
            tolerance: 1e-9,
            max_iterations: 1_000_000,
            refresh_every: 1000,
        }
    }
}

impl FejerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.relaxation > 0.0 && self.relaxation < 2.0) {
            return Err(Error::InvalidArgument(format!(
                "relaxation {} outside (0, 2)",
                self.relaxation
            )));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance {} must be nonnegative",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 || self.refresh_every == 0 {
            return Err(Error::InvalidArgument(
                "max_iterations and refresh_every must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of [`pseudo_project`].
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub point: Vec<f64>,
    pub iterations: usize,
    /// Max violation of `point` against the snapshot it was last checked on.
    pub residual: f64,
    /// Clock reached when the process stopped.
    pub clock: u64,
    pub converged: bool,
}

/// One application of the simultaneous Fejer map. Returns `x` unchanged when
/// it is feasible.
pub fn fejer_step(lp: &DenseLP, x: &[f64], relaxation: f64) -> Result<Vec<f64>> {
    if x.len() != lp.n() {
        return Err(Error::DimensionMismatch {
            expected: lp.n(),
            found: x.len(),
        });
    }
    if !(relaxation > 0.0 && relaxation < 2.0) {
        return Err(Error::InvalidArgument(format!(
            "relaxation {relaxation} outside (0, 2)"
        )));
    }
    let n = lp.n();
    let mut sum = vec![0.0; n];
    let mut violated = 0usize;
    for i in 0..lp.m() {
        let row = lp.row(i);
        let slack = lp.b()[i] - lp.activity(i, x);
        if !(slack < 0.0) {
            continue;
        }
        let norm2: f64 = row.iter().map(|v| v * v).sum();
        if norm2 == 0.0 {
            return Err(Error::MalformedProblem { row: i });
        }
        let coef = slack / norm2;
        for (s, &a) in sum.iter_mut().zip(row) {
            *s += coef * a;
        }
        violated += 1;
    }
    for (j, &xj) in x.iter().enumerate() {
        if xj < 0.0 {
            // Projection onto -x_j <= 0 moves only coordinate j, by -x_j.
            sum[j] -= xj;
            violated += 1;
        }
    }
    if violated == 0 {
        return Ok(x.to_vec());
    }
    let scale = relaxation / violated as f64;
    Ok(x.iter().zip(&sum).map(|(&xi, &si)| xi + scale * si).collect())
}

/// Runs the Fejer process on a problem whose data may drift while it runs:
/// every `refresh_every` iterations the clock advances by one unit and the
/// snapshot is re-read.
///
/// Non-convergence is not an error; check [`Projection::converged`].
pub fn pseudo_project(
    problem: &NonStationaryLP,
    start: &[f64],
    cfg: &FejerConfig,
    clock: u64,
) -> Result<Projection> {
    cfg.validate()?;
    if start.len() != problem.n() {
        return Err(Error::DimensionMismatch {
            expected: problem.n(),
            found: start.len(),
        });
    }
    let mut clock = clock;
    let mut lp = problem.snapshot(clock);
    let mut x = start.to_vec();
    let mut iterations = 0;
    loop {
        let residual = lp.violation_unchecked(&x);
        if residual <= cfg.tolerance || iterations == cfg.max_iterations {
            return Ok(Projection {
                point: x,
                iterations,
                residual,
                clock,
                converged: residual <= cfg.tolerance,
            });
        }
        x = fejer_step(&lp, &x, cfg.relaxation)?;
        iterations += 1;
        if iterations % cfg.refresh_every == 0 {
            clock += 1;
            lp = problem.advance(&lp, clock);
        }
    }
}

/// [`pseudo_project`] against a fixed problem.
pub fn project_stationary(lp: &DenseLP, start: &[f64], cfg: &FejerConfig) -> Result<Projection> {
    pseudo_project(&NonStationaryLP::stationary(lp.clone()), start, cfg, 0)
}

/// Quest for a point that passes the exact membership test.
///
/// A Fejer process approaching from outside stops up to `tolerance` outside
/// the polytope, which is enough to make every cross point around it
/// infeasible. This variant projects onto the polytope with every constraint
/// (the bounds included) tightened by twice the tolerance, so the accepted
/// iterate lies inside the original one. If the tightened polytope is empty
/// or the run does not converge, the plain projection is returned instead.
pub fn quest_inside(lp: &DenseLP, start: &[f64], cfg: &FejerConfig) -> Result<Projection> {
    cfg.validate()?;
    let (m, n) = (lp.m(), lp.n());
    if start.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: start.len(),
        });
    }
    if lp.contains_unchecked(start) {
        return project_stationary(lp, start, cfg);
    }
    let margin = 2.0 * cfg.tolerance;
    let mut a = ndarray::Array2::zeros((m + n, n));
    let mut b = Vec::with_capacity(m + n);
    for i in 0..m {
        a.row_mut(i).assign(&lp.a().row(i));
        b.push(lp.b()[i] - margin);
    }
    for j in 0..n {
        a[[m + j, j]] = -1.0;
        b.push(-margin);
    }
    let tight = DenseLP::new(a, b, lp.c().to_vec())?;
    let p = project_stationary(&tight, start, cfg)?;
    if p.converged && lp.contains_unchecked(&p.point) {
        return Ok(Projection { residual: 0.0, ..p });
    }
    project_stationary(lp, start, cfg)
}
