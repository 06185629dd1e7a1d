//! Dense two-phase tableau simplex with Bland's rule.

use crate::error::{Error, Result};
use crate::lp::DenseLP;

const EPS: f64 = 1e-9;
const MAX_DIM: usize = 500;
const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimplexStatus {
    Optimal,
    Unbounded,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub status: SimplexStatus,
    pub x_opt: Option<Vec<f64>>,
    pub value: Option<f64>,
    /// Pivots over both phases.
    pub iterations: usize,
    /// Row multipliers at the optimum.
    pub dual: Option<Vec<f64>>,
}

struct Tableau {
    /// `m` constraint rows of `cols + 1` entries, right-hand side last.
    rows: Vec<Vec<f64>>,
    /// Reduced costs, then minus the objective value.
    obj: Vec<f64>,
    basis: Vec<usize>,
    cols: usize,
    pivots: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn set_objective(&mut self, cost: &[f64]) {
        self.obj = cost.to_vec();
        self.obj.push(0.0);
        for (i, &bv) in self.basis.iter().enumerate() {
            let cb = cost[bv];
            if cb != 0.0 {
                for (o, t) in self.obj.iter_mut().zip(&self.rows[i]) {
                    *o -= cb * t;
                }
            }
        }
    }

    fn pivot(&mut self, p: usize, q: usize) {
        let d = self.rows[p][q];
        for v in &mut self.rows[p] {
            *v /= d;
        }
        self.rows[p][q] = 1.0;
        let pr = self.rows[p].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == p {
                continue;
            }
            let f = row[q];
            if f != 0.0 {
                for (v, t) in row.iter_mut().zip(&pr) {
                    *v -= f * t;
                }
                row[q] = 0.0;
            }
        }
        let f = self.obj[q];
        for (v, t) in self.obj.iter_mut().zip(&pr) {
            *v -= f * t;
        }
        self.obj[q] = 0.0;
        self.basis[p] = q;
        self.pivots += 1;
    }

    /// Maximises the current objective over columns `< allowed`.
    fn run(&mut self, allowed: usize) -> Result<Outcome> {
        let rhs = self.cols;
        loop {
            // Bland: lowest-index improving column, lowest-index leaving variable.
            let Some(q) = (0..allowed).find(|&j| self.obj[j] > EPS) else {
                return Ok(Outcome::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[q] > EPS {
                    let ratio = row[rhs] / row[q];
                    let better = match leave {
                        None => true,
                        Some((l, best)) => {
                            ratio < best - EPS || (ratio <= best + EPS && self.basis[i] < self.basis[l])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((p, _)) = leave else {
                return Ok(Outcome::Unbounded);
            };
            if self.pivots >= MAX_PIVOTS {
                return Err(Error::IterationLimit(MAX_PIVOTS));
            }
            self.pivot(p, q);
        }
    }
}

/// Solves `max <c, x>` subject to `Ax <= b`, `x >= 0`.
pub fn solve_simplex(lp: &DenseLP) -> Result<SimplexResult> {
    let (m, n) = (lp.m(), lp.n());
    if m > MAX_DIM || n > MAX_DIM {
        return Err(Error::SizeGuard(format!(
            "{m}x{n} exceeds the {MAX_DIM}x{MAX_DIM} simplex limit"
        )));
    }
    let b = lp.b();
    let negative: Vec<usize> = (0..m).filter(|&i| b[i] < 0.0).collect();
    let arts = negative.len();
    // Columns: x, slacks, artificials.
    let cols = n + m + arts;
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut next_art = n + m;
    for i in 0..m {
        let mut row = vec![0.0; cols + 1];
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for (j, &a) in lp.row(i).iter().enumerate() {
            row[j] = sign * a;
        }
        row[n + i] = sign;
        row[cols] = sign * b[i];
        if b[i] < 0.0 {
            row[next_art] = 1.0;
            basis.push(next_art);
            next_art += 1;
        } else {
            basis.push(n + i);
        }
        rows.push(row);
    }
    let mut t = Tableau {
        rows,
        obj: Vec::new(),
        basis,
        cols,
        pivots: 0,
    };

    if arts > 0 {
        let mut cost = vec![0.0; cols];
        for c in &mut cost[n + m..] {
            *c = -1.0;
        }
        t.set_objective(&cost);
        t.run(cols)?;
        let scale = 1.0 + b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if -t.obj[cols] < -EPS * scale {
            return Ok(SimplexResult {
                status: SimplexStatus::Infeasible,
                x_opt: None,
                value: None,
                iterations: t.pivots,
                dual: None,
            });
        }
        // Pivot zero-level artificials out of the basis where possible.
        for i in 0..m {
            if t.basis[i] >= n + m {
                if let Some(q) = (0..n + m).find(|&j| t.rows[i][j].abs() > EPS) {
                    t.pivot(i, q);
                }
            }
        }
    }

    let mut cost = vec![0.0; cols];
    cost[..n].copy_from_slice(lp.c());
    t.set_objective(&cost);
    let outcome = t.run(n + m)?;
    if let Outcome::Unbounded = outcome {
        return Ok(SimplexResult {
            status: SimplexStatus::Unbounded,
            x_opt: None,
            value: None,
            iterations: t.pivots,
            dual: None,
        });
    }
    let mut x = vec![0.0; n];
    for (i, &bv) in t.basis.iter().enumerate() {
        if bv < n {
            x[bv] = t.rows[i][cols];
        }
    }
    let dual = (0..m).map(|i| -t.obj[n + i]).collect();
    let value = lp.c().iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(SimplexResult {
        status: SimplexStatus::Optimal,
        x_opt: Some(x),
        value: Some(value),
        iterations: t.pivots,
        dual: Some(dual),
    })
}

/// Re-checks an optimal result: primal feasibility, dual feasibility
/// (`y >= 0`, `A^T y >= c`) and a zero duality gap, all within `tol` relative
/// to the data scale. Together these rule out any improving feasible direction.
pub fn verify_certificate(lp: &DenseLP, res: &SimplexResult, tol: f64) -> bool {
    let (Some(x), Some(y), Some(value)) = (&res.x_opt, &res.dual, res.value) else {
        return false;
    };
    if x.len() != lp.n() || y.len() != lp.m() {
        return false;
    }
    let scale = 1.0
        + lp.b().iter().chain(lp.c()).fold(0.0f64, |a, v| a.max(v.abs()))
        + x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let t = tol * scale;
    let primal = (0..lp.m()).all(|i| {
        let act: f64 = lp.row(i).iter().zip(x).map(|(a, v)| a * v).sum();
        act - lp.b()[i] <= t
    }) && x.iter().all(|&v| v >= -t);
    let dual = y.iter().all(|&v| v >= -t)
        && (0..lp.n()).all(|j| {
            let col: f64 = (0..lp.m()).map(|i| lp.a()[[i, j]] * y[i]).sum();
            col >= lp.c()[j] - t
        });
    let by: f64 = lp.b().iter().zip(y).map(|(b, v)| b * v).sum();
    primal && dual && (by - value).abs() <= t * (1.0 + value.abs())
}
