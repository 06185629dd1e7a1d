//! Euclidean projection onto a small polytope by active-set enumeration.
//!
//! For every subset `S` of the constraints (the bounds `x >= 0` included),
//! smallest subsets first and lexicographically within a size, the projection
//! of `x` onto the affine set `{y : A_S y = b_S}` is computed. The first
//! candidate that is feasible and has nonnegative multipliers satisfies the
//! optimality conditions, and the projection onto a convex set is unique.

use super::solve_dense;
use crate::error::{Error, Result};
use crate::lp::DenseLP;

const MAX_N: usize = 10;
const MAX_M: usize = 50;

pub fn project_bruteforce(lp: &DenseLP, x: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = (lp.m(), lp.n());
    if n > MAX_N || m > MAX_M {
        return Err(Error::SizeGuard(format!(
            "{m}x{n} exceeds the {MAX_M}x{MAX_N} projection limit"
        )));
    }
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x.len(),
        });
    }
    // Constraint rows with the bounds appended as -e_j . y <= 0.
    let mut rows: Vec<Vec<f64>> = (0..m).map(|i| lp.row(i).to_vec()).collect();
    let mut rhs: Vec<f64> = lp.b().to_vec();
    for j in 0..n {
        let mut r = vec![0.0; n];
        r[j] = -1.0;
        rows.push(r);
        rhs.push(0.0);
    }
    let total = rows.len();
    let scale = 1.0
        + rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()))
        + x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tol = 1e-9 * scale;
    let feasible = |y: &[f64]| {
        rows.iter()
            .zip(&rhs)
            .all(|(r, b)| r.iter().zip(y).map(|(a, v)| a * v).sum::<f64>() - b <= tol)
    };
    if feasible(x) {
        return Ok(x.to_vec());
    }
    let mut subset = Vec::with_capacity(n);
    for size in 1..=n.min(total) {
        subset.clear();
        subset.extend(0..size);
        loop {
            if let Some(y) = candidate(&rows, &rhs, x, &subset) {
                if feasible(&y) {
                    return Ok(y);
                }
            }
            if !next_combination(&mut subset, total) {
                break;
            }
        }
    }
    Err(Error::Infeasible)
}

/// Projection onto `{A_S y = b_S}` if `A_S` has full row rank and every
/// multiplier is nonnegative.
fn candidate(rows: &[Vec<f64>], rhs: &[f64], x: &[f64], subset: &[usize]) -> Option<Vec<f64>> {
    let gram: Vec<Vec<f64>> = subset
        .iter()
        .map(|&i| subset.iter().map(|&k| dot(&rows[i], &rows[k])).collect())
        .collect();
    let resid: Vec<f64> = subset.iter().map(|&i| dot(&rows[i], x) - rhs[i]).collect();
    let lambda = solve_dense(gram, resid)?;
    if lambda.iter().any(|&l| l < -1e-12) {
        return None;
    }
    let mut y = x.to_vec();
    for (&i, &l) in subset.iter().zip(&lambda) {
        for (v, a) in y.iter_mut().zip(&rows[i]) {
            *v -= l * a;
        }
    }
    Some(y)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Advances to the next `k`-subset of `0..total` in lexicographic order.
fn next_combination(c: &mut [usize], total: usize) -> bool {
    let k = c.len();
    let Some(i) = (0..k).rev().find(|&i| c[i] < total - k + i) else {
        return false;
    };
    c[i] += 1;
    for j in i + 1..k {
        c[j] = c[j - 1] + 1;
    }
    true
}
