//! Reference solvers for small stationary problems: a dense two-phase simplex
//! and a brute-force Euclidean projection. They share no code with the
//! iterative methods they are used to check.

mod projection;
mod simplex;

pub use projection::project_bruteforce;
pub use simplex::{solve_simplex, verify_certificate, SimplexResult, SimplexStatus};

/// Solves `M y = r` by Gaussian elimination with partial pivoting. `None` when
/// `M` is numerically singular.
pub(crate) fn solve_dense(mut m: Vec<Vec<f64>>, mut r: Vec<f64>) -> Option<Vec<f64>> {
    let k = r.len();
    let scale = m
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |a, v| a.max(v.abs()));
    if scale == 0.0 {
        return if k == 0 { Some(Vec::new()) } else { None };
    }
    for col in 0..k {
        let piv = (col..k).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        m.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..k {
            let f = m[row][col] / m[col][col];
            if f == 0.0 {
                continue;
            }
            for j in col..k {
                m[row][j] -= f * m[col][j];
            }
            r[row] -= f * r[col];
        }
    }
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|j| m[i][j] * y[j]).sum();
        y[i] = (r[i] - s) / m[i][i];
    }
    Some(y)
}
