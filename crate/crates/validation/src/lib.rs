//! Reference computations for the acceptance suite, written independently of
//! the solver code they check.

use nslp_core::lp::DenseLP;
use rand::rngs::StdRng;
use rand::Rng;

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Ordinary least squares on `y = sum_k beta_k x^k`, `k < degree + 1`, by
/// normal equations; returns R^2.
pub fn poly_r2(xs: &[f64], ys: &[f64], degree: usize) -> f64 {
    let d = degree + 1;
    let mut ata = vec![vec![0.0; d + 1]; d];
    for (&x, &y) in xs.iter().zip(ys) {
        let pw: Vec<f64> = (0..d).map(|k| x.powi(k as i32)).collect();
        for i in 0..d {
            for j in 0..d {
                ata[i][j] += pw[i] * pw[j];
            }
            ata[i][d] += pw[i] * y;
        }
    }
    for col in 0..d {
        let piv = (col..d)
            .max_by(|&a, &b| ata[a][col].abs().total_cmp(&ata[b][col].abs()))
            .unwrap();
        ata.swap(col, piv);
        for r in 0..d {
            if r != col {
                let f = ata[r][col] / ata[col][col];
                for c in col..=d {
                    ata[r][c] -= f * ata[col][c];
                }
            }
        }
    }
    let beta: Vec<f64> = (0..d).map(|i| ata[i][d] / ata[i][i]).collect();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let fit: f64 = beta.iter().enumerate().map(|(k, b)| b * x.powi(k as i32)).sum();
        ss_res += (y - fit) * (y - fit);
        ss_tot += (y - mean) * (y - mean);
    }
    1.0 - ss_res / ss_tot
}

/// Slope of the straight-line fit of `ln y` against `ln x`.
pub fn fitted_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Random polytope `{x >= 0, A x <= b}` with `A >= 0` and `b > 0`, plus the
/// box `x <= hi`, so the origin is feasible and the region is bounded.
pub fn random_polytope(rng: &mut StdRng, n: usize, rows: usize, hi: f64) -> DenseLP {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for _ in 0..rows {
        a.push((0..n).map(|_| rng.gen_range(0.0..1.0)).collect::<Vec<f64>>());
        b.push(rng.gen_range(1.0..(n as f64 * hi)));
    }
    for j in 0..n {
        let mut r = vec![0.0; n];
        r[j] = 1.0;
        a.push(r);
        b.push(hi);
    }
    let c = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    DenseLP::from_rows(&a, b, c).unwrap()
}

pub fn rejection_samples(rng: &mut StdRng, lp: &DenseLP, hi: f64, count: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    while out.len() < count {
        let x: Vec<f64> = (0..lp.n()).map(|_| rng.gen_range(0.0..hi)).collect();
        if lp.contains(&x).unwrap() {
            out.push(x);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn exact_fits() {
        let xs = [1.0, 2.0, 3.0, 5.0];
        let line: Vec<f64> = xs.iter().map(|x| 3.0 + 2.0 * x).collect();
        let parabola: Vec<f64> = xs.iter().map(|x| 1.0 - x + 0.5 * x * x).collect();
        assert!((poly_r2(&xs, &line, 1) - 1.0).abs() < 1e-12);
        assert!((poly_r2(&xs, &parabola, 2) - 1.0).abs() < 1e-12);
        assert!(poly_r2(&xs, &parabola, 1) < 1.0);
        let roots: Vec<f64> = xs.iter().map(|x: &f64| 7.0 * x.sqrt()).collect();
        assert!((fitted_slope(&xs, &roots) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn samples_are_feasible() {
        let mut rng = StdRng::seed_from_u64(2);
        let lp = random_polytope(&mut rng, 3, 4, 2.0);
        assert!(lp.contains(&[0.0; 3]).unwrap());
        for x in rejection_samples(&mut rng, &lp, 2.0, 20) {
            assert!(lp.contains(&x).unwrap());
        }
        assert_eq!(dist(&[0.0, 3.0], &[4.0, 0.0]), 5.0);
    }
}
