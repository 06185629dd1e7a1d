//! Dense linear programs `max <c, x>` subject to `Ax <= b, x >= 0`, their
//! evolution over discrete time, and the synthetic Model-n family.
//!
//! The bound `x >= 0` is implicit: it is never stored as rows unless a
//! generator chooses to add them. Feasibility tests compare stored values
//! exactly; tolerances belong to the solvers.

use std::collections::HashSet;
use std::fmt::Write as _;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Inner product with four fixed accumulators.
///
/// The summation order depends only on the slice length, so every caller
/// gets bit-identical results for the same inputs.
#[inline]
pub(crate) fn dot(lhs: &[f64], rhs: &[f64]) -> f64 {
    debug_assert_eq!(lhs.len(), rhs.len());
    let mut acc = [0.0f64; 4];
    let mut l = lhs.chunks_exact(4);
    let mut r = rhs.chunks_exact(4);
    for (a, b) in (&mut l).zip(&mut r) {
        acc[0] += a[0] * b[0];
        acc[1] += a[1] * b[1];
        acc[2] += a[2] * b[2];
        acc[3] += a[3] * b[3];
    }
    let mut tail = 0.0;
    for (a, b) in l.remainder().iter().zip(r.remainder()) {
        tail += a * b;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail
}

/// A stationary dense LP instance.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLP {
    a: Array2<f64>,
    b: Array1<f64>,
    c: Array1<f64>,
}

impl DenseLP {
    pub fn new(a: Array2<f64>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let (m, n) = a.dim();
        if n == 0 || m == 0 {
            return Err(Error::InvalidArgument(format!(
                "problem needs at least one row and one column, got {m}x{n}"
            )));
        }
        if b.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: b.len(),
            });
        }
        if c.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: c.len(),
            });
        }
        if !a.iter().chain(&b).chain(&c).all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite problem entry".into()));
        }
        let a = a.as_standard_layout().into_owned();
        Ok(Self {
            a,
            b: Array1::from(b),
            c: Array1::from(c),
        })
    }

    /// Builds a problem from row vectors of `A`.
    pub fn from_rows(rows: &[Vec<f64>], b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let n = c.len();
        let mut a = Array2::zeros((rows.len(), n));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                a[[i, j]] = v;
            }
        }
        Self::new(a, b, c)
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &Array2<f64> {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        self.b.as_slice().expect("contiguous")
    }

    pub fn c(&self) -> &[f64] {
        self.c.as_slice().expect("contiguous")
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.a.row(i).to_slice().expect("standard layout")
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// `<A_i, x>`.
    #[inline]
    pub fn activity(&self, i: usize, x: &[f64]) -> f64 {
        dot(self.row(i), x)
    }

    pub fn objective_value(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x)?;
        Ok(self.objective_unchecked(x))
    }

    #[inline]
    pub(crate) fn objective_unchecked(&self, x: &[f64]) -> f64 {
        dot(self.c(), x)
    }

    /// `max(0, max_i(<A_i,x> - b_i), max_j(-x_j))`; zero iff `x` is in the
    /// feasible region.
    pub fn max_violation(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x)?;
        Ok(self.violation_unchecked(x))
    }

    pub(crate) fn violation_unchecked(&self, x: &[f64]) -> f64 {
        let rows = (0..self.m()).map(|i| self.activity(i, x) - self.b[i]);
        let bounds = x.iter().map(|&v| -v);
        rows.chain(bounds).fold(0.0, f64::max)
    }

    /// Exact membership test, equivalent to `max_violation(x) == 0`.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        self.check_len(x)?;
        Ok(self.contains_unchecked(x))
    }

    #[inline]
    pub(crate) fn contains_unchecked(&self, x: &[f64]) -> bool {
        x.iter().all(|&v| !(-v > 0.0))
            && (0..self.m()).all(|i| !(self.activity(i, x) - self.b[i] > 0.0))
    }
}

/// How a non-stationary problem evolves per unit of time.
#[derive(Debug, Clone, PartialEq)]
pub enum Drift {
    None,
    /// The feasible region moves by `velocity` each time unit.
    Translate { velocity: Vec<f64> },
    /// Each time unit, a fraction `delta` of the entries of `A`, `b` and `c`
    /// is perturbed by uniform noise in `[-magnitude, magnitude]`.
    RandomSparse {
        delta: f64,
        magnitude: f64,
        seed: u64,
    },
}

/// `ceil(delta * total)`, treating products within rounding noise of an
/// integer as that integer so that `delta = 1/(2(n+1))` over `2(n+1)` rows
/// selects exactly one row's worth of entries.
pub fn changed_count(delta: f64, total: usize) -> usize {
    let x = delta * total as f64;
    let r = x.round();
    let k = if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    };
    (k.max(0.0) as usize).min(total)
}

/// A time-parameterised LP: `snapshot(0)` is the base problem.
#[derive(Debug, Clone)]
pub struct NonStationaryLP {
    base: DenseLP,
    drift: Drift,
    /// `A v` for translate drift.
    shift: Vec<f64>,
}

impl NonStationaryLP {
    pub fn new(base: DenseLP, drift: Drift) -> Result<Self> {
        let mut shift = Vec::new();
        match &drift {
            Drift::None => {}
            Drift::Translate { velocity } => {
                if velocity.len() != base.n() {
                    return Err(Error::DimensionMismatch {
                        expected: base.n(),
                        found: velocity.len(),
                    });
                }
                if !velocity.iter().all(|v| v.is_finite()) {
                    return Err(Error::InvalidArgument("non-finite velocity".into()));
                }
                shift = (0..base.m()).map(|i| base.activity(i, velocity)).collect();
            }
            Drift::RandomSparse {
                delta, magnitude, ..
            } => {
                if !(0.0..=1.0).contains(delta) {
                    return Err(Error::InvalidArgument(format!(
                        "change fraction {delta} outside [0, 1]"
                    )));
                }
                if !magnitude.is_finite() || *magnitude < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "drift magnitude {magnitude} must be finite and nonnegative"
                    )));
                }
                if *delta > 0.0 && *magnitude == 0.0 {
                    return Err(Error::InvalidArgument(
                        "a positive change fraction needs a positive magnitude".into(),
                    ));
                }
            }
        }
        Ok(Self { base, drift, shift })
    }

    pub fn stationary(base: DenseLP) -> Self {
        Self {
            base,
            drift: Drift::None,
            shift: Vec::new(),
        }
    }

    pub fn base(&self) -> &DenseLP {
        &self.base
    }

    pub fn drift(&self) -> &Drift {
        &self.drift
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    pub fn m(&self) -> usize {
        self.base.m()
    }

    /// The problem at clock `k`.
    pub fn snapshot(&self, k: u64) -> DenseLP {
        match &self.drift {
            Drift::None => self.base.clone(),
            Drift::Translate { .. } => self.translated(k),
            Drift::RandomSparse { .. } => {
                let mut lp = self.base.clone();
                for step in 1..=k {
                    lp = self.advance(&lp, step);
                }
                lp
            }
        }
    }

    /// Given the snapshot at `k - 1`, returns the snapshot at `k`.
    ///
    /// For random-sparse drift this is the only efficient route; for the other
    /// kinds it agrees with [`snapshot`](Self::snapshot) bit for bit.
    pub fn advance(&self, prev: &DenseLP, k: u64) -> DenseLP {
        match &self.drift {
            Drift::None => prev.clone(),
            Drift::Translate { .. } => self.translated(k),
            Drift::RandomSparse { .. } => {
                let d = self.step_delta(prev, k);
                apply_delta(prev, &d).expect("generated delta is in range")
            }
        }
    }

    /// The random-sparse change applied when the clock moves to `k`.
    /// Empty for the other drift kinds.
    pub fn step_delta(&self, prev: &DenseLP, k: u64) -> SparseDelta {
        let Drift::RandomSparse {
            delta,
            magnitude,
            seed,
        } = self.drift
        else {
            return SparseDelta::default();
        };
        let (m, n) = (prev.m(), prev.n());
        let (ca, cb, cc) = (
            changed_count(delta, m * n),
            changed_count(delta, m),
            changed_count(delta, n),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k);
        let perturb = |old: f64, rng: &mut ChaCha8Rng| loop {
            let v = old + rng.gen_range(-magnitude..=magnitude);
            if v != old && v.is_finite() {
                break v;
            }
        };
        let pick = |total: usize, count: usize, rng: &mut ChaCha8Rng| {
            let mut idx = rand::seq::index::sample(rng, total, count).into_vec();
            idx.sort_unstable();
            idx
        };
        let a_pos = pick(m * n, ca, &mut rng);
        let b_pos = pick(m, cb, &mut rng);
        let c_pos = pick(n, cc, &mut rng);
        let a = a_pos
            .into_iter()
            .map(|p| {
                let (r, col) = (p / n, p % n);
                (r, col, perturb(prev.a[[r, col]], &mut rng))
            })
            .collect();
        let b = b_pos
            .into_iter()
            .map(|i| (i, perturb(prev.b[i], &mut rng)))
            .collect();
        let c = c_pos
            .into_iter()
            .map(|j| (j, perturb(prev.c[j], &mut rng)))
            .collect();
        SparseDelta { a, b, c }
    }

    fn translated(&self, k: u64) -> DenseLP {
        let t = k as f64;
        let mut lp = self.base.clone();
        if k == 0 {
            return lp;
        }
        for (bi, si) in lp.b.iter_mut().zip(&self.shift) {
            *bi += t * si;
        }
        lp
    }
}

/// Changed entries between two problems of the same shape.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseDelta {
    /// `(row, col, new value)` for `A`.
    pub a: Vec<(usize, usize, f64)>,
    /// `(row, new value)` for `b`.
    pub b: Vec<(usize, f64)>,
    /// `(col, new value)` for `c`.
    pub c: Vec<(usize, f64)>,
}

impl SparseDelta {
    pub fn len(&self) -> usize {
        self.a.len() + self.b.len() + self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks index ranges and duplicate positions against an `m x n` shape.
    pub fn validate(&self, m: usize, n: usize) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.a.len());
        for &(r, c, v) in &self.a {
            check_index("A row", r, m)?;
            check_index("A column", c, n)?;
            check_value(v)?;
            if !seen.insert((r, c)) {
                return Err(Error::DuplicatePosition(format!("A[{r},{c}]")));
            }
        }
        let mut seen = HashSet::with_capacity(self.b.len());
        for &(i, v) in &self.b {
            check_index("b index", i, m)?;
            check_value(v)?;
            if !seen.insert(i) {
                return Err(Error::DuplicatePosition(format!("b[{i}]")));
            }
        }
        let mut seen = HashSet::with_capacity(self.c.len());
        for &(j, v) in &self.c {
            check_index("c index", j, n)?;
            check_value(v)?;
            if !seen.insert(j) {
                return Err(Error::DuplicatePosition(format!("c[{j}]")));
            }
        }
        Ok(())
    }
}

fn check_index(what: &'static str, index: usize, bound: usize) -> Result<()> {
    if index >= bound {
        return Err(Error::IndexOutOfRange { what, index, bound });
    }
    Ok(())
}

fn check_value(v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::InvalidArgument("non-finite delta value".into()));
    }
    Ok(())
}

/// Returns `lp` with the delta applied; untouched entries are bit-identical.
pub fn apply_delta(lp: &DenseLP, d: &SparseDelta) -> Result<DenseLP> {
    d.validate(lp.m(), lp.n())?;
    let mut out = lp.clone();
    for &(r, c, v) in &d.a {
        out.a[[r, c]] = v;
    }
    for &(i, v) in &d.b {
        out.b[i] = v;
    }
    for &(j, v) in &d.c {
        out.c[j] = v;
    }
    Ok(out)
}

/// Minimal delta turning `prev` into `next`, compared bitwise.
pub fn delta_between(prev: &DenseLP, next: &DenseLP) -> Result<SparseDelta> {
    if prev.m() != next.m() {
        return Err(Error::DimensionMismatch {
            expected: prev.m(),
            found: next.m(),
        });
    }
    if prev.n() != next.n() {
        return Err(Error::DimensionMismatch {
            expected: prev.n(),
            found: next.n(),
        });
    }
    let differs = |x: f64, y: f64| x.to_bits() != y.to_bits();
    let mut d = SparseDelta::default();
    for ((r, c), &v) in next.a.indexed_iter() {
        if differs(prev.a[[r, c]], v) {
            d.a.push((r, c, v));
        }
    }
    for (i, (&p, &v)) in prev.b.iter().zip(&next.b).enumerate() {
        if differs(p, v) {
            d.b.push((i, v));
        }
    }
    for (j, (&p, &v)) in prev.c.iter().zip(&next.c).enumerate() {
        if differs(p, v) {
            d.c.push((j, v));
        }
    }
    Ok(d)
}

/// A family of scalable problems with a closed-form optimum.
pub trait ProblemGenerator {
    fn generate(&self, n: usize, seed: u64) -> Result<DenseLP>;
    /// `(x*, <c, x*>)` of `generate(n, _)`; independent of the seed.
    fn optimum(&self, n: usize) -> Result<(Vec<f64>, f64)>;
}

/// The Model-n family: `0 <= x_i <= theta`, `0 <= sum x_i <= theta (n+1)/2`,
/// objective weights `n, n-1, ..., 1`. All bounds are explicit rows, giving
/// `2(n+1)` rows. The seed only permutes the row order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelN {
    pub theta: f64,
}

impl Default for ModelN {
    fn default() -> Self {
        Self { theta: 200.0 }
    }
}

impl ModelN {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "theta must be positive, got {theta}"
            )));
        }
        Ok(Self { theta })
    }

    fn check_n(n: usize) -> Result<()> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "Model-n needs n >= 2, got {n}"
            )));
        }
        Ok(())
    }

    fn budget(&self, n: usize) -> f64 {
        self.theta * (n as f64 + 1.0) / 2.0
    }

    fn objective(n: usize) -> Vec<f64> {
        (0..n).map(|i| (n - i) as f64).collect()
    }
}

impl ProblemGenerator for ModelN {
    fn generate(&self, n: usize, seed: u64) -> Result<DenseLP> {
        Self::check_n(n)?;
        let m = 2 * (n + 1);
        let mut rows: Vec<(Vec<f64>, f64)> = Vec::with_capacity(m);
        for i in 0..n {
            let mut r = vec![0.0; n];
            r[i] = 1.0;
            rows.push((r, self.theta));
        }
        for i in 0..n {
            let mut r = vec![0.0; n];
            r[i] = -1.0;
            rows.push((r, 0.0));
        }
        rows.push((vec![1.0; n], self.budget(n)));
        rows.push((vec![-1.0; n], 0.0));
        if seed != 0 {
            rows.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
        let mut a = Array2::zeros((m, n));
        let mut b = Vec::with_capacity(m);
        for (i, (r, bi)) in rows.into_iter().enumerate() {
            for (j, v) in r.into_iter().enumerate() {
                a[[i, j]] = v;
            }
            b.push(bi);
        }
        DenseLP::new(a, b, Self::objective(n))
    }

    fn optimum(&self, n: usize) -> Result<(Vec<f64>, f64)> {
        Self::check_n(n)?;
        // Greedy fill of the coupling budget, highest weight first.
        let mut left = self.budget(n);
        let x: Vec<f64> = (0..n)
            .map(|_| {
                let v = left.min(self.theta);
                left -= v;
                v
            })
            .collect();
        let value = dot(&Self::objective(n), &x);
        Ok((x, value))
    }
}

/// Model-n with the default `theta = 200`.
pub fn model_n(n: usize, seed: u64) -> Result<DenseLP> {
    ModelN::default().generate(n, seed)
}

pub fn model_n_optimum(n: usize) -> Result<(Vec<f64>, f64)> {
    ModelN::default().optimum(n)
}

/// Parses the plain-text matrix format: a header `n m`, then `m` rows of `n`
/// coefficients, then `b` (`m` values), then `c` (`n` values).
pub fn parse_problem(text: &str) -> Result<DenseLP> {
    let mut tokens = text.split_whitespace();
    let mut next_usize = |what: &str| -> Result<usize> {
        let tok = tokens
            .next()
            .ok_or_else(|| Error::Parse(format!("missing {what}")))?;
        tok.parse()
            .map_err(|_| Error::Parse(format!("bad {what}: {tok:?}")))
    };
    let n = next_usize("n")?;
    let m = next_usize("m")?;
    let values: Vec<f64> = tokens
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number {t:?}")))
        })
        .collect::<Result<_>>()?;
    let expected = m * n + m + n;
    if values.len() != expected {
        return Err(Error::Parse(format!(
            "expected {expected} numbers for a {m}x{n} problem, found {}",
            values.len()
        )));
    }
    let a = Array2::from_shape_vec((m, n), values[..m * n].to_vec())
        .map_err(|e| Error::Parse(e.to_string()))?;
    let b = values[m * n..m * n + m].to_vec();
    let c = values[m * n + m..].to_vec();
    DenseLP::new(a, b, c)
}

/// Writes the plain-text matrix format. Values round-trip exactly.
pub fn write_problem(lp: &DenseLP) -> String {
    let mut s = String::new();
    let line = |s: &mut String, vals: &[f64]| {
        let parts: Vec<String> = vals.iter().map(|v| format!("{v:e}")).collect();
        s.push_str(&parts.join(" "));
        s.push('\n');
    };
    let _ = writeln!(s, "{} {}", lp.n(), lp.m());
    for i in 0..lp.m() {
        line(&mut s, lp.row(i));
    }
    line(&mut s, lp.b());
    line(&mut s, lp.c());
    s
}
