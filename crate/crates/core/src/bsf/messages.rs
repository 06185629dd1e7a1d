//! The order sent to every worker each iteration and the result each worker
//! returns.
//!
//! Order layout (little-endian): `u64 clock`, `u32 n`, `n × f64` center, then
//! three delta sections for `A`, `b` and `c`, each a `u32` count followed by
//! `(u32 index, f64 value)` pairs. Entries of `A` use the row-major flat index
//! `row * n + col`.

use super::wire::{put_f64, put_u32, put_u64, Reader, Wire};
use crate::error::{Error, Result};
use crate::lp::{delta_between, DenseLP, SparseDelta};
use crate::targeting::{BestPoint, CohortBest};

#[derive(Debug, Clone, PartialEq)]
pub struct Order {
    /// New cross center.
    pub theta: Vec<f64>,
    /// Changed entries of `A`, `b` and `c` since the previous order.
    pub delta: SparseDelta,
    pub clock: u64,
}

/// Builds the order that moves a worker from `(prev, old center)` to
/// `(next, center)`.
pub fn make_order(prev: &DenseLP, next: &DenseLP, center: &[f64], clock: u64) -> Result<Order> {
    if center.len() != next.n() {
        return Err(Error::DimensionMismatch {
            expected: next.n(),
            found: center.len(),
        });
    }
    Ok(Order {
        theta: center.to_vec(),
        delta: delta_between(prev, next)?,
        clock,
    })
}

impl Order {
    pub fn dimension(&self) -> usize {
        self.theta.len()
    }
}

const PAIR: usize = 12;

impl Wire for Order {
    fn encode(&self, out: &mut Vec<u8>) {
        let n = self.theta.len();
        out.reserve(16 + 8 * n + PAIR * self.delta.len());
        put_u64(out, self.clock);
        put_u32(out, n);
        for &v in &self.theta {
            put_f64(out, v);
        }
        put_u32(out, self.delta.a.len());
        for &(r, c, v) in &self.delta.a {
            put_u32(out, r * n + c);
            put_f64(out, v);
        }
        for section in [&self.delta.b, &self.delta.c] {
            put_u32(out, section.len());
            for &(i, v) in section {
                put_u32(out, i);
                put_f64(out, v);
            }
        }
    }

    fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let clock = r.u64()?;
        let n = r.count(8)?;
        if n == 0 {
            return Err(Error::Parse("order with empty center".into()));
        }
        let theta = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let k = r.count(PAIR)?;
        let mut a = Vec::with_capacity(k);
        for _ in 0..k {
            let idx = r.u32()?;
            a.push((idx / n, idx % n, r.f64()?));
        }
        let mut sections = [Vec::new(), Vec::new()];
        for section in &mut sections {
            let k = r.count(PAIR)?;
            section.reserve(k);
            for _ in 0..k {
                section.push((r.u32()?, r.f64()?));
            }
        }
        r.finish()?;
        let [b, c] = sections;
        Ok(Order {
            theta,
            delta: SparseDelta { a, b, c },
            clock,
        })
    }
}

/// Per-cohort candidates from one worker.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkerResult {
    pub worker_id: usize,
    pub bests: Vec<CohortBest>,
}

impl Wire for WorkerResult {
    fn encode(&self, out: &mut Vec<u8>) {
        put_u32(out, self.worker_id);
        put_u32(out, self.bests.len());
        for cb in &self.bests {
            put_u32(out, cb.cohort);
            match &cb.best {
                None => out.push(0),
                Some(bp) => {
                    out.push(1);
                    put_u32(out, bp.point.len());
                    for &v in &bp.point {
                        put_f64(out, v);
                    }
                    put_f64(out, bp.value);
                }
            }
        }
    }

    fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let worker_id = r.u32()?;
        let k = r.count(5)?;
        let mut bests = Vec::with_capacity(k);
        for _ in 0..k {
            let cohort = r.u32()?;
            let best = match r.u8()? {
                0 => None,
                1 => {
                    let len = r.count(8)?;
                    let point = (0..len).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
                    Some(BestPoint {
                        point,
                        value: r.f64()?,
                    })
                }
                t => return Err(Error::Parse(format!("bad presence tag {t}"))),
            };
            bests.push(CohortBest { cohort, best });
        }
        r.finish()?;
        Ok(WorkerResult { worker_id, bests })
    }
}
