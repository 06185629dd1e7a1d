//! Bulk Synchronous Farm skeleton.
//!
//! A run is an initialization step followed by iterations of four macro-steps:
//! the master sends the same order to every worker, workers process it on
//! their statically assigned units, the master receives all results (a full
//! barrier), then evaluates them and checks the exit condition. Workers keep
//! private state and talk to the master only through encoded messages.
//!
//! Two backends execute a [`Farm`]:
//!
//! * [`Backend::Simulated`] runs workers one after another on the calling
//!   thread and charges synthetic, deterministic costs (bytes moved and work
//!   units reported by the farm), so its metrics are reproducible.
//! * [`Backend::WorkerPool`] runs one thread per worker with a channel pair
//!   each and measures real elapsed time.
//!
//! Both go through the same encode/decode path and produce the same farm
//! output.

mod messages;
pub mod wire;

use std::ops::Range;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::mpsc;
use std::time::Instant;

pub use messages::{make_order, Order, WorkerResult};
pub use wire::Wire;

use crate::error::{Error, Result};

/// Worker-side half of a farm.
pub trait FarmWorker: Send {
    type Order;
    type Partial;

    /// Processes one order, returning the partial result and the abstract work
    /// units spent (used by the simulator's cost accounting).
    fn process(&mut self, order: &Self::Order) -> Result<(Self::Partial, u64)>;
}

/// Master-side half of a farm.
pub trait Farm {
    type Order: Wire;
    type Partial: Wire;
    type Merged;
    type Worker: FarmWorker<Order = Self::Order, Partial = Self::Partial>;
    type Output;

    /// Number of units (cohorts) that are block-partitioned among workers.
    fn units(&self) -> usize;
    fn init_worker(&self, worker_id: usize, units: Range<usize>) -> Self::Worker;
    fn make_order(&mut self) -> Result<Self::Order>;
    /// Combines partial results, given in worker-id order.
    fn merge_results(&mut self, partials: Vec<Self::Partial>) -> Result<Self::Merged>;
    /// Returns master work units spent.
    fn evaluate(&mut self, merged: Self::Merged) -> Result<u64>;
    fn exit_check(&self) -> bool;
    fn finalize(self) -> Self::Output;
}

/// Synthetic costs charged by the simulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimCosts {
    pub latency_ns: f64,
    pub ns_per_byte: f64,
    pub ns_per_work: f64,
}

impl Default for SimCosts {
    fn default() -> Self {
        Self {
            latency_ns: 1e4,
            ns_per_byte: 1.0,
            ns_per_work: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backend {
    Simulated(SimCosts),
    WorkerPool,
}

impl Backend {
    pub fn simulated() -> Self {
        Backend::Simulated(SimCosts::default())
    }

    /// One-byte message latency of this transport, in nanoseconds.
    pub fn measure_latency(&self) -> f64 {
        match self {
            Backend::Simulated(c) => c.latency_ns,
            Backend::WorkerPool => measure_channel_latency(1000),
        }
    }
}

/// Worker count and backend for a farm run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Executor {
    pub workers: usize,
    pub backend: Backend,
}

/// Median one-way latency of a one-byte ping-pong between two threads.
fn measure_channel_latency(round_trips: usize) -> f64 {
    let (ping_tx, ping_rx) = mpsc::channel::<Vec<u8>>();
    let (pong_tx, pong_rx) = mpsc::channel::<Vec<u8>>();
    let echo = std::thread::spawn(move || {
        for msg in ping_rx {
            if pong_tx.send(msg).is_err() {
                break;
            }
        }
    });
    let mut samples = Vec::with_capacity(round_trips);
    for _ in 0..round_trips {
        let t = Instant::now();
        ping_tx.send(vec![0u8]).expect("echo thread alive");
        pong_rx.recv().expect("echo thread alive");
        samples.push(t.elapsed().as_nanos() as f64);
    }
    drop(ping_tx);
    let _ = echo.join();
    samples.sort_by(f64::total_cmp);
    samples[samples.len() / 2] / 2.0
}

/// Static block partition of `units` among `workers`: contiguous ranges, the
/// first `units % workers` workers get one extra unit.
pub fn block_partition(units: usize, workers: usize) -> Vec<Range<usize>> {
    let base = units / workers;
    let extra = units % workers;
    let mut start = 0;
    (0..workers)
        .map(|w| {
            let len = base + usize::from(w < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

/// Timing of a farm run. Durations are nanoseconds averaged per iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub workers: usize,
    pub iterations: u64,
    /// One-byte latency `L`.
    pub latency_ns: f64,
    /// Master time sending one order to one worker.
    pub t_s: f64,
    /// One worker's order-processing time.
    pub t_v: f64,
    /// `workers * t_v`.
    pub t_w: f64,
    /// Total master time receiving all results.
    pub t_r: f64,
    /// Total master time evaluating results.
    pub t_p: f64,
    /// Mean `t_v` of each worker; spread shows load imbalance.
    pub worker_t_v: Vec<f64>,
    /// Duration of the whole iterative process (measured wall time for the
    /// pool, simulated time for the simulator).
    pub elapsed_ns: f64,
}

impl RunMetrics {
    pub const CSV_HEADER: &'static str = "P,L_ns,ts_ns,tv_ns,tr_ns,tp_ns,tw_ns";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.workers, self.latency_ns, self.t_s, self.t_v, self.t_r, self.t_p, self.t_w
        )
    }

    /// Parses a row written by [`csv_row`](Self::csv_row).
    pub fn from_csv_row(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 7 {
            return Err(Error::Parse(format!("expected 7 metrics fields, got {}", f.len())));
        }
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad metrics value {s:?}")))
        };
        let workers: usize = f[0]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad worker count {:?}", f[0])))?;
        let t_v = num(f[3])?;
        Ok(RunMetrics {
            workers,
            iterations: 0,
            latency_ns: num(f[1])?,
            t_s: num(f[2])?,
            t_v,
            t_r: num(f[4])?,
            t_p: num(f[5])?,
            t_w: num(f[6])?,
            worker_t_v: vec![t_v; workers],
            elapsed_ns: 0.0,
        })
    }
}

#[derive(Default)]
struct Totals {
    iterations: u64,
    sends: u64,
    t_s: f64,
    t_r: f64,
    t_p: f64,
    worker_busy: Vec<f64>,
    elapsed: f64,
}

impl Totals {
    fn new(workers: usize) -> Self {
        Self {
            worker_busy: vec![0.0; workers],
            ..Default::default()
        }
    }

    fn finish(self, workers: usize, latency_ns: f64) -> RunMetrics {
        let iters = self.iterations.max(1) as f64;
        let worker_t_v: Vec<f64> = self.worker_busy.iter().map(|b| b / iters).collect();
        let t_v = worker_t_v.iter().sum::<f64>() / workers as f64;
        RunMetrics {
            workers,
            iterations: self.iterations,
            latency_ns,
            t_s: self.t_s / self.sends.max(1) as f64,
            t_v,
            t_w: workers as f64 * t_v,
            t_r: self.t_r / iters,
            t_p: self.t_p / iters,
            worker_t_v,
            elapsed_ns: self.elapsed,
        }
    }
}

/// Runs a farm to completion with `workers` workers.
pub fn run_bsf<F: Farm>(mut farm: F, workers: usize, backend: &Backend) -> Result<(F::Output, RunMetrics)> {
    if workers == 0 {
        return Err(Error::InvalidArgument("at least one worker is required".into()));
    }
    if farm.units() < workers {
        return Err(Error::InvalidArgument(format!(
            "{} units cannot feed {workers} workers",
            farm.units()
        )));
    }
    let parts = block_partition(farm.units(), workers);
    let latency = backend.measure_latency();
    let totals = match backend {
        Backend::Simulated(costs) => run_simulated(&mut farm, &parts, costs)?,
        Backend::WorkerPool => run_pool(&mut farm, &parts)?,
    };
    Ok((farm.finalize(), totals.finish(workers, latency)))
}

fn barrier<P>(slots: Vec<Option<P>>) -> Result<Vec<P>> {
    let expected = slots.len();
    let received = slots.iter().filter(|s| s.is_some()).count();
    if received != expected {
        return Err(Error::Barrier { received, expected });
    }
    Ok(slots.into_iter().flatten().collect())
}

fn run_simulated<F: Farm>(farm: &mut F, parts: &[Range<usize>], costs: &SimCosts) -> Result<Totals> {
    let mut workers: Vec<F::Worker> = parts
        .iter()
        .enumerate()
        .map(|(id, r)| farm.init_worker(id, r.clone()))
        .collect();
    let mut t = Totals::new(workers.len());
    let ns = |bytes: usize| bytes as f64 * costs.ns_per_byte;
    while !farm.exit_check() {
        let order = farm.make_order()?;
        let mut slots = Vec::with_capacity(workers.len());
        let mut iter_send = 0.0;
        let mut iter_recv = 0.0;
        let mut slowest: f64 = 0.0;
        for (id, w) in workers.iter_mut().enumerate() {
            let bytes = order.to_bytes();
            let t_s = ns(bytes.len());
            iter_send += 2.0 * costs.latency_ns + t_s;
            t.t_s += t_s;
            t.sends += 1;
            let received = F::Order::decode(&bytes)?;
            let (partial, work) = match catch_unwind(AssertUnwindSafe(|| w.process(&received))) {
                Ok(r) => r.map_err(|e| e.to_string()),
                Err(panic) => Err(panic_message(panic)),
            }
            .map_err(|message| Error::Worker { worker: id, message })?;
            let busy = work as f64 * costs.ns_per_work;
            t.worker_busy[id] += busy;
            slowest = slowest.max(busy);
            let reply = partial.to_bytes();
            iter_recv += ns(reply.len());
            slots.push(Some(F::Partial::decode(&reply)?));
        }
        let merged = farm.merge_results(barrier(slots)?)?;
        let eval = farm.evaluate(merged)? as f64 * costs.ns_per_work;
        t.t_r += iter_recv;
        t.t_p += eval;
        t.elapsed += iter_send + slowest + iter_recv + eval;
        t.iterations += 1;
    }
    Ok(t)
}

fn panic_message(panic: Box<dyn std::any::Any + Send>) -> String {
    panic
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| panic.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "worker panicked".into())
}

enum ToWorker {
    Order { seq: u64, bytes: Vec<u8> },
    Stop,
}

struct FromWorker {
    id: usize,
    seq: u64,
    reply: std::result::Result<Vec<u8>, String>,
    busy_ns: f64,
}

fn worker_loop<W: FarmWorker>(
    id: usize,
    mut worker: W,
    orders: mpsc::Receiver<ToWorker>,
    results: mpsc::Sender<FromWorker>,
) where
    W::Order: Wire,
    W::Partial: Wire,
{
    for msg in orders {
        let ToWorker::Order { seq, bytes } = msg else {
            break;
        };
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| {
            let order = W::Order::decode(&bytes).map_err(|e| e.to_string())?;
            let (partial, _) = worker.process(&order).map_err(|e| e.to_string())?;
            Ok(partial.to_bytes())
        }));
        let reply = match outcome {
            Ok(r) => r,
            Err(panic) => Err(panic_message(panic)),
        };
        let failed = reply.is_err();
        let busy_ns = start.elapsed().as_nanos() as f64;
        if results.send(FromWorker { id, seq, reply, busy_ns }).is_err() || failed {
            break;
        }
    }
}

fn run_pool<F: Farm>(farm: &mut F, parts: &[Range<usize>]) -> Result<Totals> {
    let workers: Vec<F::Worker> = parts
        .iter()
        .enumerate()
        .map(|(id, r)| farm.init_worker(id, r.clone()))
        .collect();
    let count = workers.len();
    std::thread::scope(|scope| {
        let (res_tx, res_rx) = mpsc::channel::<FromWorker>();
        let mut senders = Vec::with_capacity(count);
        for (id, w) in workers.into_iter().enumerate() {
            let (tx, rx) = mpsc::channel();
            let res_tx = res_tx.clone();
            scope.spawn(move || worker_loop(id, w, rx, res_tx));
            senders.push(tx);
        }
        drop(res_tx);
        let out = pool_master(farm, &senders, &res_rx);
        for tx in &senders {
            let _ = tx.send(ToWorker::Stop);
        }
        out
    })
}

fn pool_master<F: Farm>(
    farm: &mut F,
    senders: &[mpsc::Sender<ToWorker>],
    results: &mpsc::Receiver<FromWorker>,
) -> Result<Totals> {
    let count = senders.len();
    let mut t = Totals::new(count);
    let run_start = Instant::now();
    let mut seq = 0u64;
    while !farm.exit_check() {
        let order = farm.make_order()?;
        for (id, tx) in senders.iter().enumerate() {
            let start = Instant::now();
            let bytes = order.to_bytes();
            tx.send(ToWorker::Order { seq, bytes }).map_err(|_| Error::Worker {
                worker: id,
                message: "worker exited".into(),
            })?;
            t.t_s += start.elapsed().as_nanos() as f64;
            t.sends += 1;
        }
        let mut slots: Vec<Option<F::Partial>> = (0..count).map(|_| None).collect();
        for _ in 0..count {
            // Blocking here is idle time, not receive work.
            let msg = results.recv().map_err(|_| Error::Worker {
                worker: usize::MAX,
                message: "all workers exited".into(),
            })?;
            let start = Instant::now();
            if msg.seq != seq {
                return Err(Error::Worker {
                    worker: msg.id,
                    message: format!("result for iteration {} during iteration {seq}", msg.seq),
                });
            }
            let bytes = msg.reply.map_err(|message| Error::Worker { worker: msg.id, message })?;
            slots[msg.id] = Some(F::Partial::decode(&bytes)?);
            t.worker_busy[msg.id] += msg.busy_ns;
            t.t_r += start.elapsed().as_nanos() as f64;
        }
        let start = Instant::now();
        let merged = farm.merge_results(barrier(slots)?)?;
        farm.evaluate(merged)?;
        t.t_p += start.elapsed().as_nanos() as f64;
        t.iterations += 1;
        seq += 1;
    }
    t.elapsed = run_start.elapsed().as_nanos() as f64;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bsf::wire::{put_u32, put_u64, Reader};

    #[test]
    fn block_partition_examples() {
        assert_eq!(block_partition(8, 4), vec![0..2, 2..4, 4..6, 6..8]);
        assert_eq!(block_partition(7, 3), vec![0..3, 3..5, 5..7]);
        assert_eq!(block_partition(5, 1), vec![0..5]);
        for units in 1..40 {
            for w in 1..=units {
                let parts = block_partition(units, w);
                assert_eq!(parts.len(), w);
                assert_eq!(parts[0].start, 0);
                assert_eq!(parts[w - 1].end, units);
                for p in parts.windows(2) {
                    assert_eq!(p[0].end, p[1].start);
                    assert!(p[0].len() >= p[1].len());
                }
            }
        }
    }

    #[test]
    fn latency_measurement() {
        assert_eq!(Backend::simulated().measure_latency(), 1e4);
        let zero = Backend::Simulated(SimCosts {
            latency_ns: 0.0,
            ..Default::default()
        });
        assert_eq!(zero.measure_latency(), 0.0);
        let l = Backend::WorkerPool.measure_latency();
        assert!(l.is_finite() && l > 0.0);
    }

    /// Sums `unit index * round` over each worker's units; the master checks
    /// it saw every worker's result before evaluating.
    struct SumFarm {
        units: usize,
        rounds: u64,
        round: u64,
        seen: Vec<u64>,
        fail_worker: Option<usize>,
    }

    struct Msg(u64);

    impl Wire for Msg {
        fn encode(&self, out: &mut Vec<u8>) {
            put_u64(out, self.0);
        }
        fn decode(bytes: &[u8]) -> Result<Self> {
            let mut r = Reader::new(bytes);
            let v = r.u64()?;
            r.finish()?;
            Ok(Msg(v))
        }
    }

    struct Part(usize, u64);

    impl Wire for Part {
        fn encode(&self, out: &mut Vec<u8>) {
            put_u32(out, self.0);
            put_u64(out, self.1);
        }
        fn decode(bytes: &[u8]) -> Result<Self> {
            let mut r = Reader::new(bytes);
            let p = Part(r.u32()?, r.u64()?);
            r.finish()?;
            Ok(p)
        }
    }

    struct SumWorker {
        id: usize,
        units: Range<usize>,
        fail: bool,
    }

    impl FarmWorker for SumWorker {
        type Order = Msg;
        type Partial = Part;
        fn process(&mut self, order: &Msg) -> Result<(Part, u64)> {
            if self.fail {
                panic!("boom");
            }
            let s = self.units.clone().map(|u| u as u64 * order.0).sum();
            Ok((Part(self.id, s), self.units.len() as u64))
        }
    }

    impl Farm for SumFarm {
        type Order = Msg;
        type Partial = Part;
        type Merged = Vec<Part>;
        type Worker = SumWorker;
        type Output = Vec<u64>;
        fn units(&self) -> usize {
            self.units
        }
        fn init_worker(&self, id: usize, units: Range<usize>) -> SumWorker {
            SumWorker {
                id,
                units,
                fail: self.fail_worker == Some(id),
            }
        }
        fn make_order(&mut self) -> Result<Msg> {
            self.round += 1;
            Ok(Msg(self.round))
        }
        fn merge_results(&mut self, partials: Vec<Part>) -> Result<Vec<Part>> {
            Ok(partials)
        }
        fn evaluate(&mut self, merged: Vec<Part>) -> Result<u64> {
            for (i, p) in merged.iter().enumerate() {
                assert_eq!(p.0, i, "results are in worker order");
            }
            self.seen.push(merged.iter().map(|p| p.1).sum());
            Ok(1)
        }
        fn exit_check(&self) -> bool {
            self.round == self.rounds
        }
        fn finalize(self) -> Vec<u64> {
            self.seen
        }
    }

    fn sum_farm(fail_worker: Option<usize>) -> SumFarm {
        SumFarm {
            units: 10,
            rounds: 5,
            round: 0,
            seen: Vec::new(),
            fail_worker,
        }
    }

    #[test]
    fn backends_agree() {
        let expected: Vec<u64> = (1..=5).map(|r| 45 * r).collect();
        for w in [1, 2, 3, 10] {
            for backend in [Backend::simulated(), Backend::WorkerPool] {
                let (out, m) = run_bsf(sum_farm(None), w, &backend).unwrap();
                assert_eq!(out, expected);
                assert_eq!(m.iterations, 5);
                assert_eq!(m.workers, w);
                assert!((m.t_w - w as f64 * m.t_v).abs() <= 1e-9 * m.t_w.max(1.0));
            }
        }
    }

    #[test]
    fn simulator_costs_are_synthetic() {
        let costs = SimCosts {
            latency_ns: 100.0,
            ns_per_byte: 2.0,
            ns_per_work: 10.0,
        };
        let (_, m) = run_bsf(sum_farm(None), 2, &Backend::Simulated(costs)).unwrap();
        assert_eq!(m.latency_ns, 100.0);
        assert_eq!(m.t_s, 16.0);
        assert_eq!(m.worker_t_v, vec![50.0, 50.0]);
        assert_eq!(m.t_r, 2.0 * 12.0 * 2.0);
        assert_eq!(m.t_p, 10.0);
        // per iteration: 2 * (2L + t_s) + max t_v + t_r + t_p
        assert_eq!(m.elapsed_ns, 5.0 * (2.0 * 216.0 + 50.0 + 48.0 + 10.0));
    }

    #[test]
    fn worker_failure_aborts() {
        for backend in [Backend::simulated(), Backend::WorkerPool] {
            let err = run_bsf(sum_farm(Some(1)), 3, &backend).unwrap_err();
            assert!(matches!(err, Error::Worker { worker: 1, .. }), "{err:?}");
        }
    }

    #[test]
    fn rejects_bad_worker_counts() {
        assert!(run_bsf(sum_farm(None), 0, &Backend::simulated()).is_err());
        assert!(run_bsf(sum_farm(None), 11, &Backend::simulated()).is_err());
    }

    #[test]
    fn barrier_requires_every_result() {
        assert_eq!(
            barrier(vec![Some(1), None, Some(3)]),
            Err(Error::Barrier {
                received: 2,
                expected: 3
            })
        );
        assert_eq!(barrier(vec![Some(1), Some(2)]), Ok(vec![1, 2]));
    }

    #[test]
    fn metrics_csv_round_trip() {
        let (_, m) = run_bsf(sum_farm(None), 2, &Backend::simulated()).unwrap();
        let back = RunMetrics::from_csv_row(&m.csv_row()).unwrap();
        assert_eq!((back.t_s, back.t_v, back.t_w, back.t_r, back.t_p), (m.t_s, m.t_v, m.t_w, m.t_r, m.t_p));
        assert!(RunMetrics::from_csv_row("1,2,3").is_err());
    }
}
