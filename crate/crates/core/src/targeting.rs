//! Targeting phase: the cross follows the optimum of a drifting problem.
//!
//! One iteration on the snapshot at clock `k`:
//!
//! 1. every cohort drops its points outside the polytope and reports its best
//!    remaining point ([`process_cohorts`], run by the workers);
//! 2. the master collects the reported points into `Q` and either keeps the
//!    center (it is feasible and at least as good as every point of `Q`) or
//!    moves it to the centroid of `Q` ([`evaluate`]);
//! 3. the clock advances.
//!
//! When `Q` stays empty for `stall_limit` iterations in a row the center is
//! pulled back into the polytope with the Quest process.

use std::fmt::Write as _;
use std::ops::Range;
use std::time::{Duration, Instant};

use crate::bsf::{self, Executor, Farm, FarmWorker, Order, RunMetrics, WorkerResult};
use crate::cross::{Cross, Marker};
use crate::error::{Error, Result};
use crate::lp::{apply_delta, DenseLP, NonStationaryLP};
use crate::quest::{quest_inside, FejerConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct BestPoint {
    pub point: Vec<f64>,
    pub value: f64,
}

/// Best feasible point of one cohort, if any point of it is feasible.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortBest {
    pub cohort: usize,
    pub best: Option<BestPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetingState {
    pub cross: Cross,
    pub clock: u64,
    pub last_q_size: usize,
    pub moved: bool,
    /// Consecutive iterations with empty `Q`.
    pub stall_count: usize,
    pub reacquisitions: usize,
}

impl TargetingState {
    pub fn new(cross: Cross, clock: u64) -> Self {
        Self {
            cross,
            clock,
            last_q_size: 0,
            moved: false,
            stall_count: 0,
            reacquisitions: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetingConfig {
    /// `K`, points per cohort (even).
    pub points_per_cohort: usize,
    /// `s`, distance between neighbouring cross points.
    pub spacing: f64,
    /// Empty-`Q` iterations tolerated before the Quest re-run.
    pub stall_limit: usize,
    pub quest: FejerConfig,
    pub start_clock: u64,
}

impl Default for TargetingConfig {
    fn default() -> Self {
        Self {
            points_per_cohort: 8,
            spacing: 1.0,
            stall_limit: 10,
            quest: FejerConfig::default(),
            start_clock: 0,
        }
    }
}

impl TargetingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stall_limit == 0 {
            return Err(Error::InvalidArgument("stall limit must be positive".into()));
        }
        self.quest.validate()?;
        // Cross::new checks K and s.
        Cross::new(vec![0.0; 2], self.spacing, self.points_per_cohort).map(|_| ())
    }
}

/// Offsets of one cohort in tie-break order: `-1, 1, -2, 2, ...`.
fn tie_order(k: usize) -> impl Iterator<Item = i64> {
    (1..=(k / 2) as i64).flat_map(|e| [-e, e])
}

/// Best feasible point of each listed cohort. Returns the bests and the
/// number of multiply-adds spent.
///
/// A point counts as feasible only if it passes the exact membership test.
/// Each point's activities are first estimated from the center's activities,
/// which cheaply discards points that are clearly outside.
pub(crate) fn process_cohorts_counted(
    lp: &DenseLP,
    cross: &Cross,
    cohorts: &[usize],
) -> Result<(Vec<CohortBest>, u64)> {
    let n = cross.dimension();
    if lp.n() != n {
        return Err(Error::DimensionMismatch {
            expected: lp.n(),
            found: n,
        });
    }
    for &ch in cohorts {
        if ch >= n {
            return Err(Error::IndexOutOfRange {
                what: "cohort",
                index: ch,
                bound: n,
            });
        }
    }
    let (m, k) = (lp.m(), cross.points_per_cohort());
    let g0 = cross.center();
    let base: Vec<f64> = (0..m).map(|i| lp.activity(i, g0)).collect();
    let slack: Vec<f64> = (0..m)
        .map(|i| 1e-9 * (1.0 + lp.b()[i].abs() + base[i].abs()))
        .collect();
    let mut work = (m * n) as u64;
    let mut buf = g0.to_vec();
    let mut candidates: Vec<(f64, usize, Vec<f64>)> = Vec::with_capacity(k);
    let mut out = Vec::with_capacity(cohorts.len());
    for &ch in cohorts {
        candidates.clear();
        for (rank, eta) in tie_order(k).enumerate() {
            let step = eta as f64 * cross.spacing();
            let surely_out = (0..m).any(|i| {
                let est = base[i] + step * lp.a()[[i, ch]];
                est - lp.b()[i] > slack[i] * (1.0 + step.abs())
            });
            work += m as u64;
            cross.place(Marker::new(ch, eta), &mut buf);
            if !surely_out && buf[ch] >= 0.0 {
                candidates.push((lp.objective_unchecked(&buf), rank, buf.clone()));
                work += n as u64;
            }
        }
        buf[ch] = g0[ch];
        // Highest value first; equal values keep tie-break order.
        candidates.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
        let mut best = None;
        for (value, _, point) in candidates.drain(..) {
            work += (m * n) as u64;
            if lp.contains_unchecked(&point) {
                best = Some(BestPoint { point, value });
                break;
            }
        }
        out.push(CohortBest { cohort: ch, best });
    }
    Ok((out, work))
}

/// Best feasible point of each listed cohort, in the order given.
pub fn process_cohorts(lp: &DenseLP, cross: &Cross, cohorts: &[usize]) -> Result<Vec<CohortBest>> {
    process_cohorts_counted(lp, cross, cohorts).map(|(b, _)| b)
}

/// Master step on the snapshot the bests were computed on. `bests` may come in
/// any order but must name every cohort exactly once.
pub fn evaluate(lp: &DenseLP, state: &TargetingState, bests: &[CohortBest]) -> Result<TargetingState> {
    let n = state.cross.dimension();
    let mut slots: Vec<Option<&CohortBest>> = vec![None; n];
    for cb in bests {
        let slot = slots.get_mut(cb.cohort).ok_or(Error::IndexOutOfRange {
            what: "cohort",
            index: cb.cohort,
            bound: n,
        })?;
        if slot.replace(cb).is_some() {
            return Err(Error::InvalidArgument(format!(
                "cohort {} reported twice",
                cb.cohort
            )));
        }
    }
    if let Some(missing) = slots.iter().position(Option::is_none) {
        return Err(Error::InvalidArgument(format!("cohort {missing} not reported")));
    }
    // Q in cohort order, so the centroid sum is order-independent of workers.
    let q: Vec<&BestPoint> = slots.iter().filter_map(|s| s.and_then(|cb| cb.best.as_ref())).collect();
    for bp in &q {
        if bp.point.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bp.point.len(),
            });
        }
    }
    let mut next = state.clone();
    next.clock += 1;
    next.last_q_size = q.len();
    next.moved = false;
    if q.is_empty() {
        next.stall_count += 1;
        return Ok(next);
    }
    next.stall_count = 0;
    let g0 = state.cross.center();
    let best = q.iter().map(|bp| bp.value).fold(f64::NEG_INFINITY, f64::max);
    if lp.contains(g0)? && lp.objective_unchecked(g0) >= best {
        return Ok(next);
    }
    let mut centroid = vec![0.0; n];
    for bp in &q {
        for (c, v) in centroid.iter_mut().zip(&bp.point) {
            *c += v;
        }
    }
    let size = q.len() as f64;
    for c in &mut centroid {
        *c /= size;
    }
    next.cross = state.cross.recenter(centroid)?;
    next.moved = true;
    Ok(next)
}

/// One iteration of the trace. The objective and residual are those of the
/// center after the iteration, on the snapshot at `clock`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub clock: u64,
    pub center: Vec<f64>,
    pub objective: f64,
    pub residual: f64,
    pub moved: bool,
    pub q_size: usize,
    pub reacquired: bool,
    /// Optimum value of the snapshot minus `objective`.
    pub oracle_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingSummary {
    pub iterations: usize,
    pub final_objective: f64,
    pub final_residual: f64,
    pub final_gap: Option<f64>,
    pub moved_rate: f64,
    /// Iterations that found no feasible cross point.
    pub stalled_iterations: usize,
    pub reacquisitions: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrackingTrace {
    pub rows: Vec<TraceRow>,
}

impl TrackingTrace {
    pub fn header(n: usize) -> String {
        let mut h = String::from("iter,clock");
        for j in 0..n {
            let _ = write!(h, ",x{j}");
        }
        h.push_str(",objective,residual,moved,oracle_gap");
        h
    }

    pub fn to_csv(&self) -> String {
        let n = self.rows.first().map_or(0, |r| r.center.len());
        let mut out = Self::header(n);
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{},{}", r.iter, r.clock);
            for v in &r.center {
                let _ = write!(out, ",{v}");
            }
            let _ = write!(out, ",{},{},{},", r.objective, r.residual, u8::from(r.moved));
            if let Some(g) = r.oracle_gap {
                let _ = write!(out, "{g}");
            }
            out.push('\n');
        }
        out
    }

    pub fn summary(&self) -> Option<TrackingSummary> {
        let last = self.rows.last()?;
        let count = self.rows.len();
        Some(TrackingSummary {
            iterations: count,
            final_objective: last.objective,
            final_residual: last.residual,
            final_gap: last.oracle_gap,
            moved_rate: self.rows.iter().filter(|r| r.moved).count() as f64 / count as f64,
            stalled_iterations: self.rows.iter().filter(|r| r.q_size == 0).count(),
            reacquisitions: self.rows.iter().filter(|r| r.reacquired).count(),
        })
    }
}

/// Optimum value of a snapshot, used for the gap column.
pub type Oracle<'a> = &'a dyn Fn(&DenseLP, u64) -> Option<f64>;

/// Master-side state shared by the farm and the direct loop.
struct Tracker<'a> {
    problem: &'a NonStationaryLP,
    cfg: TargetingConfig,
    oracle: Option<Oracle<'a>>,
    state: TargetingState,
    /// Snapshot at `state.clock`.
    lp: DenseLP,
    trace: TrackingTrace,
}

impl<'a> Tracker<'a> {
    fn new(
        problem: &'a NonStationaryLP,
        z: &[f64],
        cfg: &TargetingConfig,
        oracle: Option<Oracle<'a>>,
    ) -> Result<Self> {
        cfg.validate()?;
        if z.len() != problem.n() {
            return Err(Error::DimensionMismatch {
                expected: problem.n(),
                found: z.len(),
            });
        }
        let cross = Cross::new(z.to_vec(), cfg.spacing, cfg.points_per_cohort)?;
        Ok(Self {
            problem,
            cfg: cfg.clone(),
            oracle,
            state: TargetingState::new(cross, cfg.start_clock),
            lp: problem.snapshot(cfg.start_clock),
            trace: TrackingTrace::default(),
        })
    }

    /// Applies [`evaluate`], records the trace row and advances the snapshot.
    /// Returns master work units.
    fn step(&mut self, bests: &[CohortBest]) -> Result<u64> {
        let (m, n) = (self.lp.m(), self.lp.n());
        let mut next = evaluate(&self.lp, &self.state, bests)?;
        let mut work = (m * n + next.last_q_size * n) as u64;
        let mut reacquired = false;
        if next.stall_count >= self.cfg.stall_limit {
            let p = quest_inside(&self.lp, next.cross.center(), &self.cfg.quest)?;
            work += (p.iterations * m * n) as u64;
            next.cross = next.cross.recenter(p.point)?;
            next.stall_count = 0;
            next.reacquisitions += 1;
            reacquired = true;
        }
        let center = next.cross.center().to_vec();
        let objective = self.lp.objective_unchecked(&center);
        let oracle_gap = self
            .oracle
            .and_then(|f| f(&self.lp, self.state.clock))
            .map(|opt| opt - objective);
        self.trace.rows.push(TraceRow {
            iter: self.trace.rows.len(),
            clock: self.state.clock,
            residual: self.lp.violation_unchecked(&center),
            center,
            objective,
            moved: next.moved,
            q_size: next.last_q_size,
            reacquired,
            oracle_gap,
        });
        work += 2 * (m * n) as u64;
        self.lp = self.problem.advance(&self.lp, next.clock);
        self.state = next;
        Ok(work)
    }
}

/// The Targeting loop as a bulk-synchronous farm over cohorts.
pub struct TargetingFarm<'a> {
    tracker: Tracker<'a>,
    iterations: usize,
    deadline: Option<Instant>,
    /// The problem as the workers currently hold it.
    sent: DenseLP,
}

impl<'a> TargetingFarm<'a> {
    pub fn new(
        problem: &'a NonStationaryLP,
        z: &[f64],
        cfg: &TargetingConfig,
        iterations: usize,
        oracle: Option<Oracle<'a>>,
    ) -> Result<Self> {
        if iterations == 0 {
            return Err(Error::InvalidArgument("at least one iteration is required".into()));
        }
        let tracker = Tracker::new(problem, z, cfg, oracle)?;
        let sent = tracker.lp.clone();
        Ok(Self {
            tracker,
            iterations,
            deadline: None,
            sent,
        })
    }

    /// Also stop, after at least one iteration, once `budget` has elapsed.
    pub fn with_time_budget(mut self, budget: Duration) -> Self {
        self.deadline = Some(Instant::now() + budget);
        self
    }
}

pub struct TargetingWorker {
    id: usize,
    cohorts: Vec<usize>,
    lp: DenseLP,
    cross: Cross,
}

impl FarmWorker for TargetingWorker {
    type Order = Order;
    type Partial = WorkerResult;

    fn process(&mut self, order: &Order) -> Result<(WorkerResult, u64)> {
        if !order.delta.is_empty() {
            self.lp = apply_delta(&self.lp, &order.delta)?;
        }
        self.cross = self.cross.recenter(order.theta.clone())?;
        let (bests, work) = process_cohorts_counted(&self.lp, &self.cross, &self.cohorts)?;
        Ok((
            WorkerResult {
                worker_id: self.id,
                bests,
            },
            work + order.delta.len() as u64,
        ))
    }
}

impl<'a> Farm for TargetingFarm<'a> {
    type Order = Order;
    type Partial = WorkerResult;
    type Merged = Vec<CohortBest>;
    type Worker = TargetingWorker;
    type Output = TrackingTrace;

    fn units(&self) -> usize {
        self.tracker.lp.n()
    }

    fn init_worker(&self, worker_id: usize, units: Range<usize>) -> TargetingWorker {
        TargetingWorker {
            id: worker_id,
            cohorts: units.collect(),
            lp: self.sent.clone(),
            cross: self.tracker.state.cross.clone(),
        }
    }

    fn make_order(&mut self) -> Result<Order> {
        let t = &self.tracker;
        let order = bsf::make_order(&self.sent, &t.lp, t.state.cross.center(), t.state.clock)?;
        self.sent = t.lp.clone();
        Ok(order)
    }

    fn merge_results(&mut self, partials: Vec<WorkerResult>) -> Result<Vec<CohortBest>> {
        for (id, p) in partials.iter().enumerate() {
            if p.worker_id != id {
                return Err(Error::Worker {
                    worker: id,
                    message: format!("result tagged with worker {}", p.worker_id),
                });
            }
        }
        Ok(partials.into_iter().flat_map(|p| p.bests).collect())
    }

    fn evaluate(&mut self, merged: Vec<CohortBest>) -> Result<u64> {
        self.tracker.step(&merged)
    }

    fn exit_check(&self) -> bool {
        let done = self.tracker.trace.rows.len();
        done >= self.iterations || (done > 0 && self.deadline.is_some_and(|d| Instant::now() >= d))
    }

    fn finalize(self) -> TrackingTrace {
        self.tracker.trace
    }
}

/// Runs `iterations` Targeting iterations from the feasible point `z`.
pub fn run_targeting(
    problem: &NonStationaryLP,
    z: &[f64],
    cfg: &TargetingConfig,
    iterations: usize,
    executor: &Executor,
    oracle: Option<Oracle<'_>>,
) -> Result<(TrackingTrace, RunMetrics)> {
    let farm = TargetingFarm::new(problem, z, cfg, iterations, oracle)?;
    bsf::run_bsf(farm, executor.workers, &executor.backend)
}

/// [`run_targeting`] that also stops once `budget` of wall-clock time has
/// passed. The trace then depends on machine speed.
pub fn run_targeting_for(
    problem: &NonStationaryLP,
    z: &[f64],
    cfg: &TargetingConfig,
    max_iterations: usize,
    budget: Duration,
    executor: &Executor,
    oracle: Option<Oracle<'_>>,
) -> Result<(TrackingTrace, RunMetrics)> {
    let farm = TargetingFarm::new(problem, z, cfg, max_iterations, oracle)?.with_time_budget(budget);
    bsf::run_bsf(farm, executor.workers, &executor.backend)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bsf::Backend;
    use crate::lp::{model_n, model_n_optimum, Drift};
    use crate::testutil::{box_lp, unit_square};

    fn square_cross() -> Cross {
        Cross::new(vec![0.5, 0.5], 0.25, 4).unwrap()
    }

    #[test]
    fn unit_square_hand_step() {
        let lp = unit_square();
        let cross = square_cross();
        let bests = process_cohorts(&lp, &cross, &[0, 1]).unwrap();
        assert_eq!(bests[0].best.as_ref().unwrap().point, vec![1.0, 0.5]);
        assert_eq!(bests[0].best.as_ref().unwrap().value, 1.5);
        assert_eq!(bests[1].best.as_ref().unwrap().point, vec![0.5, 1.0]);
        let next = evaluate(&lp, &TargetingState::new(cross, 0), &bests).unwrap();
        assert_eq!(next.cross.center(), &[0.75, 0.75]);
        assert!(next.moved);
        assert_eq!(next.clock, 1);
        assert_eq!(next.last_q_size, 2);
    }

    #[test]
    fn empty_and_singleton_cohorts() {
        let lp = unit_square();
        let outside = Cross::new(vec![5.0, 5.0], 0.25, 4).unwrap();
        let bests = process_cohorts(&lp, &outside, &[0, 1]).unwrap();
        assert!(bests.iter().all(|b| b.best.is_none()));
        let state = TargetingState::new(outside.clone(), 3);
        let next = evaluate(&lp, &state, &bests).unwrap();
        assert_eq!(next.cross, outside);
        assert_eq!((next.clock, next.stall_count, next.moved), (4, 1, false));
        // only (0.95, 1) of cohort 0 is feasible
        let lp = box_lp(&[0.0, 0.0], &[1.0, 1.0], &[-1.0, 1.0]);
        let c = Cross::new(vec![1.2, 1.0], 0.25, 2).unwrap();
        let b = process_cohorts(&lp, &c, &[0]).unwrap();
        assert_eq!(b[0].best.as_ref().unwrap().point, vec![0.95, 1.0]);
    }

    #[test]
    fn ties_prefer_small_negative_offsets() {
        // c = (0, 1): every cohort-0 point has the same value.
        let lp = box_lp(&[0.0, 0.0], &[10.0, 10.0], &[0.0, 1.0]);
        let c = Cross::new(vec![5.0, 5.0], 1.0, 6).unwrap();
        let b = process_cohorts(&lp, &c, &[0]).unwrap();
        assert_eq!(b[0].best.as_ref().unwrap().point, vec![4.0, 5.0]);
    }

    #[test]
    fn hold_at_optimum() {
        let lp = unit_square();
        let cross = Cross::new(vec![1.0, 1.0], 0.25, 4).unwrap();
        let bests = process_cohorts(&lp, &cross, &[0, 1]).unwrap();
        let state = TargetingState::new(cross.clone(), 0);
        let next = evaluate(&lp, &state, &bests).unwrap();
        assert!(!next.moved);
        assert_eq!(next.cross, cross);
        let again = evaluate(&lp, &next, &bests).unwrap();
        assert_eq!(again.cross, cross);
        assert!(!again.moved);
    }

    #[test]
    fn evaluate_rejects_bad_cohort_sets() {
        let lp = unit_square();
        let cross = square_cross();
        let state = TargetingState::new(cross.clone(), 0);
        let bests = process_cohorts(&lp, &cross, &[0, 1]).unwrap();
        assert!(evaluate(&lp, &state, &bests[..1]).is_err());
        let dup = vec![bests[0].clone(), bests[0].clone()];
        assert!(evaluate(&lp, &state, &dup).is_err());
        let mut bad = bests.clone();
        bad[1].cohort = 7;
        assert!(evaluate(&lp, &state, &bad).is_err());
        assert!(process_cohorts(&lp, &cross, &[2]).is_err());
        assert!(process_cohorts(&model_n(3, 0).unwrap(), &cross, &[0]).is_err());
    }

    #[test]
    fn partition_completeness() {
        let lp = model_n(9, 4).unwrap();
        let cross = Cross::new(vec![20.0; 9], 7.0, 6).unwrap();
        let all: Vec<usize> = (0..9).collect();
        let whole = process_cohorts(&lp, &cross, &all).unwrap();
        for split in [vec![0..3, 3..9], vec![0..1, 1..2, 2..5, 5..9]] {
            let joined: Vec<CohortBest> = split
                .into_iter()
                .flat_map(|r| process_cohorts(&lp, &cross, &r.collect::<Vec<_>>()).unwrap())
                .collect();
            assert_eq!(joined, whole);
        }
    }

    #[test]
    fn centroid_stays_feasible() {
        let lp = model_n(5, 0).unwrap();
        let cross = Cross::new(vec![50.0, 60.0, 70.0, 80.0, 90.0], 10.0, 8).unwrap();
        let bests = process_cohorts(&lp, &cross, &[0, 1, 2, 3, 4]).unwrap();
        let next = evaluate(&lp, &TargetingState::new(cross, 0), &bests).unwrap();
        assert!(next.moved);
        assert_eq!(lp.max_violation(next.cross.center()).unwrap(), 0.0);
    }

    /// The same iteration written without the farm.
    fn direct_loop(
        problem: &NonStationaryLP,
        z: &[f64],
        cfg: &TargetingConfig,
        iterations: usize,
    ) -> Vec<(u64, Vec<f64>, bool)> {
        let mut state = TargetingState::new(
            Cross::new(z.to_vec(), cfg.spacing, cfg.points_per_cohort).unwrap(),
            cfg.start_clock,
        );
        let all: Vec<usize> = (0..problem.n()).collect();
        let mut out = Vec::new();
        for _ in 0..iterations {
            let lp = problem.snapshot(state.clock);
            let bests = process_cohorts(&lp, &state.cross, &all).unwrap();
            let next = evaluate(&lp, &state, &bests).unwrap();
            out.push((state.clock, next.cross.center().to_vec(), next.moved));
            state = next;
        }
        out
    }

    fn executor(workers: usize, backend: Backend) -> Executor {
        Executor { workers, backend }
    }

    #[test]
    fn farm_matches_direct_loop() {
        let problem = NonStationaryLP::new(
            model_n(6, 2).unwrap(),
            Drift::RandomSparse {
                delta: 1.0 / 14.0,
                magnitude: 0.05,
                seed: 11,
            },
        )
        .unwrap();
        let cfg = TargetingConfig::default();
        let z = vec![1.0; 6];
        let expected = direct_loop(&problem, &z, &cfg, 30);
        let (trace, _) =
            run_targeting(&problem, &z, &cfg, 30, &executor(1, Backend::simulated()), None).unwrap();
        let got: Vec<_> = trace.rows.iter().map(|r| (r.clock, r.center.clone(), r.moved)).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn trace_independent_of_workers_and_backend() {
        let problem = NonStationaryLP::new(
            model_n(8, 5).unwrap(),
            Drift::RandomSparse {
                delta: 1.0 / 18.0,
                magnitude: 0.1,
                seed: 3,
            },
        )
        .unwrap();
        let cfg = TargetingConfig::default();
        let z = vec![2.0; 8];
        let reference = run_targeting(&problem, &z, &cfg, 40, &executor(1, Backend::simulated()), None)
            .unwrap()
            .0
            .to_csv();
        for w in [1, 2, 4] {
            for backend in [Backend::simulated(), Backend::WorkerPool] {
                let (trace, m) = run_targeting(&problem, &z, &cfg, 40, &executor(w, backend), None).unwrap();
                assert_eq!(trace.to_csv(), reference, "workers {w}");
                assert_eq!(m.iterations, 40);
            }
        }
    }

    #[test]
    fn one_iteration_reproduces_hand_step() {
        let problem = NonStationaryLP::stationary(unit_square());
        let cfg = TargetingConfig {
            points_per_cohort: 4,
            spacing: 0.25,
            ..Default::default()
        };
        let (trace, _) =
            run_targeting(&problem, &[0.5, 0.5], &cfg, 1, &executor(2, Backend::simulated()), None).unwrap();
        assert_eq!(trace.rows[0].center, vec![0.75, 0.75]);
        assert_eq!(trace.rows[0].objective, 1.5);
        assert!(trace.rows[0].moved);
    }

    #[test]
    fn stationary_objective_is_monotone_on_the_square() {
        let problem = NonStationaryLP::stationary(unit_square());
        let cfg = TargetingConfig {
            points_per_cohort: 4,
            spacing: 0.1,
            ..Default::default()
        };
        let (trace, _) =
            run_targeting(&problem, &[0.1, 0.3], &cfg, 50, &executor(1, Backend::simulated()), None).unwrap();
        for w in trace.rows.windows(2) {
            assert!(w[1].objective >= w[0].objective);
        }
        assert!(trace.rows.last().unwrap().objective >= 2.0 - 0.1 * 2f64.sqrt());
    }

    #[test]
    fn stall_triggers_quest() {
        let problem = NonStationaryLP::stationary(unit_square());
        let cfg = TargetingConfig {
            points_per_cohort: 2,
            spacing: 0.1,
            stall_limit: 3,
            ..Default::default()
        };
        let (trace, _) =
            run_targeting(&problem, &[3.0, 3.0], &cfg, 6, &executor(1, Backend::simulated()), None).unwrap();
        let flags: Vec<bool> = trace.rows.iter().map(|r| r.reacquired).collect();
        assert_eq!(flags[..3], [false, false, true]);
        for v in &trace.rows[2].center {
            assert!((v - 1.0).abs() <= 1e-8);
        }
        assert_eq!(trace.rows[2].residual, 0.0);
        assert!(trace.rows[3..].iter().all(|r| r.q_size > 0));
        let s = trace.summary().unwrap();
        assert_eq!((s.stalled_iterations, s.reacquisitions), (3, 1));
    }

    #[test]
    fn oracle_gap_column() {
        let problem = NonStationaryLP::stationary(model_n(4, 0).unwrap());
        let opt = model_n_optimum(4).unwrap().1;
        let oracle = move |_: &DenseLP, _: u64| Some(opt);
        let cfg = TargetingConfig::default();
        let (trace, _) = run_targeting(
            &problem,
            &[0.0; 4],
            &cfg,
            3,
            &executor(2, Backend::simulated()),
            Some(&oracle),
        )
        .unwrap();
        for r in &trace.rows {
            assert_eq!(r.oracle_gap, Some(opt - r.objective));
        }
        let csv = trace.to_csv();
        assert!(csv.starts_with("iter,clock,x0,x1,x2,x3,objective,residual,moved,oracle_gap\n"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn time_budget_stops_early() {
        let problem = NonStationaryLP::stationary(unit_square());
        let cfg = TargetingConfig::default();
        let (trace, _) = run_targeting_for(
            &problem,
            &[0.5, 0.5],
            &cfg,
            usize::MAX,
            Duration::from_millis(20),
            &executor(1, Backend::simulated()),
            None,
        )
        .unwrap();
        assert!(!trace.rows.is_empty());
    }

    #[test]
    fn rejects_bad_runs() {
        let problem = NonStationaryLP::stationary(unit_square());
        let cfg = TargetingConfig::default();
        let ex = executor(1, Backend::simulated());
        assert!(run_targeting(&problem, &[0.5, 0.5], &cfg, 0, &ex, None).is_err());
        assert!(run_targeting(&problem, &[0.5], &cfg, 1, &ex, None).is_err());
        let odd = TargetingConfig {
            points_per_cohort: 3,
            ..Default::default()
        };
        assert!(run_targeting(&problem, &[0.5, 0.5], &odd, 1, &ex, None).is_err());
        assert!(run_targeting(&problem, &[0.5, 0.5], &cfg, 1, &executor(3, Backend::simulated()), None).is_err());
    }
}
