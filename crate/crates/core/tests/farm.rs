use nslp_core::bsf::{make_order, Backend, Executor, Wire};
use nslp_core::cost::DeltaMode;
use nslp_core::lp::{model_n, model_n_optimum, Drift, NonStationaryLP};
use nslp_core::quest::{quest_inside, FejerConfig};
use nslp_core::targeting::{run_targeting, TargetingConfig};

fn drifting(n: usize, delta: DeltaMode) -> NonStationaryLP {
    NonStationaryLP::new(
        model_n(n, 4).unwrap(),
        Drift::RandomSparse {
            delta: delta.value(n),
            magnitude: 0.05,
            seed: 4,
        },
    )
    .unwrap()
}

#[test]
fn snapshots_replay_from_base() {
    let p = drifting(10, DeltaMode::OneRow);
    let mut lp = p.snapshot(0);
    for k in 1..=20 {
        lp = p.advance(&lp, k);
        assert_eq!(lp, p.snapshot(k), "clock {k}");
    }
}

#[test]
fn one_row_order_changes_about_one_row() {
    for n in [20, 50, 100] {
        let p = drifting(n, DeltaMode::OneRow);
        let s0 = p.snapshot(0);
        let s1 = p.advance(&s0, 1);
        let order = make_order(&s0, &s1, &vec![0.0; n], 1).unwrap();
        // m n + m + n entries, a 1 / (2(n+1)) fraction of them
        let total = 2 * (n + 1) * n + 2 * (n + 1) + n;
        let expected = (total as f64 / (2.0 * (n as f64 + 1.0))).ceil() as usize;
        assert!(order.delta.len() <= expected, "n={n}: {} > {expected}", order.delta.len());
        assert!(order.delta.len() + 3 >= expected);
        let bytes = order.to_bytes();
        assert_eq!(nslp_core::bsf::Order::decode(&bytes).unwrap(), order);
    }
}

#[test]
fn tracking_stays_feasible_under_drift() {
    let n = 6;
    let p = drifting(n, DeltaMode::OneRow);
    let z = quest_inside(&p.snapshot(0), &vec![0.0; n], &FejerConfig::default()).unwrap().point;
    let cfg = TargetingConfig::default();
    let ex = Executor {
        workers: 3,
        backend: Backend::WorkerPool,
    };
    let (trace, metrics) = run_targeting(&p, &z, &cfg, 60, &ex, None).unwrap();
    assert_eq!(trace.rows.len(), 60);
    assert_eq!(metrics.iterations, 60);
    assert_eq!(metrics.worker_t_v.len(), 3);
    let (_, opt) = model_n_optimum(n).unwrap();
    for r in &trace.rows {
        // a feasible center never beats the stationary optimum by more than the drift allows
        assert!(r.objective <= opt * 1.05, "{}", r.objective);
    }
    let objectives: Vec<f64> = trace.rows.iter().map(|r| r.objective).collect();
    assert!(objectives.last().unwrap() > objectives.first().unwrap());
}
