use nslp_core::lp::{model_n, model_n_optimum, DenseLP};
use nslp_core::oracle::{project_bruteforce, solve_simplex, verify_certificate, SimplexStatus};
use nslp_core::quest::{fejer_step, project_stationary, FejerConfig};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `{x >= 0, A x <= b, x <= 3}` with random nonnegative `A`.
fn random_polytope(rng: &mut StdRng, n: usize, rows: usize) -> DenseLP {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for _ in 0..rows {
        a.push((0..n).map(|_| rng.gen_range(0.0..1.0)).collect::<Vec<f64>>());
        b.push(rng.gen_range(0.5..3.0));
    }
    for j in 0..n {
        let mut r = vec![0.0; n];
        r[j] = 1.0;
        a.push(r);
        b.push(3.0);
    }
    DenseLP::from_rows(&a, b, vec![1.0; n]).unwrap()
}

#[test]
fn simplex_matches_model_n_closed_form() {
    for n in 2..=30 {
        for seed in [0, 1, 9] {
            let lp = model_n(n, seed).unwrap();
            let res = solve_simplex(&lp).unwrap();
            assert_eq!(res.status, SimplexStatus::Optimal);
            let (_, value) = model_n_optimum(n).unwrap();
            let got = res.value.unwrap();
            assert!((got - value).abs() <= 1e-9 * value, "n={n} seed={seed}: {got} vs {value}");
            assert!(verify_certificate(&lp, &res, 1e-7));
        }
    }
}

#[test]
fn projection_beats_sampled_feasible_points() {
    let mut rng = StdRng::seed_from_u64(42);
    for _ in 0..5 {
        let lp = random_polytope(&mut rng, 3, 4);
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..6.0)).collect();
        let p = project_bruteforce(&lp, &x).unwrap();
        assert!(lp.max_violation(&p).unwrap() <= 1e-9);
        let best = dist2(&p, &x);
        let mut seen = 0;
        while seen < 20_000 {
            let y: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..3.0)).collect();
            if lp.contains(&y).unwrap() {
                seen += 1;
                assert!(dist2(&y, &x) >= best - 1e-12, "{y:?} closer to {x:?} than {p:?}");
            }
        }
    }
}

#[test]
fn fejer_agrees_with_projection_in_simple_cases() {
    // a box: the simultaneous map converges to the Euclidean projection
    let lp = DenseLP::from_rows(
        &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        vec![1.0, 2.0, 3.0],
        vec![1.0; 3],
    )
    .unwrap();
    let x = [4.0, -1.0, 2.0];
    let exact = project_bruteforce(&lp, &x).unwrap();
    let cfg = FejerConfig {
        tolerance: 1e-12,
        ..Default::default()
    };
    let q = project_stationary(&lp, &x, &cfg).unwrap();
    assert!(q.converged);
    assert!(dist2(&q.point, &exact).sqrt() < 1e-9, "{:?} vs {exact:?}", q.point);
}

#[test]
fn fejer_is_distance_monotone() {
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..10 {
        let lp = random_polytope(&mut rng, 4, 5);
        let anchors: Vec<Vec<f64>> = std::iter::repeat_with(|| (0..4).map(|_| rng.gen_range(0.0..3.0)).collect())
            .filter(|y: &Vec<f64>| lp.contains(y).unwrap())
            .take(10)
            .collect();
        let mut x: Vec<f64> = (0..4).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let lambda = rng.gen_range(0.1..1.9);
        for _ in 0..500 {
            let y = fejer_step(&lp, &x, lambda).unwrap();
            for a in &anchors {
                assert!(dist2(&y, a) <= dist2(&x, a) * (1.0 + 1e-12) + 1e-15);
            }
            x = y;
        }
    }
}
