use mocg::pareto::dominates;
use mocg::stepsize::fixed_stepsize;
use mocg::{nondominated_filter, psi, solve_subproblem, Jacobian, MetricProvider};
use proptest::prelude::*;

fn jacobian() -> impl Strategy<Value = Jacobian> {
    (1usize..5, 1usize..6).prop_flat_map(|(m, n)| {
        prop::collection::vec(prop::collection::vec(-3.0..3.0_f64, n), m)
            .prop_map(|rows| Jacobian::from_rows(rows).unwrap())
    })
}

fn jacobian_and_dirs() -> impl Strategy<Value = (Jacobian, Vec<f64>, Vec<f64>)> {
    jacobian().prop_flat_map(|j| {
        let n = j.n();
        (
            Just(j),
            prop::collection::vec(-5.0..5.0_f64, n),
            prop::collection::vec(-5.0..5.0_f64, n),
        )
    })
}

proptest! {
    #[test]
    fn psi_is_sublinear_and_stable((j, a, b) in jacobian_and_dirs(), s in 0.0..20.0_f64) {
        let pa = psi(&j, &a).unwrap().value;
        let pb = psi(&j, &b).unwrap().value;
        let scaled: Vec<f64> = a.iter().map(|x| s * x).collect();
        prop_assert!((psi(&j, &scaled).unwrap().value - s * pa).abs() <= 1e-12 * (1.0 + s * pa.abs()));
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        prop_assert!(psi(&j, &sum).unwrap().value <= pa + pb + 1e-12);
        let gmax = j.rows().iter().map(|g| g.iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0, f64::max);
        let dist = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        prop_assert!((pa - pb).abs() <= gmax * dist + 1e-12);
    }

    #[test]
    fn subproblem_satisfies_kkt(j in jacobian()) {
        let sol = solve_subproblem(&j).unwrap();
        let v_sq: f64 = sol.v.iter().map(|x| x * x).sum();
        prop_assert!((sol.psi_v + v_sq).abs() <= 1e-8);
        prop_assert!((sol.theta + 0.5 * v_sq).abs() <= 1e-8);
        prop_assert!(sol.lambda.iter().all(|&l| l >= 0.0));
        prop_assert!((sol.lambda.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn fixed_stepsize_is_homogeneous_of_degree_minus_one(
        (j, d, _) in jacobian_and_dirs(),
        s in 0.01..100.0_f64,
    ) {
        let psi_d = psi(&j, &d).unwrap().value;
        prop_assume!(psi_d < -1e-6);
        let scaled: Vec<f64> = d.iter().map(|x| s * x).collect();
        let metric = MetricProvider::Identity;
        let t = fixed_stepsize(psi_d, &d, &metric, 0.5).unwrap();
        let ts = fixed_stepsize(psi(&j, &scaled).unwrap().value, &scaled, &metric, 0.5).unwrap();
        prop_assert!((ts * s - t).abs() <= 1e-12 * t);
    }

    #[test]
    fn filter_matches_brute_force(
        pts in (1usize..4).prop_flat_map(|m| prop::collection::vec(prop::collection::vec(0u8..6, m), 0..60)),
    ) {
        let pts: Vec<Vec<f64>> = pts.into_iter().map(|p| p.into_iter().map(f64::from).collect()).collect();
        let brute: Vec<usize> = (0..pts.len())
            .filter(|&i| !(0..pts.len()).any(|k| k != i && dominates(&pts[k], &pts[i])))
            .collect();
        prop_assert_eq!(nondominated_filter(&pts).unwrap(), brute);
    }
}
