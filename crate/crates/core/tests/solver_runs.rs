use mocg::pareto::sample_starts;
use mocg::{
    builtin_problem, multistart_pareto, solve, zoutendijk_diag, BetaFamily, BetaRule, SolveConfig, Status,
};

#[test]
fn first_zoutendijk_term_is_norm_v_squared() {
    let p = builtin_problem("aniso-pair", 3).unwrap();
    let config = SolveConfig {
        max_iters: 1,
        ..SolveConfig::default()
    };
    let report = solve(&p, &[4.0, -2.0, 3.0], &config).unwrap();
    assert_eq!(report.records.len(), 1);
    let rec = &report.records[0];
    let z = zoutendijk_diag(&report.records, 10).unwrap();
    assert!((z.total - rec.norm_v * rec.norm_v).abs() <= 1e-10 * z.total);
    assert_eq!(z.total, rec.psi_d * rec.psi_d / rec.d.iter().map(|x| x * x).sum::<f64>());
}

#[test]
fn single_start_front_is_that_point() {
    let p = builtin_problem("quad-pair", 2).unwrap();
    let front = multistart_pareto(&p, 1, 3, &SolveConfig::default()).unwrap();
    assert_eq!(front.runs.len(), 1);
    assert_eq!(front.nondominated, vec![0]);
    assert_eq!(front.runs[0].x0, sample_starts(&p, 1, 3)[0]);
}

#[test]
fn jos1_front_spans_single_objective_minima() {
    let p = builtin_problem("jos1", 2).unwrap();
    let front = multistart_pareto(&p, 50, 1, &SolveConfig::default()).unwrap();
    assert_eq!(front.converged(), 50);
    let mut pts: Vec<(f64, f64)> = front
        .nondominated
        .iter()
        .map(|&i| (front.runs[i].final_objectives[0], front.runs[i].final_objectives[1]))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Analytic front: sqrt(f1) + sqrt(f2) = 2 between (0, 4) and (4, 0).
    for &(f1, f2) in &pts {
        assert!((f1.max(0.0).sqrt() + f2.max(0.0).sqrt() - 2.0).abs() < 1e-4, "({f1}, {f2})");
        assert!((-1e-9..=4.0 + 1e-5).contains(&f1));
    }
    // Convexity of the traced front.
    for w in pts.windows(3) {
        let (a, b, c) = (w[0], w[1], w[2]);
        let cross = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
        assert!(cross >= -1e-8);
    }
}

#[test]
fn every_family_converges_on_aniso_pair() {
    let p = builtin_problem("aniso-pair", 6).unwrap();
    for family in BetaFamily::ALL {
        let config = SolveConfig::default().with_rule(BetaRule::theorem(family));
        for x0 in sample_starts(&p, 5, 9) {
            let r = solve(&p, &x0, &config).unwrap();
            assert_eq!(r.status, Status::Converged, "{family}");
            assert!(r.invariant_violations.is_empty(), "{family}: {:?}", r.invariant_violations);
            assert!(p.pareto_set().unwrap().distance(&r.final_x) < 1e-4);
        }
    }
}

#[test]
fn report_serializes_and_round_trips() {
    let p = builtin_problem("quad-pair", 2).unwrap();
    let report = solve(&p, &[3.0, 2.0], &SolveConfig::default()).unwrap();
    let text = serde_json::to_string(&report).unwrap();
    assert!(text.contains("\"status\":\"converged\""));
    let back: mocg::SolveReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, report);
}
