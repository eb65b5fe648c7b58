//! Self-checking invariant suites, grouped by module.
//!
//! Each suite reports a set of named checks with the worst magnitude seen
//! and the tolerance it was held to.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::directions::{compute_beta, BetaFamily, BetaInputs, BetaRule};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, norm_sq};
use crate::problem::{builtin_problem, sample_constants, Jacobian, Problem, CATALOG, DEFAULT_FD_STEP};
use crate::solver::{solve, SolveConfig, SolveReport, Status, ViolationKind};
use crate::subproblem::{psi, solve_subproblem, solve_subproblem_oracle};
use crate::zoutendijk::zoutendijk_diag;

pub const SUITES: [&str; 5] = ["problem", "subproblem", "stepsize", "directions", "solver"];

const SEED: u64 = 20_240_601;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub suite: &'static str,
    pub checks: Vec<CheckResult>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Largest `worst / tolerance` over the checks (infinite when a
    /// zero-tolerance check saw a violation).
    pub fn worst_ratio(&self) -> f64 {
        self.checks
            .iter()
            .map(|c| match (c.worst, c.tolerance) {
                (w, _) if w <= 0.0 => 0.0,
                (_, 0.0) => f64::INFINITY,
                (w, t) => w / t,
            })
            .fold(0.0, f64::max)
    }
}

struct Suite {
    name: &'static str,
    checks: Vec<CheckResult>,
}

impl Suite {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checks: Vec::new(),
        }
    }

    /// Passes when `worst <= tolerance` (NaN fails).
    fn at_most(&mut self, name: impl Into<String>, worst: f64, tolerance: f64) {
        self.checks.push(CheckResult {
            name: name.into(),
            worst,
            tolerance,
            passed: worst <= tolerance,
        });
    }

    fn finish(self) -> SuiteResult {
        SuiteResult {
            suite: self.name,
            checks: self.checks,
        }
    }
}

/// A problem whose second gradient component is wrong, used to exercise
/// failure reporting.
pub fn broken_gradient_fixture() -> Problem {
    Problem::from_fns(
        "broken-gradient",
        2,
        1,
        |x| vec![0.5 * (x[0] * x[0] + x[1] * x[1])],
        |x| vec![vec![x[0], 2.0 * x[1] + 0.1]],
    )
}

/// Runs the suites selected by `scope` (`"all"` or a name from [`SUITES`]).
/// `fixtures` are added to the gradient checks of the `problem` suite.
pub fn run_checks(scope: &str, fixtures: &[Problem]) -> Result<Vec<SuiteResult>> {
    let selected: Vec<&str> = match scope {
        "all" => SUITES.to_vec(),
        s if SUITES.contains(&s) => vec![s],
        s => {
            return Err(Error::invalid(format!(
                "unknown check scope `{s}`; expected all, {}",
                SUITES.join(", ")
            )))
        }
    };
    selected
        .into_iter()
        .map(|s| match s {
            "problem" => problem_suite(fixtures),
            "subproblem" => subproblem_suite(),
            "stepsize" => stepsize_suite(),
            "directions" => directions_suite(),
            _ => solver_suite(),
        })
        .collect()
}

fn catalog(n: usize) -> Vec<Problem> {
    CATALOG
        .iter()
        .map(|name| builtin_problem(name, n).expect("catalog names resolve"))
        .collect()
}

fn random_jacobian(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Jacobian {
    let rows = (0..m)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    Jacobian::from_rows(rows).expect("finite rows")
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn problem_suite(fixtures: &[Problem]) -> Result<SuiteResult> {
    let mut suite = Suite::new("problem");
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut problems = catalog(3);
    problems.extend(fixtures.iter().cloned());
    for p in &problems {
        let mut worst = 0.0_f64;
        for _ in 0..100 {
            let x = p.domain().sample(&mut rng);
            worst = worst.max(p.check_gradients(&x, DEFAULT_FD_STEP)?);
        }
        suite.at_most(format!("gradient {}", p.name()), worst, 1e-5);
    }
    for p in catalog(3) {
        let c = sample_constants(&p, 1000, SEED)?;
        if let Some(r) = c.lipschitz_ratio {
            suite.at_most(format!("lipschitz {}", p.name()), (r - 1.0).max(0.0), 1e-12);
        }
        if let Some(r) = c.convexity_ratio {
            suite.at_most(format!("convexity {}", p.name()), (1.0 - r).max(0.0), 1e-12);
        }
    }
    Ok(suite.finish())
}

fn subproblem_suite() -> Result<SuiteResult> {
    let mut suite = Suite::new("subproblem");
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    // ψ(x, ·) is positively homogeneous, subadditive and 1-Lipschitz scaled by max ‖g_i‖.
    let (mut homog, mut subadd, mut lip) = (0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..200 {
        let m = rng.gen_range(1..=4);
        let n = rng.gen_range(1..=6);
        let j = random_jacobian(&mut rng, m, n);
        let (d1, d2) = (random_vec(&mut rng, n), random_vec(&mut rng, n));
        let s = rng.gen_range(0.0..10.0);
        let p1 = psi(&j, &d1)?.value;
        let p2 = psi(&j, &d2)?.value;
        let scaled: Vec<f64> = d1.iter().map(|x| s * x).collect();
        homog = homog.max((psi(&j, &scaled)?.value - s * p1).abs());
        subadd = subadd.max(psi(&j, &axpy(&d1, 1.0, &d2))?.value - p1 - p2);
        let gmax = j.rows().iter().map(|g| norm(g)).fold(0.0, f64::max);
        let diff = norm(&axpy(&d1, -1.0, &d2));
        lip = lip.max((p1 - p2).abs() - gmax * diff);
    }
    suite.at_most("psi homogeneity", homog, 1e-12);
    suite.at_most("psi subadditivity", subadd.max(0.0), 1e-12);
    suite.at_most("psi stability", lip.max(0.0), 1e-12);

    let (mut closed, mut grid, mut kkt) = (0.0_f64, 0.0_f64, 0.0_f64);
    for i in 0..300 {
        let m = [1, 2, 3][i % 3];
        let n = rng.gen_range(1..=6);
        let j = random_jacobian(&mut rng, m, n);
        let sol = solve_subproblem(&j)?;
        let v_sq = norm_sq(&sol.v);
        kkt = kkt.max((sol.psi_v + v_sq).abs()).max((sol.theta + 0.5 * v_sq).abs());
        if m <= 2 {
            let oracle = solve_subproblem_oracle(&j, 1e-3)?;
            closed = closed.max(norm(&axpy(&sol.v, -1.0, &oracle.v)));
        } else if i % 15 == 2 {
            let oracle = solve_subproblem_oracle(&j, 1e-3)?;
            grid = grid.max(norm(&axpy(&sol.v, -1.0, &oracle.v)));
        }
    }
    suite.at_most("closed-form oracle", closed, 1e-6);
    suite.at_most("grid oracle", grid, 1e-2);
    suite.at_most("kkt identity", kkt, 1e-8);
    Ok(suite.finish())
}

/// Fixed-stepsize runs used by the run-based suites.
fn reference_runs(families: &[BetaFamily]) -> Result<Vec<SolveReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut reports = Vec::new();
    for &(name, n) in &[("quad-pair", 2), ("jos1", 10), ("aniso-pair", 4)] {
        let p = builtin_problem(name, n)?;
        for &family in families {
            for _ in 0..3 {
                let x0 = p.domain().sample(&mut rng);
                let config = SolveConfig::default().with_rule(BetaRule::theorem(family));
                reports.push(solve(&p, &x0, &config)?);
            }
        }
    }
    Ok(reports)
}

fn worst_violation(reports: &[SolveReport], kind: ViolationKind) -> f64 {
    reports
        .iter()
        .flat_map(|r| r.violations_of(kind))
        .map(|v| v.magnitude)
        .fold(0.0, f64::max)
}

fn stepsize_suite() -> Result<SuiteResult> {
    let mut suite = Suite::new("stepsize");
    let reports = reference_runs(&BetaFamily::ALL)?;
    let mut identity = 0.0_f64;
    for r in &reports {
        for rec in &r.records {
            if let (Some(rho), Some(next)) = (rec.rho, rec.psi_next_d) {
                identity = identity.max((next - rho * rec.psi_d).abs() / rec.psi_d.abs().max(1.0));
            }
        }
    }
    suite.at_most("rho identity", identity, 1e-10);
    suite.at_most(
        "rho band (lipschitz)",
        worst_violation(&reports, ViolationKind::RhoBandLipschitz),
        0.0,
    );
    suite.at_most(
        "rho band (convexity)",
        worst_violation(&reports, ViolationKind::RhoBandConvexity),
        0.0,
    );
    suite.at_most(
        "strong convexity growth",
        worst_violation(&reports, ViolationKind::StrongConvexityGrowth),
        0.0,
    );
    Ok(suite.finish())
}

fn directions_suite() -> Result<SuiteResult> {
    let mut suite = Suite::new("directions");
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    // With one objective the vector formulas reduce to the scalar ones.
    let mut worst = [0.0_f64; 5];
    for _ in 0..200 {
        let n = rng.gen_range(1..=6);
        let (g_prev, g, d_prev) = (random_vec(&mut rng, n), random_vec(&mut rng, n), random_vec(&mut rng, n));
        let jp = Jacobian::from_rows(vec![g_prev.clone()])?;
        let jk = Jacobian::from_rows(vec![g.clone()])?;
        let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
        let inputs = BetaInputs {
            psi_k_vk: psi(&jk, &neg(&g))?.value,
            psi_km1_vkm1: psi(&jp, &neg(&g_prev))?.value,
            psi_km1_dkm1: psi(&jp, &d_prev)?.value,
            psi_k_dkm1: psi(&jk, &d_prev)?.value,
            psi_km1_vk: psi(&jp, &neg(&g))?.value,
        };
        let y = axpy(&g, -1.0, &g_prev);
        let classical = [
            norm_sq(&g) / norm_sq(&g_prev),
            -norm_sq(&g) / dot(&g_prev, &d_prev),
            norm_sq(&g) / dot(&d_prev, &y),
            dot(&g, &y) / norm_sq(&g_prev),
            dot(&g, &y) / dot(&d_prev, &y),
        ];
        for (i, family) in BetaFamily::ALL.into_iter().enumerate() {
            let raw = compute_beta(&BetaRule::plain(family), &inputs).raw;
            if raw.is_nan() {
                continue;
            }
            worst[i] = worst[i].max((raw - classical[i]).abs() / classical[i].abs().max(1.0));
        }
    }
    for (family, w) in BetaFamily::ALL.into_iter().zip(worst) {
        suite.at_most(format!("scalar {family} reduction"), w, 1e-10);
    }

    let reports = reference_runs(&[BetaFamily::Fr, BetaFamily::Cd, BetaFamily::Dy])?;
    suite.at_most("FR cap", worst_violation(&reports, ViolationKind::FrCap), 0.0);
    suite.at_most(
        "CD descent bound",
        worst_violation(&reports, ViolationKind::CdDescentBound),
        0.0,
    );
    suite.at_most(
        "DY descent bound",
        worst_violation(&reports, ViolationKind::DyDescentBound)
            .max(worst_violation(&reports, ViolationKind::DyDenominator)),
        0.0,
    );
    Ok(suite.finish())
}

fn solver_suite() -> Result<SuiteResult> {
    let mut suite = Suite::new("solver");
    let reports = reference_runs(&BetaFamily::ALL)?;
    suite.at_most(
        "monotone decrease",
        worst_violation(&reports, ViolationKind::MonotoneDecrease),
        0.0,
    );
    suite.at_most("kkt identity", worst_violation(&reports, ViolationKind::KktIdentity), 0.0);
    let mut drops = 0.0_f64;
    let mut unconverged = 0.0_f64;
    for r in &reports {
        if !zoutendijk_diag(&r.records, 10)?.nondecreasing {
            drops += 1.0;
        }
        if r.status != Status::Converged {
            unconverged += 1.0;
        }
    }
    suite.at_most("zoutendijk monotone", drops, 0.0);
    suite.at_most("unconverged runs", unconverged, 0.0);
    Ok(suite.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_scope_is_rejected() {
        assert!(run_checks("nope", &[]).is_err());
    }

    #[test]
    fn subproblem_scope_runs_only_that_suite() {
        let out = run_checks("subproblem", &[]).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].suite, "subproblem");
        assert!(out[0].passed(), "{:?}", out[0]);
    }

    #[test]
    fn broken_fixture_fails_problem_suite() {
        let out = run_checks("problem", &[broken_gradient_fixture()]).unwrap();
        assert!(!out[0].passed());
        let bad: Vec<_> = out[0].checks.iter().filter(|c| !c.passed).collect();
        assert_eq!(bad.len(), 1);
        assert!(bad[0].name.contains("broken-gradient"));
    }
}
