use std::path::Path;
use std::time::Instant;

use mocg::checks::{broken_gradient_fixture, run_checks};
use mocg::{multistart_pareto, solve, BetaRule, SolveReport, Status, StepsizeMode};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, EXIT_CHECK_FAILED, EXIT_CONVERGED, EXIT_MAX_ITERS, EXIT_RUNTIME};
use crate::output;

pub struct Ctx<'a> {
    pub out: &'a Path,
    pub quiet: bool,
}

impl Ctx<'_> {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }
}

fn status_exit(status: Status) -> u8 {
    match status {
        Status::Converged => EXIT_CONVERGED,
        Status::MaxIters => EXIT_MAX_ITERS,
        Status::Error => EXIT_RUNTIME,
    }
}

fn describe(report: &SolveReport) -> String {
    let norm_v = report
        .final_norm_v
        .map_or_else(|| "n/a".to_string(), |v| format!("{v:.3e}"));
    let mut s = format!(
        "{:?} after {} iterations, ||v|| = {norm_v}, restarts = {}, invariant violations = {}",
        report.status,
        report.iterations,
        report.restarts,
        report.invariant_violations.len()
    );
    if let Some(m) = &report.message {
        s.push_str(&format!(" ({m})"));
    }
    s
}

pub fn solve_cmd(cfg: &RunConfig, ctx: &Ctx) -> Result<u8, CliError> {
    let x0 = cfg.x0();
    let report = solve(&cfg.problem, &x0, &cfg.solve)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let out = &cfg.file.output;
    let report_path = output::write(ctx.out, &out.report, &output::json(&report)?)?;
    let csv = output::trajectory_csv(&report, cfg.problem.n(), cfg.problem.m())?;
    let csv_path = output::write(ctx.out, &out.trajectory, &csv)?;
    ctx.say(describe(&report));
    ctx.say(format!("report: {}\ntrajectory: {}", report_path.display(), csv_path.display()));
    Ok(status_exit(report.status))
}

#[derive(Debug, Serialize)]
struct ModeSummary {
    mode: StepsizeMode,
    status: Status,
    iterations: usize,
    final_norm_v: Option<f64>,
    objective_evals: usize,
    jacobian_evals: usize,
    stepsize_objective_evals: usize,
    stepsize_jacobian_evals: usize,
    restarts: usize,
    message: Option<String>,
}

impl From<&SolveReport> for ModeSummary {
    fn from(r: &SolveReport) -> Self {
        Self {
            mode: r.stepsize_mode,
            status: r.status,
            iterations: r.iterations,
            final_norm_v: r.final_norm_v,
            objective_evals: r.func_evals + r.linesearch_func_evals,
            jacobian_evals: r.jac_evals + r.linesearch_jac_evals,
            stepsize_objective_evals: r.linesearch_func_evals,
            stepsize_jacobian_evals: r.linesearch_jac_evals,
            restarts: r.restarts,
            message: r.message.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
struct Comparison {
    problem: String,
    dimension: usize,
    x0: Vec<f64>,
    beta: BetaRule,
    tolerance: f64,
    fixed: ModeSummary,
    baseline: ModeSummary,
}

/// Fixed stepsize against the configured line-search baseline from the same
/// start. The exit code follows the fixed-stepsize run.
pub fn compare_cmd(cfg: &RunConfig, ctx: &Ctx) -> Result<u8, CliError> {
    let x0 = cfg.x0();
    let fixed = solve(&cfg.problem, &x0, &cfg.with_mode(StepsizeMode::Fixed))?;
    let baseline = solve(&cfg.problem, &x0, &cfg.with_mode(cfg.file.baseline))?;
    let table = Comparison {
        problem: cfg.problem.name().to_string(),
        dimension: cfg.problem.n(),
        x0,
        beta: fixed.beta_rule,
        tolerance: cfg.solve.tolerance,
        fixed: (&fixed).into(),
        baseline: (&baseline).into(),
    };
    let path = output::write(ctx.out, &cfg.file.output.comparison, &output::json(&table)?)?;
    for (name, r) in [("fixed", &fixed), ("baseline", &baseline)] {
        ctx.say(format!(
            "{name:>8}: {}, objective evals {} ({} for stepsizes)",
            describe(r),
            r.func_evals + r.linesearch_func_evals,
            r.linesearch_func_evals
        ));
    }
    ctx.say(format!("comparison: {}", path.display()));
    Ok(status_exit(fixed.status))
}

#[derive(Debug, Serialize)]
struct FrontSummary {
    problem: String,
    dimension: usize,
    starts: usize,
    seed: u64,
    converged: usize,
    errors: usize,
    nondominated: usize,
    restarts: usize,
    runtime_seconds: f64,
}

/// Exit 0 if at least one start converged, 1 otherwise.
pub fn pareto_cmd(cfg: &RunConfig, ctx: &Ctx) -> Result<u8, CliError> {
    let started = Instant::now();
    let front = multistart_pareto(&cfg.problem, cfg.file.starts, cfg.file.seed, &cfg.solve)?;
    let runtime_seconds = started.elapsed().as_secs_f64();
    for run in front.runs.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "warning: start {} ended with {:?}: {}",
            run.start,
            run.status,
            run.error.as_deref().unwrap_or_default()
        );
    }
    let summary = FrontSummary {
        problem: cfg.problem.name().to_string(),
        dimension: cfg.problem.n(),
        starts: cfg.file.starts,
        seed: cfg.file.seed,
        converged: front.converged(),
        errors: front.runs.iter().filter(|r| r.status == Status::Error).count(),
        nondominated: front.nondominated.len(),
        restarts: front.restarts(),
        runtime_seconds,
    };
    let out = &cfg.file.output;
    let csv = output::front_csv(&front, cfg.problem.n(), cfg.problem.m())?;
    let front_path = output::write(ctx.out, &out.front, &csv)?;
    let summary_path = output::write(ctx.out, &out.summary, &output::json(&summary)?)?;
    ctx.say(format!(
        "{}/{} starts converged, {} nondominated, {:.2}s",
        summary.converged, summary.starts, summary.nondominated, runtime_seconds
    ));
    ctx.say(format!("front: {}\nsummary: {}", front_path.display(), summary_path.display()));
    Ok(if summary.converged > 0 { EXIT_CONVERGED } else { EXIT_RUNTIME })
}

pub const FIXTURES: [&str; 1] = ["broken-gradient"];

pub fn check_cmd(scope: &str, fixtures: &[String], ctx: &Ctx) -> Result<u8, CliError> {
    let mut problems = Vec::new();
    for f in fixtures {
        match f.as_str() {
            "broken-gradient" => problems.push(broken_gradient_fixture()),
            other => {
                return Err(CliError::Usage(format!(
                    "unknown fixture `{other}`; expected one of {}",
                    FIXTURES.join(", ")
                )))
            }
        }
    }
    let results = run_checks(scope, &problems).map_err(|e| match e {
        mocg::Error::InvalidParameter(msg) => CliError::Usage(msg),
        e => CliError::Solver(e),
    })?;
    let mut all = true;
    for suite in &results {
        let tag = if suite.passed() { "PASS" } else { "FAIL" };
        all &= suite.passed();
        ctx.say(format!(
            "[{tag}] {} (worst magnitude / tolerance = {:.3e})",
            suite.suite,
            suite.worst_ratio()
        ));
        for c in &suite.checks {
            if !ctx.quiet || !c.passed {
                println!(
                    "    {} {}: worst {:.3e}, tolerance {:.1e}",
                    if c.passed { "ok  " } else { "FAIL" },
                    c.name,
                    c.worst,
                    c.tolerance
                );
            }
        }
    }
    Ok(if all { EXIT_CONVERGED } else { EXIT_CHECK_FAILED })
}
