//! The iteration `x^{k+1} = x^k + t_k d^k` with full diagnostics.
//!
//! Every iteration is checked against the identities and bounds the fixed
//! stepsize is supposed to guarantee; failures are collected in
//! [`SolveReport::invariant_violations`] rather than aborting the run.

use serde::{Deserialize, Serialize};

use crate::directions::{
    compute_beta, descent_guard, dy_scale_bound, update_direction, BetaFamily, BetaInputs, BetaRule,
    Guard, GuardPolicy, RestartCause,
};
use crate::error::{Error, Result};
use crate::linalg::{axpy, norm, norm_sq, sub};
use crate::problem::{Jacobian, Problem};
use crate::stepsize::{
    estimate_lipschitz, fixed_stepsize, rho_diagnostic, wolfe_search, MetricProvider, StepsizeRule,
    WolfeParams, DEFAULT_RHO1, DEFAULT_RHO2, DEFAULT_SAFETY,
};
use crate::subproblem::{psi_value, solve_subproblem, SubproblemSolution, INVARIANT_TOL};

/// Relative tolerance of the `ψ(x^{k+1}, d^k) = ρ_k ψ(x^k, d^k)` check.
pub const KKT_TOL: f64 = 1e-10;
/// Absolute slack allowed per component in the monotone decrease check.
pub const MONOTONE_TOL: f64 = 1e-12;
/// Slack on the `ρ_k` bands.
pub const BAND_TOL: f64 = 1e-8;
/// Relative tolerance of the CD and DY descent bounds.
pub const DESCENT_BOUND_TOL: f64 = 1e-10;

const LIPSCHITZ_PAIRS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepsizeMode {
    #[default]
    Fixed,
    Wolfe,
    StrongWolfe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub beta_rule: BetaRule,
    pub metric: MetricProvider,
    /// `δ = safety · a_min / L`
    pub safety: f64,
    /// Stop once `‖v(x^k)‖ <= tolerance`.
    pub tolerance: f64,
    pub max_iters: usize,
    pub stepsize_mode: StepsizeMode,
    /// Keep every `record_every`-th iteration record (checks still run on all).
    pub record_every: usize,
    pub rho1: f64,
    pub rho2: f64,
    pub guard: GuardPolicy,
    /// Seed for the Lipschitz estimate when the problem declares none.
    pub lipschitz_seed: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            beta_rule: BetaRule::theorem(BetaFamily::Fr),
            metric: MetricProvider::Identity,
            safety: DEFAULT_SAFETY,
            tolerance: 1e-6,
            max_iters: 2000,
            stepsize_mode: StepsizeMode::Fixed,
            record_every: 1,
            rho1: DEFAULT_RHO1,
            rho2: DEFAULT_RHO2,
            guard: GuardPolicy::Strict,
            lipschitz_seed: 0,
        }
    }
}

impl SolveConfig {
    pub fn with_rule(mut self, rule: BetaRule) -> Self {
        self.beta_rule = rule;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.beta_rule.validate()?;
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if self.record_every == 0 {
            return Err(Error::invalid("record_every must be at least 1"));
        }
        if !(self.safety > 0.0 && self.safety < 1.0) {
            return Err(Error::invalid(format!(
                "safety must lie in (0, 1), got {}",
                self.safety
            )));
        }
        WolfeParams::new(self.rho1, self.rho2, false)?;
        if let MetricProvider::Diagonal { entries } = &self.metric {
            MetricProvider::diagonal(entries.clone())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Converged,
    MaxIters,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    /// `|ψ(x, v) + ‖v‖²|` above tolerance.
    KktIdentity,
    /// `ψ(x^{k+1}, d^k) ≠ ρ_k ψ(x^k, d^k)`.
    RhoIdentity,
    /// Some `F_i` increased.
    MonotoneDecrease,
    /// `ρ_k ∉ [1 - Lδ/a_min, 1 + Lδ/a_min]`.
    RhoBandLipschitz,
    /// `ρ_k ∉ (0, 1 - μδ/a_max]`.
    RhoBandConvexity,
    /// `ψ(x^{k+1}, s) - ψ(x^k, s) < μ‖s‖²`.
    StrongConvexityGrowth,
    /// CD: `ψ(x^k, d^k) > (1 + ρ_{k-1}) ψ(x^k, v^k)`.
    CdDescentBound,
    /// DY: `ψ(x^k, d^k) > ψ(x^k, v^k) / (1 + c)`.
    DyDescentBound,
    /// DY: `ψ(x^k, d^{k-1}) - ψ(x^{k-1}, d^{k-1}) <= 0`.
    DyDenominator,
    /// `|β_k| > ξ β_k^FR`.
    FrCap,
    /// The Zoutendijk partial sum decreased.
    ZoutendijkMonotone,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub iteration: usize,
    pub kind: ViolationKind,
    /// Amount by which the bound was exceeded.
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub norm_v: f64,
    pub theta: f64,
    /// `ψ(x^k, v(x^k))`
    pub psi_v: f64,
    pub d: Vec<f64>,
    /// `ψ(x^k, d^k)`
    pub psi_d: f64,
    /// `None` at `k = 0`.
    pub beta: Option<f64>,
    /// `None` on the terminal record of a converged run.
    pub t: Option<f64>,
    pub rho: Option<f64>,
    pub eta: Option<f64>,
    /// `ψ(x^{k+1}, d^k)`
    pub psi_next_d: Option<f64>,
    /// `|ψ(x^k, d^k)| / ‖d^k‖`
    pub tau: f64,
    /// `ψ²(x^k, d^k) / ‖d^k‖²`
    pub zoutendijk_term: f64,
    pub zoutendijk_partial: f64,
    /// `Σ ψ²(x^j, v(x^j)) / ‖d^j‖²`
    pub psi_v_partial: f64,
    pub restarted: bool,
    pub restart_cause: Option<RestartCause>,
    pub func_evals: usize,
    pub jac_evals: usize,
    pub linesearch_func_evals: usize,
    pub linesearch_jac_evals: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub problem: String,
    pub stepsize_mode: StepsizeMode,
    pub beta_rule: BetaRule,
    pub status: Status,
    pub message: Option<String>,
    pub final_x: Vec<f64>,
    pub final_objectives: Vec<f64>,
    pub final_norm_v: Option<f64>,
    /// Steps taken.
    pub iterations: usize,
    pub restarts: usize,
    pub delta: f64,
    pub lipschitz: f64,
    pub lipschitz_estimated: bool,
    pub func_evals: usize,
    pub jac_evals: usize,
    /// Objective evaluations spent choosing stepsizes (zero in fixed mode).
    pub linesearch_func_evals: usize,
    pub linesearch_jac_evals: usize,
    pub warnings: Vec<String>,
    pub invariant_violations: Vec<Violation>,
    pub records: Vec<IterationRecord>,
}

impl SolveReport {
    pub fn violations_of(&self, kind: ViolationKind) -> impl Iterator<Item = &Violation> {
        self.invariant_violations.iter().filter(move |v| v.kind == kind)
    }

    /// Smallest `‖v(x^k)‖` over the kept records and the final iterate.
    pub fn min_norm_v(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.norm_v)
            .chain(self.final_norm_v)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Resolves a DY rule without `η` to the value used at solve time.
fn resolve_rule(
    rule: BetaRule,
    problem: &Problem,
    delta: f64,
    metric: &MetricProvider,
    warnings: &mut Vec<String>,
) -> BetaRule {
    let mut rule = rule;
    if rule.family != BetaFamily::Dy {
        return rule;
    }
    let bound = problem
        .convexity()
        .map(|mu| dy_scale_bound(mu, delta, metric.a_max()));
    match (rule.dy_scale_eta, bound) {
        (None, Some(b)) => rule.dy_scale_eta = Some(0.9 * b),
        (None, None) => {
            rule.dy_scale_eta = Some(0.0);
            warnings.push(format!(
                "problem `{}` declares no convexity constant; DY scale η set to 0",
                problem.name()
            ));
        }
        (Some(eta), Some(b)) if eta >= b => warnings.push(format!(
            "DY scale η = {eta} is outside [0, {b}) required for the convergence guarantee"
        )),
        (Some(_), None) => warnings.push(
            "DY scale η given but no convexity constant is declared; no convergence guarantee".into(),
        ),
        _ => {}
    }
    rule
}

type Direction = (Vec<f64>, f64, Option<f64>, Option<RestartCause>);

struct Previous {
    jac: Jacobian,
    psi_v: f64,
    d: Vec<f64>,
    psi_d: f64,
    rho: Option<f64>,
}

#[derive(Default)]
struct Counters {
    func: usize,
    jac: usize,
    ls_func: usize,
    ls_jac: usize,
}

struct Run<'a> {
    problem: &'a Problem,
    config: &'a SolveConfig,
    rule: BetaRule,
    step: StepsizeRule,
    wolfe: Option<WolfeParams>,
    lipschitz_declared: bool,
    counters: Counters,
    violations: Vec<Violation>,
    records: Vec<IterationRecord>,
    restarts: usize,
    zoutendijk: f64,
    psi_v_sum: f64,
}

impl Run<'_> {
    fn flag(&mut self, iteration: usize, kind: ViolationKind, magnitude: f64) {
        self.violations.push(Violation {
            iteration,
            kind,
            magnitude,
        });
    }

    fn keep(&mut self, record: IterationRecord, force: bool) {
        if force || record.k.is_multiple_of(self.config.record_every) {
            self.records.push(record);
        }
    }

    fn check_kkt(&mut self, k: usize, sol: &SubproblemSolution) {
        let v_sq = norm_sq(&sol.v);
        let err = (sol.psi_v + v_sq)
            .abs()
            .max((sol.theta + 0.5 * v_sq).abs());
        if err > INVARIANT_TOL {
            self.flag(k, ViolationKind::KktIdentity, err);
        }
    }

    /// Forms `d^k`, applying restarts. Returns `(d, ψ(x^k, d^k), β, restart cause)`.
    fn direction(
        &mut self,
        k: usize,
        sol: &SubproblemSolution,
        jac: &Jacobian,
        prev: Option<&Previous>,
    ) -> Result<Direction> {
        let Some(prev) = prev else {
            let d = update_direction(&sol.v, 0.0, None, 0)?;
            return Ok((d, sol.psi_v, None, None));
        };
        let inputs = BetaInputs {
            psi_k_vk: sol.psi_v,
            psi_km1_vkm1: prev.psi_v,
            psi_km1_dkm1: prev.psi_d,
            psi_k_dkm1: psi_value(jac, &prev.d),
            psi_km1_vk: psi_value(&prev.jac, &sol.v),
        };
        let beta = compute_beta(&self.rule, &inputs);
        let mut cause = beta.restart;
        let mut value = beta.value;
        let mut d = update_direction(&sol.v, value, Some(&prev.d), k)?;
        let mut psi_d = psi_value(jac, &d);
        if sol.psi_v < 0.0
            && cause.is_none()
            && descent_guard(psi_d, sol.psi_v, self.config.guard) == Guard::Restart
        {
            cause = Some(RestartCause::DescentGuard);
            value = 0.0;
            d = sol.v.clone();
            psi_d = sol.psi_v;
        }
        if cause.is_some() {
            self.restarts += 1;
        }

        if cause.is_none() {
            if let Some(xi) = self.rule.fr_cap_xi {
                let excess = value.abs() - xi * beta.fr.abs();
                if excess > 1e-12 * beta.fr.abs().max(1.0) {
                    self.flag(k, ViolationKind::FrCap, excess);
                }
            }
        }
        if self.config.stepsize_mode == StepsizeMode::Fixed {
            self.check_descent_bounds(k, sol, &inputs, psi_d, value, beta.raw, cause, prev);
        }
        Ok((d, psi_d, Some(value), cause))
    }

    #[allow(clippy::too_many_arguments)]
    fn check_descent_bounds(
        &mut self,
        k: usize,
        sol: &SubproblemSolution,
        inputs: &BetaInputs,
        psi_d: f64,
        beta: f64,
        raw: f64,
        cause: Option<RestartCause>,
        prev: &Previous,
    ) {
        match self.rule.family {
            BetaFamily::Cd if cause.is_none() && beta == raw => {
                if let Some(rho) = prev.rho {
                    let rhs = (1.0 + rho) * sol.psi_v;
                    let excess = psi_d - rhs;
                    if excess > DESCENT_BOUND_TOL * rhs.abs().max(1.0) {
                        self.flag(k, ViolationKind::CdDescentBound, excess);
                    }
                }
            }
            BetaFamily::Dy => {
                let Some(mu) = self.problem.convexity() else {
                    return;
                };
                let c = 1.0 - mu * self.step.delta / self.config.metric.a_max();
                if sol.psi_v < 0.0 {
                    let rhs = sol.psi_v / (1.0 + c);
                    let excess = psi_d - rhs;
                    if excess > DESCENT_BOUND_TOL * rhs.abs().max(1.0) {
                        self.flag(k, ViolationKind::DyDescentBound, excess);
                    }
                }
                if prev.psi_d < 0.0 {
                    let den = inputs.psi_k_dkm1 - inputs.psi_km1_dkm1;
                    if !(den > 0.0) {
                        self.flag(k, ViolationKind::DyDenominator, -den);
                    }
                }
            }
            _ => {}
        }
    }

    /// Checks run after a fixed step, once `x^{k+1}` has been evaluated.
    #[allow(clippy::too_many_arguments)]
    fn check_step(
        &mut self,
        k: usize,
        x: &[f64],
        f: &[f64],
        jac: &Jacobian,
        x_next: &[f64],
        f_next: &[f64],
        jac_next: &Jacobian,
        d: &[f64],
        t: f64,
    ) -> Result<(f64, f64, f64)> {
        let metric = &self.config.metric;
        let delta = self.step.delta;
        let diag = rho_diagnostic(jac, jac_next, x, x_next, d, metric, delta, t)?;

        let residual = diag.identity_residual();
        let allowed = KKT_TOL * diag.psi_prev.abs().max(1.0);
        if residual > allowed {
            self.flag(k, ViolationKind::RhoIdentity, residual);
        }

        let rise = f_next
            .iter()
            .zip(f)
            .map(|(a, b)| a - b)
            .fold(f64::NEG_INFINITY, f64::max);
        if rise > MONOTONE_TOL {
            self.flag(k, ViolationKind::MonotoneDecrease, rise);
        }

        if self.lipschitz_declared && t != 0.0 {
            let r = self.step.ratio;
            let excess = (diag.rho - (1.0 + r)).max((1.0 - r) - diag.rho);
            if excess > BAND_TOL {
                self.flag(k, ViolationKind::RhoBandLipschitz, excess);
            }
        }
        if let Some(mu) = self.problem.convexity() {
            if t != 0.0 {
                let upper = 1.0 - mu * delta / metric.a_max();
                let excess = (diag.rho - upper).max(-diag.rho);
                if excess > BAND_TOL {
                    self.flag(k, ViolationKind::RhoBandConvexity, excess);
                }
                let s = sub(x_next, x);
                let s_sq = norm_sq(&s);
                let (hi, lo) = (psi_value(jac_next, &s), psi_value(jac, &s));
                let shortfall = mu * s_sq - (hi - lo);
                let slack = 1e-8 * mu * s_sq + 1e-14 * (hi.abs() + lo.abs());
                if shortfall > slack {
                    self.flag(k, ViolationKind::StrongConvexityGrowth, shortfall);
                }
            }
        }
        Ok((diag.rho, diag.eta, diag.psi_next))
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &mut self,
        k: usize,
        x: &[f64],
        f: &[f64],
        sol: &SubproblemSolution,
        d: &[f64],
        psi_d: f64,
        beta: Option<f64>,
        cause: Option<RestartCause>,
    ) -> IterationRecord {
        let d_sq = norm_sq(d);
        let (term, pv) = if d_sq > 0.0 {
            (psi_d * psi_d / d_sq, sol.psi_v * sol.psi_v / d_sq)
        } else {
            (0.0, 0.0)
        };
        let before = self.zoutendijk;
        self.zoutendijk += term;
        self.psi_v_sum += pv;
        if self.zoutendijk < before {
            self.flag(k, ViolationKind::ZoutendijkMonotone, before - self.zoutendijk);
        }
        IterationRecord {
            k,
            x: x.to_vec(),
            f: f.to_vec(),
            norm_v: sol.norm_v(),
            theta: sol.theta,
            psi_v: sol.psi_v,
            d: d.to_vec(),
            psi_d,
            beta,
            t: None,
            rho: None,
            eta: None,
            psi_next_d: None,
            tau: if d_sq > 0.0 { psi_d.abs() / d_sq.sqrt() } else { 0.0 },
            zoutendijk_term: term,
            zoutendijk_partial: self.zoutendijk,
            psi_v_partial: self.psi_v_sum,
            restarted: cause.is_some(),
            restart_cause: cause,
            func_evals: self.counters.func,
            jac_evals: self.counters.jac,
            linesearch_func_evals: self.counters.ls_func,
            linesearch_jac_evals: self.counters.ls_jac,
        }
    }
}

/// Runs the conjugate gradient iteration from `x0`.
///
/// Invalid configurations and starting points are returned as errors;
/// failures after the first evaluation end the run with [`Status::Error`]
/// and keep the records gathered so far.
pub fn solve(problem: &Problem, x0: &[f64], config: &SolveConfig) -> Result<SolveReport> {
    config.validate()?;
    if x0.len() != problem.n() {
        return Err(Error::Dimension {
            expected: problem.n(),
            actual: x0.len(),
        });
    }
    config.metric.check_dim(problem.n())?;
    if !problem.domain().contains(x0) {
        return Err(Error::invalid("starting point lies outside the problem domain"));
    }

    let mut warnings = Vec::new();
    let (lipschitz, estimated) = match problem.lipschitz() {
        Some(l) => (l, false),
        None => {
            let l = estimate_lipschitz(problem, LIPSCHITZ_PAIRS, config.lipschitz_seed)?;
            warnings.push(format!("Lipschitz constant estimated by sampling: L = {l}"));
            (l, true)
        }
    };
    let step = StepsizeRule::new(&config.metric, lipschitz, config.safety)?;
    let rule = resolve_rule(config.beta_rule, problem, step.delta, &config.metric, &mut warnings);
    let wolfe = match config.stepsize_mode {
        StepsizeMode::Fixed => None,
        StepsizeMode::Wolfe => Some(WolfeParams::new(config.rho1, config.rho2, false)?),
        StepsizeMode::StrongWolfe => Some(WolfeParams::new(config.rho1, config.rho2, true)?),
    };

    let mut run = Run {
        problem,
        config,
        rule,
        step,
        wolfe,
        lipschitz_declared: !estimated,
        counters: Counters::default(),
        violations: Vec::new(),
        records: Vec::new(),
        restarts: 0,
        zoutendijk: 0.0,
        psi_v_sum: 0.0,
    };

    let mut x = x0.to_vec();
    let mut status = Status::MaxIters;
    let mut message = None;
    let mut final_norm_v = None;
    let mut iterations = 0;

    let evaluated = problem.evaluate(&x).and_then(|f| Ok((f, problem.jacobian(&x)?)));
    run.counters.func += 1;
    run.counters.jac += 1;
    let (mut f, mut jac) = match evaluated {
        Ok(pair) => pair,
        Err(e) => {
            return Ok(finish(run, x, Vec::new(), None, Status::Error, Some(e.to_string()), 0, warnings));
        }
    };

    let mut prev: Option<Previous> = None;
    for k in 0..=config.max_iters {
        let sol = match solve_subproblem(&jac) {
            Ok(s) => s,
            Err(e) => {
                status = Status::Error;
                message = Some(e.to_string());
                break;
            }
        };
        run.check_kkt(k, &sol);
        final_norm_v = Some(sol.norm_v());

        let critical = sol.norm_v() <= config.tolerance;
        if !critical && k == config.max_iters {
            break;
        }

        let (d, psi_d, beta, cause) = match run.direction(k, &sol, &jac, prev.as_ref()) {
            Ok(out) => out,
            Err(e) => {
                status = Status::Error;
                message = Some(e.to_string());
                break;
            }
        };
        let mut record = run.record(k, &x, &f, &sol, &d, psi_d, beta, cause);
        if critical {
            run.keep(record, true);
            status = Status::Converged;
            break;
        }

        let stepped = take_step(&mut run, &x, &f, &jac, &d, psi_d);
        let (t, x_next, f_next, jac_next) = match stepped {
            Ok(s) => s,
            Err(e) => {
                run.keep(record, true);
                status = Status::Error;
                message = Some(e.to_string());
                break;
            }
        };
        record.t = Some(t);
        iterations += 1;

        if config.stepsize_mode == StepsizeMode::Fixed {
            match run.check_step(k, &x, &f, &jac, &x_next, &f_next, &jac_next, &d, t) {
                Ok((rho, eta, psi_next)) => {
                    record.rho = Some(rho);
                    record.eta = Some(eta);
                    record.psi_next_d = Some(psi_next);
                }
                Err(e) => {
                    run.keep(record, true);
                    status = Status::Error;
                    message = Some(e.to_string());
                    x = x_next;
                    break;
                }
            }
        } else {
            record.psi_next_d = Some(psi_value(&jac_next, &d));
        }
        record.func_evals = run.counters.func;
        record.jac_evals = run.counters.jac;
        record.linesearch_func_evals = run.counters.ls_func;
        record.linesearch_jac_evals = run.counters.ls_jac;
        let last = k + 1 == config.max_iters;
        let rho = record.rho;
        run.keep(record, last);

        prev = Some(Previous {
            jac: std::mem::replace(&mut jac, jac_next),
            psi_v: sol.psi_v,
            d,
            psi_d,
            rho,
        });
        x = x_next;
        f = f_next;
    }
    Ok(finish(run, x, f, final_norm_v, status, message, iterations, warnings))
}

type Step = (f64, Vec<f64>, Vec<f64>, Jacobian);

fn take_step(run: &mut Run<'_>, x: &[f64], f: &[f64], jac: &Jacobian, d: &[f64], psi_d: f64) -> Result<Step> {
    let problem = run.problem;
    if let Some(params) = run.wolfe {
        let step = wolfe_search(problem, x, f, jac, d, &params);
        let step = match step {
            Ok(s) => s,
            Err(e) => {
                if let Error::LineSearch { evaluations, .. } = &e {
                    run.counters.ls_func += *evaluations;
                }
                return Err(e);
            }
        };
        run.counters.ls_func += step.func_evals;
        run.counters.ls_jac += step.jac_evals;
        let x_next = axpy(x, step.t, d);
        check_domain(problem, &x_next)?;
        return Ok((step.t, x_next, step.values, step.jacobian));
    }

    let t = fixed_stepsize(psi_d, d, &run.config.metric, run.step.delta)?;
    if !(t > 0.0) {
        return Err(Error::Contract(format!(
            "non-descent direction (ψ(x, d) = {psi_d:e}) produced stepsize {t:e}"
        )));
    }
    let x_next = axpy(x, t, d);
    check_domain(problem, &x_next)?;
    let f_next = problem.evaluate(&x_next);
    run.counters.func += 1;
    let f_next = f_next?;
    let jac_next = problem.jacobian(&x_next);
    run.counters.jac += 1;
    Ok((t, x_next, f_next, jac_next?))
}

fn check_domain(problem: &Problem, x: &[f64]) -> Result<()> {
    if problem.domain().contains(x) {
        Ok(())
    } else {
        Err(Error::Contract(format!(
            "iterate left the problem domain (‖x‖ = {:e})",
            norm(x)
        )))
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    run: Run<'_>,
    x: Vec<f64>,
    f: Vec<f64>,
    final_norm_v: Option<f64>,
    status: Status,
    message: Option<String>,
    iterations: usize,
    warnings: Vec<String>,
) -> SolveReport {
    SolveReport {
        problem: run.problem.name().to_string(),
        stepsize_mode: run.config.stepsize_mode,
        beta_rule: run.rule,
        status,
        message,
        final_x: x,
        final_objectives: f,
        final_norm_v,
        iterations,
        restarts: run.restarts,
        delta: run.step.delta,
        lipschitz: run.step.lipschitz,
        lipschitz_estimated: !run.lipschitz_declared,
        func_evals: run.counters.func,
        jac_evals: run.counters.jac,
        linesearch_func_evals: run.counters.ls_func,
        linesearch_jac_evals: run.counters.ls_jac,
        warnings,
        invariant_violations: run.violations,
        records: run.records,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::builtin_problem;

    #[test]
    fn quad_pair_fr_converges_to_segment() {
        let p = builtin_problem("quad-pair", 2).unwrap();
        let report = solve(&p, &[0.0, 1.0], &SolveConfig::default()).unwrap();
        assert_eq!(report.status, Status::Converged);
        assert!(report.final_x[1].abs() <= 1e-6);
        assert!(report.final_x[0].abs() <= 1.0 + 1e-6);
        assert!(report.invariant_violations.is_empty(), "{:?}", report.invariant_violations);
        assert!(report.records.last().unwrap().norm_v <= 1e-6);
    }

    #[test]
    fn critical_start_stops_immediately() {
        let p = builtin_problem("quad-pair", 2).unwrap();
        let report = solve(&p, &[0.0, 0.0], &SolveConfig::default()).unwrap();
        assert_eq!(report.status, Status::Converged);
        assert_eq!(report.iterations, 0);
        assert_eq!(report.records.len(), 1);
        assert_eq!(report.records[0].t, None);
        assert_eq!(report.records[0].zoutendijk_partial, 0.0);
    }

    #[test]
    fn max_iters_semantics() {
        let p = builtin_problem("quad-pair", 2).unwrap();
        let config = SolveConfig {
            max_iters: 1,
            ..SolveConfig::default()
        };
        let report = solve(&p, &[0.0, 1.0], &config).unwrap();
        assert_eq!(report.status, Status::MaxIters);
        assert_eq!(report.records.len(), 1);
        assert_eq!(report.iterations, 1);

        let bad = SolveConfig {
            max_iters: 0,
            ..SolveConfig::default()
        };
        assert!(solve(&p, &[0.0, 1.0], &bad).is_err());
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let p = builtin_problem("quad-pair", 2).unwrap();
        assert!(solve(&p, &[0.0], &SolveConfig::default()).is_err());
        assert!(solve(&p, &[50.0, 0.0], &SolveConfig::default()).is_err());
        let config = SolveConfig {
            metric: MetricProvider::Diagonal { entries: vec![1.0, 2.0, 3.0] },
            ..SolveConfig::default()
        };
        assert!(solve(&p, &[0.0, 1.0], &config).is_err());
    }

    #[test]
    fn evaluation_failure_mid_run_keeps_records() {
        // F blows up once x_1 drops below 0.5
        let p = Problem::from_fns(
            "cliff",
            1,
            1,
            |x| vec![if x[0] < 0.5 { f64::NAN } else { 0.5 * x[0] * x[0] }],
            |x| vec![vec![x[0]]],
        )
        .with_lipschitz(vec![1.0]);
        let report = solve(&p, &[2.0], &SolveConfig::default()).unwrap();
        assert_eq!(report.status, Status::Error);
        assert!(report.message.unwrap().contains("not finite"));
        assert!(!report.records.is_empty());
    }

    #[test]
    fn thinning_keeps_checks_and_last_record() {
        let p = builtin_problem("jos1", 4).unwrap();
        let config = SolveConfig {
            record_every: 3,
            tolerance: 1e-10,
            ..SolveConfig::default()
        };
        let report = solve(&p, &[3.0, -1.0, 0.5, 4.0], &config).unwrap();
        assert_eq!(report.status, Status::Converged);
        assert!(report.records.iter().all(|r| r.k % 3 == 0 || r.t.is_none()));
        assert!(report.records.last().unwrap().t.is_none());
    }

    #[test]
    fn dy_eta_is_resolved_from_convexity() {
        let p = builtin_problem("quad-pair", 2).unwrap();
        let config = SolveConfig::default().with_rule(BetaRule::theorem(BetaFamily::Dy));
        let report = solve(&p, &[2.0, 3.0], &config).unwrap();
        let eta = report.beta_rule.dy_scale_eta.unwrap();
        assert!((eta - 0.9 * 0.9 / 1.1).abs() < 1e-12);

        let p = builtin_problem("softplus-pair", 2).unwrap();
        let report = solve(&p, &[2.0, 3.0], &config).unwrap();
        assert_eq!(report.beta_rule.dy_scale_eta, Some(0.0));
        assert!(!report.warnings.is_empty());
    }

    #[test]
    fn estimated_lipschitz_is_flagged() {
        let p = Problem::from_fns(
            "bowl",
            2,
            2,
            |x| vec![x[0] * x[0] + x[1] * x[1], (x[0] - 1.0).powi(2) + x[1] * x[1]],
            |x| vec![vec![2.0 * x[0], 2.0 * x[1]], vec![2.0 * (x[0] - 1.0), 2.0 * x[1]]],
        );
        let report = solve(&p, &[3.0, 3.0], &SolveConfig::default()).unwrap();
        assert!(report.lipschitz_estimated);
        assert!(report.lipschitz >= 2.0);
        assert_eq!(report.status, Status::Converged);
    }

    #[test]
    fn wolfe_mode_counts_linesearch_evaluations() {
        let p = builtin_problem("quad-pair", 2).unwrap();
        let config = SolveConfig {
            stepsize_mode: StepsizeMode::Wolfe,
            ..SolveConfig::default()
        };
        let report = solve(&p, &[4.0, 2.0], &config).unwrap();
        assert_eq!(report.status, Status::Converged);
        assert!(report.linesearch_func_evals >= report.iterations);
        assert_eq!(report.func_evals, 1);
    }

    #[test]
    fn runs_are_deterministic() {
        let p = builtin_problem("aniso-pair", 3).unwrap();
        let config = SolveConfig::default().with_rule(BetaRule::theorem(BetaFamily::Hs));
        let a = solve(&p, &[5.0, -2.0, 1.0], &config).unwrap();
        let b = solve(&p, &[5.0, -2.0, 1.0], &config).unwrap();
        assert_eq!(a, b);
    }
}
