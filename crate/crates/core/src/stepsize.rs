//! Stepsize selection.
//!
//! The fixed rule is `t_k = -δ ψ(x^k, d^k) / ‖d^k‖²_B` with a metric `B`
//! satisfying `a_min‖d‖² <= dᵀBd <= a_max‖d‖²` and `0 < δ < a_min / L`.
//! No objective value is evaluated to choose `t_k`. The Wolfe search at the
//! bottom of this module exists only as a baseline for comparison.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, norm, norm_sq, sub};
use crate::problem::{Jacobian, Problem};
use crate::subproblem::psi_value;

/// Default fraction of `a_min / L` used for `δ`.
pub const DEFAULT_SAFETY: f64 = 0.9;
/// Default sufficient decrease constant of the Wolfe baseline.
pub const DEFAULT_RHO1: f64 = 1e-4;
/// Default curvature constant of the Wolfe baseline.
pub const DEFAULT_RHO2: f64 = 0.1;
/// Trial points allowed per Wolfe search.
pub const WOLFE_BUDGET: usize = 50;

/// Constant metric `B` with certified spectral bounds.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum MetricProvider {
    #[default]
    Identity,
    Diagonal { entries: Vec<f64> },
}

impl MetricProvider {
    pub fn diagonal(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("diagonal metric needs at least one entry"));
        }
        if entries.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::invalid(
                "diagonal metric entries must be finite and positive",
            ));
        }
        Ok(MetricProvider::Diagonal { entries })
    }

    pub fn a_min(&self) -> f64 {
        match self {
            MetricProvider::Identity => 1.0,
            MetricProvider::Diagonal { entries } => entries.iter().copied().fold(f64::MAX, f64::min),
        }
    }

    pub fn a_max(&self) -> f64 {
        match self {
            MetricProvider::Identity => 1.0,
            MetricProvider::Diagonal { entries } => entries.iter().copied().fold(f64::MIN, f64::max),
        }
    }

    /// Checks that the metric fits an `n`-dimensional problem.
    pub fn check_dim(&self, n: usize) -> Result<()> {
        match self {
            MetricProvider::Diagonal { entries } if entries.len() != n => Err(Error::Dimension {
                expected: n,
                actual: entries.len(),
            }),
            _ => Ok(()),
        }
    }

    /// `‖d‖²_B = dᵀ B d`
    pub fn norm_sq(&self, d: &[f64]) -> f64 {
        match self {
            MetricProvider::Identity => norm_sq(d),
            MetricProvider::Diagonal { entries } => {
                d.iter().zip(entries).map(|(di, b)| b * di * di).sum()
            }
        }
    }
}

/// `δ = safety · a_min / L`, strictly inside `(0, a_min / L)`.
pub fn compute_delta(a_min: f64, lipschitz: f64, safety: f64) -> Result<f64> {
    if !(a_min > 0.0 && a_min.is_finite()) {
        return Err(Error::invalid(format!("a_min must be positive, got {a_min}")));
    }
    if !(lipschitz > 0.0 && lipschitz.is_finite()) {
        return Err(Error::invalid(format!(
            "Lipschitz constant must be positive, got {lipschitz}"
        )));
    }
    if !(safety > 0.0 && safety < 1.0) {
        return Err(Error::invalid(format!(
            "safety must lie in (0, 1), got {safety}"
        )));
    }
    Ok(safety * a_min / lipschitz)
}

/// `δ` together with the constants it was derived from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepsizeRule {
    pub delta: f64,
    pub safety: f64,
    pub lipschitz: f64,
    /// `L δ / a_min`, always `< 1`.
    pub ratio: f64,
}

impl StepsizeRule {
    pub fn new(metric: &MetricProvider, lipschitz: f64, safety: f64) -> Result<Self> {
        let delta = compute_delta(metric.a_min(), lipschitz, safety)?;
        Ok(Self {
            delta,
            safety,
            lipschitz,
            ratio: lipschitz * delta / metric.a_min(),
        })
    }
}

/// `t = -δ ψ(x, d) / ‖d‖²_B`
pub fn fixed_stepsize(psi_d: f64, d: &[f64], metric: &MetricProvider, delta: f64) -> Result<f64> {
    if psi_d == 0.0 {
        return Ok(0.0);
    }
    let d_sq = metric.norm_sq(d);
    if d_sq == 0.0 {
        return Err(Error::Contract(format!(
            "zero direction with nonzero ψ(x, d) = {psi_d:e}"
        )));
    }
    Ok(-delta * psi_d / d_sq)
}

/// `ρ_k` and `η_k` for one step of the fixed rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoDiagnostic {
    pub rho: f64,
    pub eta: f64,
    pub t: f64,
    /// `ψ(x^{k+1}, d^k)`
    pub psi_next: f64,
    /// `ψ(x^k, d^k)`
    pub psi_prev: f64,
}

impl RhoDiagnostic {
    /// `|ψ(x^{k+1}, d) - ρ ψ(x^k, d)|`
    pub fn identity_residual(&self) -> f64 {
        (self.psi_next - self.rho * self.psi_prev).abs()
    }
}

/// Computes `η_k = (ψ(x^{k+1}, s) - ψ(x^k, s)) / ‖s‖²` with `s = x^{k+1} - x^k`
/// (zero when `t = 0`) and `ρ_k = 1 - δ η_k ‖d‖² / ‖d‖²_B`.
#[allow(clippy::too_many_arguments)]
pub fn rho_diagnostic(
    jac_k: &Jacobian,
    jac_next: &Jacobian,
    x_k: &[f64],
    x_next: &[f64],
    d: &[f64],
    metric: &MetricProvider,
    delta: f64,
    t: f64,
) -> Result<RhoDiagnostic> {
    let n = d.len();
    for len in [x_k.len(), x_next.len(), jac_k.n(), jac_next.n()] {
        if len != n {
            return Err(Error::Dimension {
                expected: n,
                actual: len,
            });
        }
    }
    let expected = axpy(x_k, t, d);
    let scale = 1.0 + norm(x_k) + (t * norm(d)).abs();
    let mismatch = norm(&sub(&expected, x_next));
    if mismatch > 1e-12 * scale {
        return Err(Error::Contract(format!(
            "x_next differs from x_k + t d by {mismatch:e}"
        )));
    }
    let psi_prev = psi_value(jac_k, d);
    let psi_next = psi_value(jac_next, d);
    let eta = if t == 0.0 {
        0.0
    } else {
        let s = sub(x_next, x_k);
        let s_sq = norm_sq(&s);
        if s_sq == 0.0 {
            0.0
        } else {
            (psi_value(jac_next, &s) - psi_value(jac_k, &s)) / s_sq
        }
    };
    let d_sq = norm_sq(d);
    let rho = if eta == 0.0 {
        1.0
    } else {
        1.0 - delta * eta * d_sq / metric.norm_sq(d)
    };
    Ok(RhoDiagnostic {
        rho,
        eta,
        t,
        psi_next,
        psi_prev,
    })
}

/// Estimates `L = max_i L_i` from `pairs` random point pairs in the box,
/// inflated by 1.5.
pub fn estimate_lipschitz(problem: &Problem, pairs: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..pairs {
        let x = problem.domain().sample(&mut rng);
        let y = problem.domain().sample(&mut rng);
        let dist = norm(&sub(&x, &y));
        if dist == 0.0 {
            continue;
        }
        let jx = problem.jacobian(&x)?;
        let jy = problem.jacobian(&y)?;
        for i in 0..problem.m() {
            worst = worst.max(norm(&sub(jx.row(i), jy.row(i))) / dist);
        }
    }
    if worst == 0.0 {
        return Err(Error::invalid(
            "could not estimate a positive Lipschitz constant",
        ));
    }
    Ok(1.5 * worst)
}

/// Result of a Wolfe search.
#[derive(Debug, Clone, PartialEq)]
pub struct WolfeStep {
    pub t: f64,
    /// Objective evaluations at trial points.
    pub func_evals: usize,
    /// Jacobian evaluations at trial points.
    pub jac_evals: usize,
    /// `F(x + td)` at the accepted trial point.
    pub values: Vec<f64>,
    /// `JF(x + td)` at the accepted trial point.
    pub jacobian: Jacobian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WolfeParams {
    pub rho1: f64,
    pub rho2: f64,
    pub strong: bool,
    pub initial_t: f64,
    pub budget: usize,
}

impl WolfeParams {
    pub fn new(rho1: f64, rho2: f64, strong: bool) -> Result<Self> {
        if !(0.0 < rho1 && rho1 < rho2 && rho2 < 1.0) {
            return Err(Error::invalid(format!(
                "Wolfe constants need 0 < rho1 < rho2 < 1, got {rho1}, {rho2}"
            )));
        }
        Ok(Self {
            rho1,
            rho2,
            strong,
            initial_t: 1.0,
            budget: WOLFE_BUDGET,
        })
    }
}

/// Finds `t > 0` with `F(x + td) ⪯ F(x) + ρ₁ t JF(x)d` and
/// `ψ(x + td, d) >= ρ₂ ψ(x, d)` (or `|ψ(x + td, d)| <= ρ₂ |ψ(x, d)|` when
/// `strong`), evaluating `F` and `JF` at `x` first.
pub fn wolfe_stepsize(
    problem: &Problem,
    x: &[f64],
    d: &[f64],
    rho1: f64,
    rho2: f64,
    strong: bool,
) -> Result<WolfeStep> {
    let params = WolfeParams::new(rho1, rho2, strong)?;
    let fx = problem.evaluate(x)?;
    let jx = problem.jacobian(x)?;
    wolfe_search(problem, x, &fx, &jx, d, &params)
}

/// Bracketing plus bisection on `t ↦ ψ(x + td, d)` with a componentwise
/// sufficient decrease test. Only evaluations at trial points are counted.
pub fn wolfe_search(
    problem: &Problem,
    x: &[f64],
    fx: &[f64],
    jx: &Jacobian,
    d: &[f64],
    params: &WolfeParams,
) -> Result<WolfeStep> {
    let psi0 = psi_value(jx, d);
    if !(psi0 < 0.0) {
        return Err(Error::Contract(format!(
            "Wolfe search needs a descent direction, ψ(x, d) = {psi0:e}"
        )));
    }
    let slopes = jx.apply(d);
    let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
    let mut t = params.initial_t;
    let (mut func_evals, mut jac_evals) = (0, 0);
    while func_evals < params.budget {
        let trial = axpy(x, t, d);
        let ft = problem.evaluate(&trial)?;
        func_evals += 1;
        let decrease_ok = ft
            .iter()
            .zip(fx.iter().zip(&slopes))
            .all(|(f, (f0, s))| *f <= f0 + params.rho1 * t * s);
        if !decrease_ok {
            hi = t;
            t = 0.5 * (lo + hi);
            continue;
        }
        let jt = problem.jacobian(&trial)?;
        jac_evals += 1;
        let psi_t = psi_value(&jt, d);
        if psi_t < params.rho2 * psi0 {
            lo = t;
            t = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * t };
            continue;
        }
        if params.strong && psi_t > -params.rho2 * psi0 {
            hi = t;
            t = 0.5 * (lo + hi);
            continue;
        }
        return Ok(WolfeStep {
            t,
            func_evals,
            jac_evals,
            values: ft,
            jacobian: jt,
        });
    }
    Err(Error::LineSearch {
        evaluations: func_evals,
        last_t: t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::builtin_problem;
    use crate::subproblem::solve_subproblem;

    fn half_square() -> Problem {
        Problem::from_fns("half-square", 1, 1, |x| vec![0.5 * x[0] * x[0]], |x| vec![vec![x[0]]])
    }

    #[test]
    fn delta_examples() {
        assert!((compute_delta(1.0, 1.0, 0.9).unwrap() - 0.9).abs() < 1e-15);
        assert_eq!(compute_delta(2.0, 4.0, 0.5).unwrap(), 0.25);
        assert!(compute_delta(1.0, 1.0, 1.0).is_err());
        assert!(compute_delta(1.0, 0.0, 0.5).is_err());
        assert!(compute_delta(-1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn rule_ratio_is_below_one() {
        let metric = MetricProvider::diagonal(vec![0.5, 2.0]).unwrap();
        let rule = StepsizeRule::new(&metric, 3.0, 0.9).unwrap();
        assert!((rule.delta - 0.15).abs() < 1e-15);
        assert!(rule.ratio < 1.0);
    }

    #[test]
    fn fixed_stepsize_examples() {
        let t = fixed_stepsize(-2.0, &[2.0, 0.0], &MetricProvider::Identity, 0.1).unwrap();
        assert!((t - 0.05).abs() < 1e-15);
        assert_eq!(fixed_stepsize(0.0, &[1.0, 1.0], &MetricProvider::Identity, 0.1).unwrap(), 0.0);
        assert!(matches!(
            fixed_stepsize(-1.0, &[0.0, 0.0], &MetricProvider::Identity, 0.1),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn identity_metric_with_inverse_lipschitz_is_stepsize_two() {
        // δ = 1/L, B = I gives -ψ / (L ‖d‖²)
        let l = 4.0;
        let d = [1.0, -2.0, 0.5];
        let psi_d = -1.7;
        let t = fixed_stepsize(psi_d, &d, &MetricProvider::Identity, 1.0 / l).unwrap();
        assert!((t - (-psi_d / (l * norm_sq(&d)))).abs() < 1e-15);
    }

    #[test]
    fn diagonal_metric_bounds() {
        let m = MetricProvider::diagonal(vec![0.5, 3.0, 1.0]).unwrap();
        assert_eq!(m.a_min(), 0.5);
        assert_eq!(m.a_max(), 3.0);
        assert!((m.norm_sq(&[1.0, 1.0, 2.0]) - 7.5).abs() < 1e-15);
        assert!(MetricProvider::diagonal(vec![1.0, 0.0]).is_err());
        assert!(m.check_dim(2).is_err());
    }

    #[test]
    fn rho_at_zero_step() {
        let p = builtin_problem("quad-pair", 2).unwrap();
        let x = [0.0, 1.0];
        let j = p.jacobian(&x).unwrap();
        let r = rho_diagnostic(&j, &j, &x, &x, &[0.0, -1.0], &MetricProvider::Identity, 0.9, 0.0)
            .unwrap();
        assert_eq!(r.eta, 0.0);
        assert_eq!(r.rho, 1.0);
    }

    #[test]
    fn rho_on_quad_pair_step() {
        let p = builtin_problem("quad-pair", 2).unwrap();
        let x = vec![0.3, 2.0];
        let j = p.jacobian(&x).unwrap();
        let sol = solve_subproblem(&j).unwrap();
        let metric = MetricProvider::Identity;
        let t = fixed_stepsize(sol.psi_v, &sol.v, &metric, 0.9).unwrap();
        let x1 = axpy(&x, t, &sol.v);
        let j1 = p.jacobian(&x1).unwrap();
        let r = rho_diagnostic(&j, &j1, &x, &x1, &sol.v, &metric, 0.9, t).unwrap();
        // L = μ = 1, a = 1: band [0.1, 1.9] ∩ (0, 0.1]
        assert!((r.rho - 0.1).abs() < 1e-12);
        assert!(r.identity_residual() <= 1e-10 * r.psi_prev.abs().max(1.0));
    }

    #[test]
    fn rho_rejects_inconsistent_points() {
        let p = builtin_problem("quad-pair", 2).unwrap();
        let j = p.jacobian(&[0.0, 0.0]).unwrap();
        let err = rho_diagnostic(&j, &j, &[0.0, 0.0], &[1.0, 0.0], &[1.0, 0.0], &MetricProvider::Identity, 0.5, 0.5);
        assert!(matches!(err, Err(Error::Contract(_))));
    }

    #[test]
    fn wolfe_unit_step_on_half_square() {
        let p = half_square();
        let step = wolfe_stepsize(&p, &[1.0], &[-1.0], 0.1, 0.9, false).unwrap();
        assert_eq!(step.t, 1.0);
        assert_eq!(step.func_evals, 1);
        assert_eq!(step.jac_evals, 1);
    }

    #[test]
    fn wolfe_rejects_ascent() {
        let p = half_square();
        assert!(matches!(
            wolfe_stepsize(&p, &[1.0], &[1.0], 0.1, 0.9, false),
            Err(Error::Contract(_))
        ));
        assert!(wolfe_stepsize(&p, &[1.0], &[-1.0], 0.9, 0.1, false).is_err());
    }

    fn wolfe_holds(p: &Problem, x: &[f64], d: &[f64], t: f64, rho1: f64, rho2: f64, strong: bool) -> bool {
        let fx = p.evaluate(x).unwrap();
        let jx = p.jacobian(x).unwrap();
        let slopes = jx.apply(d);
        let xt = axpy(x, t, d);
        let ft = p.evaluate(&xt).unwrap();
        let psi0 = psi_value(&jx, d);
        let psit = psi_value(&p.jacobian(&xt).unwrap(), d);
        let decrease = (0..fx.len()).all(|i| ft[i] <= fx[i] + rho1 * t * slopes[i]);
        let curvature = if strong {
            psit.abs() <= rho2 * psi0.abs()
        } else {
            psit >= rho2 * psi0
        };
        decrease && curvature
    }

    #[test]
    fn wolfe_conditions_hold_on_quad_pair() {
        let p = builtin_problem("quad-pair", 2).unwrap();
        for x in [[0.0, 1.0], [3.0, -2.0], [-5.0, 7.5], [0.9, 0.01]] {
            let sol = solve_subproblem(&p.jacobian(&x).unwrap()).unwrap();
            // a perturbed, still descent direction
            let d = [sol.v[0] * 1.3, sol.v[1] * 0.7];
            assert!(psi_value(&p.jacobian(&x).unwrap(), &d) < 0.0);
            for strong in [false, true] {
                let step = wolfe_stepsize(&p, &x, &d, 1e-4, 0.1, strong).unwrap();
                assert!(wolfe_holds(&p, &x, &d, step.t, 1e-4, 0.1, strong), "{x:?} {strong}");
            }
        }
    }

    #[test]
    fn lipschitz_estimate_bounds_true_constant() {
        let p = builtin_problem("aniso-pair", 3).unwrap();
        let est = estimate_lipschitz(&p, 200, 1).unwrap();
        assert!(est >= p.lipschitz().unwrap());
        assert!(est <= 1.5 * p.lipschitz().unwrap() + 1e-12);
    }
}
