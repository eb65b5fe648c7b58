//! The steepest descent subproblem
//!
//! ```text
//! v(x) = argmin_d ψ(x, d) + ½‖d‖²,   ψ(x, d) = max_i ⟨∇F_i(x), d⟩
//! ```
//!
//! is solved through its dual: minimize `½‖Jᵀλ‖²` over the probability
//! simplex and set `v = -Jᵀλ*`. Geometrically `-v` is the minimum-norm point
//! of the convex hull of the gradients.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, norm_sq, solve_dense};
use crate::problem::Jacobian;

/// Largest `m` solved by exhaustive support enumeration.
pub const ENUMERATION_LIMIT: usize = 12;
/// Duality-gap stopping threshold of the projected-gradient fallback.
pub const DUALITY_GAP_TOL: f64 = 1e-10;
/// Tolerance used when asserting the solution invariants.
pub const INVARIANT_TOL: f64 = 1e-8;

const FALLBACK_MAX_ITERS: usize = 200_000;

/// Value of `ψ(x, d)` and the smallest index attaining the max.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Psi {
    pub value: f64,
    pub index: usize,
}

/// `ψ(x, d) = max_i ⟨g_i, d⟩` over the rows of `J`.
pub fn psi(jac: &Jacobian, d: &[f64]) -> Result<Psi> {
    if d.len() != jac.n() {
        return Err(Error::Dimension {
            expected: jac.n(),
            actual: d.len(),
        });
    }
    let mut best = Psi {
        value: f64::NEG_INFINITY,
        index: 0,
    };
    for (i, g) in jac.rows().iter().enumerate() {
        let v = dot(g, d);
        if v > best.value {
            best = Psi { value: v, index: i };
        }
    }
    Ok(best)
}

pub(crate) fn psi_value(jac: &Jacobian, d: &[f64]) -> f64 {
    jac.rows()
        .iter()
        .map(|g| dot(g, d))
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSolution {
    /// Steepest descent direction `v(x)`.
    pub v: Vec<f64>,
    /// Optimal value `θ(x) = ψ(x, v) + ½‖v‖²`.
    pub theta: f64,
    /// Simplex weights with `v = -Jᵀλ`.
    pub lambda: Vec<f64>,
    /// `ψ(x, v(x))`
    pub psi_v: f64,
}

impl SubproblemSolution {
    fn from_weights(jac: &Jacobian, lambda: Vec<f64>) -> Self {
        let v: Vec<f64> = jac.transpose_apply(&lambda).iter().map(|x| -x).collect();
        let psi_v = psi_value(jac, &v);
        Self {
            theta: psi_v + 0.5 * norm_sq(&v),
            v,
            lambda,
            psi_v,
        }
    }

    pub fn norm_v(&self) -> f64 {
        norm(&self.v)
    }
}

/// Whether `‖v(x)‖ <= tol`.
pub fn is_pareto_critical(sol: &SubproblemSolution, tol: f64) -> bool {
    sol.norm_v() <= tol
}

/// Solves the subproblem to near machine precision.
///
/// For `m <= 12` every support set is tried: on a support `S` the weights
/// solve the equality-constrained system `Q_SS λ_S + ν 1 = 0`, `1ᵀλ_S = 1`
/// with `Q = JJᵀ`; a candidate is accepted when `λ >= 0` and
/// `(Qλ)_i >= λᵀQλ` for every index (the simplex KKT conditions). Larger
/// `m` uses the minimum-norm-point active-set method, with accelerated
/// projected gradient as a last resort.
pub fn solve_subproblem(jac: &Jacobian) -> Result<SubproblemSolution> {
    let q = jac.gram();
    let scale = q.iter().enumerate().fold(0.0_f64, |s, (i, r)| s.max(r[i]));
    if scale == 0.0 {
        let mut lambda = vec![0.0; jac.m()];
        lambda[0] = 1.0;
        return Ok(SubproblemSolution::from_weights(jac, lambda));
    }
    let exact = if jac.m() <= ENUMERATION_LIMIT {
        enumerate_supports(&q, scale)
    } else {
        None
    };
    let lambda = match exact.or_else(|| min_norm_point(&q, scale)) {
        Some(l) => l,
        None => projected_gradient(&q, scale)?,
    };
    Ok(SubproblemSolution::from_weights(jac, lambda))
}

fn quad_form(q: &[Vec<f64>], l: &[f64]) -> f64 {
    q.iter()
        .zip(l)
        .map(|(row, li)| li * dot(row, l))
        .sum()
}

fn mat_vec(q: &[Vec<f64>], l: &[f64]) -> Vec<f64> {
    q.iter().map(|row| dot(row, l)).collect()
}

fn enumerate_supports(q: &[Vec<f64>], scale: f64) -> Option<Vec<f64>> {
    let m = q.len();
    let kkt_tol = 1e-11 * scale;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut fallback: Option<(f64, Vec<f64>)> = None;

    for mask in 1u32..(1u32 << m) {
        let support: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let s = support.len();
        let mut a = vec![vec![0.0; s + 1]; s + 1];
        for (r, &i) in support.iter().enumerate() {
            for (c, &j) in support.iter().enumerate() {
                a[r][c] = q[i][j];
            }
            a[r][s] = 1.0;
            a[s][r] = 1.0;
        }
        let mut rhs = vec![0.0; s + 1];
        rhs[s] = 1.0;
        let Some(sol) = solve_dense(a, rhs, 1e-12) else {
            continue;
        };
        if sol[..s].iter().any(|&l| l < -1e-12) {
            continue;
        }
        let mut lambda = vec![0.0; m];
        for (r, &i) in support.iter().enumerate() {
            lambda[i] = sol[r].max(0.0);
        }
        let total: f64 = lambda.iter().sum();
        if !(total > 0.0) {
            continue;
        }
        lambda.iter_mut().for_each(|l| *l /= total);

        let value = quad_form(q, &lambda);
        let grad = mat_vec(q, &lambda);
        let kkt = grad.iter().all(|&g| g >= value - kkt_tol);
        let slot = if kkt { &mut best } else { &mut fallback };
        if slot.as_ref().is_none_or(|(v, _)| value < *v) {
            *slot = Some((value, lambda));
        }
    }
    best.or(fallback).map(|(_, l)| l)
}

/// Minimizes `λᵀQλ` over `λ ∈ Δ` on the affine hull of a support set.
fn affine_minimizer(q: &[Vec<f64>], support: &[usize]) -> Option<Vec<f64>> {
    let s = support.len();
    let mut a = vec![vec![0.0; s + 1]; s + 1];
    for (r, &i) in support.iter().enumerate() {
        for (c, &j) in support.iter().enumerate() {
            a[r][c] = q[i][j];
        }
        a[r][s] = 1.0;
        a[s][r] = 1.0;
    }
    let mut rhs = vec![0.0; s + 1];
    rhs[s] = 1.0;
    let mut sol = solve_dense(a, rhs, 1e-13)?;
    sol.truncate(s);
    Some(sol)
}

/// Wolfe's minimum-norm-point method on the points `g_i`, working only with
/// the Gram matrix. Returns `None` if an affine subsystem turns singular.
fn min_norm_point(q: &[Vec<f64>], scale: f64) -> Option<Vec<f64>> {
    const ZERO: f64 = 1e-15;
    let m = q.len();
    let start = (0..m).min_by(|&a, &b| q[a][a].total_cmp(&q[b][b]))?;
    let mut lambda = vec![0.0; m];
    lambda[start] = 1.0;
    let mut support = vec![start];
    for _ in 0..(100 * m + 100) {
        let grad = mat_vec(q, &lambda);
        let value = dot(&grad, &lambda);
        let (j, g_min) = grad
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))?;
        if value - g_min <= DUALITY_GAP_TOL.min(1e-12 * scale) || support.contains(&j) {
            return (value - g_min <= DUALITY_GAP_TOL).then_some(lambda);
        }
        support.push(j);
        loop {
            let alpha = affine_minimizer(q, &support)?;
            if alpha.iter().all(|&a| a > ZERO) {
                for (&i, &a) in support.iter().zip(&alpha) {
                    lambda[i] = a;
                }
                break;
            }
            // Move toward the affine minimizer until a weight hits zero.
            let mut theta = 1.0_f64;
            let mut blocking = 0;
            for (k, (&i, &a)) in support.iter().zip(&alpha).enumerate() {
                if a <= ZERO {
                    let ratio = lambda[i] / (lambda[i] - a);
                    if ratio < theta {
                        theta = ratio;
                        blocking = k;
                    }
                }
            }
            for (&i, &a) in support.iter().zip(&alpha) {
                lambda[i] = (1.0 - theta) * lambda[i] + theta * a;
            }
            lambda[support[blocking]] = 0.0;
            support.retain(|&i| lambda[i] > ZERO);
            for i in 0..m {
                if !support.contains(&i) {
                    lambda[i] = 0.0;
                }
            }
            let total: f64 = lambda.iter().sum();
            lambda.iter_mut().for_each(|l| *l /= total);
        }
    }
    None
}

/// Euclidean projection onto the probability simplex.
pub(crate) fn project_simplex(y: &[f64]) -> Vec<f64> {
    let mut u = y.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cumulative += uk;
        let t = (cumulative - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            shift = t;
        }
    }
    y.iter().map(|v| (v - shift).max(0.0)).collect()
}

fn duality_gap(q: &[Vec<f64>], l: &[f64]) -> (f64, f64) {
    let grad = mat_vec(q, l);
    let value = dot(&grad, l);
    let min_grad = grad.iter().copied().fold(f64::INFINITY, f64::min);
    (value, value - min_grad)
}

fn projected_gradient(q: &[Vec<f64>], scale: f64) -> Result<Vec<f64>> {
    let m = q.len();
    // trace(Q) bounds the largest eigenvalue of the PSD Gram matrix.
    let lip: f64 = (0..m).map(|i| q[i][i]).sum::<f64>().max(scale);
    let step = 1.0 / lip;
    let mut x = vec![1.0 / m as f64; m];
    let mut y = x.clone();
    let mut t = 1.0_f64;
    let mut best = (f64::INFINITY, f64::INFINITY, x.clone());
    for _ in 0..FALLBACK_MAX_ITERS {
        let grad = mat_vec(q, &y);
        let trial: Vec<f64> = y.iter().zip(&grad).map(|(a, g)| a - step * g).collect();
        let next = project_simplex(&trial);
        let (value, gap) = duality_gap(q, &next);
        if gap < best.1 {
            best = (value, gap, next.clone());
        }
        if gap <= DUALITY_GAP_TOL {
            return Ok(next);
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let momentum = (t - 1.0) / t_next;
        // Adaptive restart keeps FISTA monotone on this objective.
        if quad_form(q, &next) > quad_form(q, &x) {
            t = 1.0;
            y = x.clone();
            continue;
        }
        y = next
            .iter()
            .zip(&x)
            .map(|(a, b)| a + momentum * (a - b))
            .collect();
        x = next;
        t = t_next;
    }
    Err(Error::SolverFailure {
        best_value: 0.5 * best.0,
        gap: best.1,
    })
}

/// Independent reference solution for small `m`.
///
/// `m = 1` is trivial, `m = 2` uses the closed-form minimizer of the scalar
/// quadratic `‖λ g_1 + (1-λ) g_2‖²` clamped to `[0, 1]`, and `m ∈ {3, 4}`
/// searches every simplex point whose coordinates are multiples of
/// `resolution`.
pub fn solve_subproblem_oracle(jac: &Jacobian, resolution: f64) -> Result<SubproblemSolution> {
    let m = jac.m();
    if m > 4 {
        return Err(Error::OracleScope(m));
    }
    if !(resolution > 0.0) {
        return Err(Error::invalid("oracle resolution must be positive"));
    }
    let lambda = match m {
        1 => vec![1.0],
        2 => {
            let (g1, g2) = (jac.row(0), jac.row(1));
            let diff: Vec<f64> = g1.iter().zip(g2).map(|(a, b)| a - b).collect();
            let denom = norm_sq(&diff);
            let l = if denom == 0.0 {
                1.0
            } else {
                (-dot(g2, &diff) / denom).clamp(0.0, 1.0)
            };
            vec![l, 1.0 - l]
        }
        _ => grid_search(&jac.gram(), resolution),
    };
    Ok(SubproblemSolution::from_weights(jac, lambda))
}

fn grid_search(q: &[Vec<f64>], resolution: f64) -> Vec<f64> {
    let m = q.len();
    let steps = (1.0 / resolution).round().max(1.0) as usize;
    let h = 1.0 / steps as f64;
    let mut best = (f64::INFINITY, vec![0.0; m]);
    let mut counts = vec![0usize; m];
    // Enumerate compositions of `steps` into m parts; the last part is implied.
    fn visit(
        depth: usize,
        remaining: usize,
        counts: &mut [usize],
        q: &[Vec<f64>],
        h: f64,
        best: &mut (f64, Vec<f64>),
    ) {
        let m = counts.len();
        if depth == m - 1 {
            counts[depth] = remaining;
            let l: Vec<f64> = counts.iter().map(|&c| c as f64 * h).collect();
            let value = quad_form(q, &l);
            if value < best.0 {
                *best = (value, l);
            }
            return;
        }
        for c in 0..=remaining {
            counts[depth] = c;
            visit(depth + 1, remaining - c, counts, q, h, best);
        }
    }
    visit(0, steps, &mut counts, q, h, &mut best);
    best.1
}
