//! Multiobjective problems `F: R^n -> R^m` and the built-in catalog.
//!
//! A [`Problem`] wraps an [`Objectives`] implementation together with the
//! metadata the solver relies on: per-objective Lipschitz constants of the
//! gradients, strong convexity constants, the box standing in for the open
//! set on which those constants hold, and (for catalog problems) an analytic
//! description of the Pareto set.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, sub};

/// Stable catalog names accepted by [`builtin_problem`].
pub const CATALOG: &[&str] = &["quad-pair", "jos1", "aniso-pair", "softplus-pair"];

/// Default half-width of the box domain `[-10, 10]^n`.
pub const DEFAULT_BOX: f64 = 10.0;

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Objective values and gradients of a smooth vector function.
pub trait Objectives: Send + Sync {
    fn dim(&self) -> usize;
    fn num_objectives(&self) -> usize;
    /// `(F_1(x), ..., F_m(x))`
    fn values(&self, x: &[f64]) -> Vec<f64>;
    /// Row `i` is `∇F_i(x)`.
    fn gradients(&self, x: &[f64]) -> Vec<Vec<f64>>;
}

/// The `m × n` Jacobian `JF(x)` together with the point it was evaluated at.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    rows: Vec<Vec<f64>>,
    point: Vec<f64>,
}

impl Jacobian {
    /// Builds a Jacobian evaluated at `point`. All rows must have the same
    /// length and every entry must be finite.
    pub fn new(rows: Vec<Vec<f64>>, point: Vec<f64>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("a Jacobian needs at least one row"));
        }
        let n = rows[0].len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    actual: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    what: "jacobian row",
                    index: i,
                });
            }
        }
        if !point.is_empty() && point.len() != n {
            return Err(Error::Dimension {
                expected: n,
                actual: point.len(),
            });
        }
        Ok(Self { rows, point })
    }

    /// A Jacobian detached from any evaluation point.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows, Vec::new())
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    /// Evaluation point; empty for detached matrices.
    pub fn point(&self) -> &[f64] {
        &self.point
    }

    /// Number of objectives.
    pub fn m(&self) -> usize {
        self.rows.len()
    }

    /// Number of variables.
    pub fn n(&self) -> usize {
        self.rows[0].len()
    }

    /// `JF(x) d = (⟨∇F_1(x), d⟩, ..., ⟨∇F_m(x), d⟩)`.
    pub fn apply(&self, d: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|g| dot(g, d)).collect()
    }

    /// `Jᵀ λ`
    pub fn transpose_apply(&self, lambda: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for (g, &l) in self.rows.iter().zip(lambda) {
            if l == 0.0 {
                continue;
            }
            for (o, gi) in out.iter_mut().zip(g) {
                *o += l * gi;
            }
        }
        out
    }

    /// Gram matrix `J Jᵀ`.
    pub fn gram(&self) -> Vec<Vec<f64>> {
        let m = self.m();
        let mut q = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in i..m {
                let v = dot(&self.rows[i], &self.rows[j]);
                q[i][j] = v;
                q[j][i] = v;
            }
        }
        q
    }
}

/// Axis-aligned box `[lower_i, upper_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxDomain {
    pub fn symmetric(n: usize, half_width: f64) -> Self {
        Self {
            lower: vec![-half_width; n],
            upper: vec![half_width; n],
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| rng.gen_range(*lo..=*hi))
            .collect()
    }
}

/// Analytic Pareto sets of the catalog problems.
#[derive(Debug, Clone, PartialEq)]
pub enum ParetoSet {
    /// The closed segment between two points.
    Segment { from: Vec<f64>, to: Vec<f64> },
    /// The full line `{p + s u : s ∈ R}`.
    Line { point: Vec<f64>, direction: Vec<f64> },
    /// Minimizers of `λ F_1 + (1-λ) F_2`, `λ ∈ [0, 1]`, for two separable
    /// quadratics `F_1 = ½ Σ w1_j (x_j - c1_j)²`, `F_2 = ½ Σ w2_j (x_j - c2_j)²`.
    WeightedCenters {
        w1: Vec<f64>,
        c1: Vec<f64>,
        w2: Vec<f64>,
        c2: Vec<f64>,
    },
}

impl ParetoSet {
    /// Euclidean distance from `x` to the set.
    pub fn distance(&self, x: &[f64]) -> f64 {
        match self {
            ParetoSet::Segment { from, to } => {
                let dir = sub(to, from);
                let len_sq = dot(&dir, &dir);
                let rel = sub(x, from);
                let s = if len_sq == 0.0 {
                    0.0
                } else {
                    (dot(&rel, &dir) / len_sq).clamp(0.0, 1.0)
                };
                x.iter()
                    .zip(from.iter().zip(&dir))
                    .map(|(xi, (fi, di))| (xi - fi - s * di).powi(2))
                    .sum::<f64>()
                    .sqrt()
            }
            ParetoSet::Line { point, direction } => {
                let rel = sub(x, point);
                let s = dot(&rel, direction) / dot(direction, direction);
                rel.iter()
                    .zip(direction)
                    .map(|(r, u)| (r - s * u).powi(2))
                    .sum::<f64>()
                    .sqrt()
            }
            ParetoSet::WeightedCenters { .. } => {
                // Coarse scan followed by golden-section refinement around the
                // best cell. The curve is smooth in λ, so the bracket is safe.
                const CELLS: usize = 2000;
                let dist = |l: f64| norm(&sub(x, &self.weighted_point(l)));
                let best = (0..=CELLS)
                    .map(|i| i as f64 / CELLS as f64)
                    .min_by(|a, b| dist(*a).total_cmp(&dist(*b)))
                    .unwrap();
                let h = 1.0 / CELLS as f64;
                let (mut lo, mut hi) = ((best - h).max(0.0), (best + h).min(1.0));
                let phi = 0.5 * (5f64.sqrt() - 1.0);
                for _ in 0..80 {
                    let a = hi - phi * (hi - lo);
                    let b = lo + phi * (hi - lo);
                    if dist(a) <= dist(b) {
                        hi = b;
                    } else {
                        lo = a;
                    }
                }
                dist(0.5 * (lo + hi)).min(dist(best))
            }
        }
    }

    /// Point on a [`ParetoSet::WeightedCenters`] curve at weight `lambda`.
    fn weighted_point(&self, lambda: f64) -> Vec<f64> {
        match self {
            ParetoSet::WeightedCenters { w1, c1, w2, c2 } => (0..w1.len())
                .map(|j| {
                    let a = lambda * w1[j];
                    let b = (1.0 - lambda) * w2[j];
                    (a * c1[j] + b * c2[j]) / (a + b)
                })
                .collect(),
            _ => unreachable!("weighted_point on a non-curve Pareto set"),
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.distance(x) <= tol
    }
}

/// A multiobjective problem plus the constants assumed by the analysis.
#[derive(Clone)]
pub struct Problem {
    name: String,
    objectives: Arc<dyn Objectives>,
    lipschitz: Option<Vec<f64>>,
    convexity: Option<Vec<f64>>,
    domain: BoxDomain,
    pareto_set: Option<ParetoSet>,
    exploratory: bool,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("n", &self.n())
            .field("m", &self.m())
            .field("lipschitz", &self.lipschitz)
            .field("convexity", &self.convexity)
            .field("exploratory", &self.exploratory)
            .finish()
    }
}

impl Problem {
    pub fn new(name: impl Into<String>, objectives: impl Objectives + 'static) -> Self {
        let n = objectives.dim();
        Self {
            name: name.into(),
            objectives: Arc::new(objectives),
            lipschitz: None,
            convexity: None,
            domain: BoxDomain::symmetric(n, DEFAULT_BOX),
            pareto_set: None,
            exploratory: false,
        }
    }

    /// Builds a problem from plain closures. Handy for fixtures.
    pub fn from_fns<F, G>(name: impl Into<String>, n: usize, m: usize, values: F, gradients: G) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync + 'static,
    {
        Self::new(
            name,
            FnObjectives {
                n,
                m,
                values,
                gradients,
            },
        )
    }

    pub fn with_lipschitz(mut self, l: Vec<f64>) -> Self {
        assert_eq!(l.len(), self.m(), "one Lipschitz constant per objective");
        self.lipschitz = Some(l);
        self
    }

    pub fn with_convexity(mut self, mu: Vec<f64>) -> Self {
        assert_eq!(mu.len(), self.m(), "one convexity constant per objective");
        self.convexity = Some(mu);
        self
    }

    pub fn with_domain(mut self, domain: BoxDomain) -> Self {
        assert_eq!(domain.lower.len(), self.n());
        self.domain = domain;
        self
    }

    pub fn with_pareto_set(mut self, set: ParetoSet) -> Self {
        self.pareto_set = Some(set);
        self
    }

    /// Marks the problem as outside the strongly convex theorem suites.
    pub fn exploratory(mut self) -> Self {
        self.exploratory = true;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.objectives.dim()
    }

    pub fn m(&self) -> usize {
        self.objectives.num_objectives()
    }

    pub fn lipschitz_constants(&self) -> Option<&[f64]> {
        self.lipschitz.as_deref()
    }

    pub fn convexity_constants(&self) -> Option<&[f64]> {
        self.convexity.as_deref()
    }

    /// `L = max_i L_i`
    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
            .as_ref()
            .map(|l| l.iter().copied().fold(f64::MIN, f64::max))
    }

    /// `μ = min_i μ_i`
    pub fn convexity(&self) -> Option<f64> {
        self.convexity
            .as_ref()
            .map(|m| m.iter().copied().fold(f64::MAX, f64::min))
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn pareto_set(&self) -> Option<&ParetoSet> {
        self.pareto_set.as_ref()
    }

    pub fn is_exploratory(&self) -> bool {
        self.exploratory
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::Dimension {
                expected: self.n(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let f = self.objectives.values(x);
        if let Some(index) = f.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "objective",
                index,
            });
        }
        Ok(f)
    }

    pub fn jacobian(&self, x: &[f64]) -> Result<Jacobian> {
        self.check_len(x)?;
        let rows = self.objectives.gradients(x);
        if rows.len() != self.m() {
            return Err(Error::Dimension {
                expected: self.m(),
                actual: rows.len(),
            });
        }
        Jacobian::new(rows, x.to_vec())
    }

    /// Largest deviation between the analytic Jacobian and central
    /// differences with step `h`.
    pub fn check_gradients(&self, x: &[f64], h: f64) -> Result<f64> {
        if !(h > 0.0) {
            return Err(Error::invalid("finite-difference step must be positive"));
        }
        let jac = self.jacobian(x)?;
        let mut worst = 0.0_f64;
        let mut probe = x.to_vec();
        for j in 0..self.n() {
            probe[j] = x[j] + h;
            let plus = self.evaluate(&probe)?;
            probe[j] = x[j] - h;
            let minus = self.evaluate(&probe)?;
            probe[j] = x[j];
            for i in 0..self.m() {
                let fd = (plus[i] - minus[i]) / (2.0 * h);
                worst = worst.max((fd - jac.row(i)[j]).abs());
            }
        }
        Ok(worst)
    }
}

struct FnObjectives<F, G> {
    n: usize,
    m: usize,
    values: F,
    gradients: G,
}

impl<F, G> Objectives for FnObjectives<F, G>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
    G: Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.n
    }
    fn num_objectives(&self) -> usize {
        self.m
    }
    fn values(&self, x: &[f64]) -> Vec<f64> {
        (self.values)(x)
    }
    fn gradients(&self, x: &[f64]) -> Vec<Vec<f64>> {
        (self.gradients)(x)
    }
}

/// Sum of separable weighted quadratics, one per objective:
/// `F_i(x) = s_i Σ_j w_ij (x_j - c_ij)²`.
#[derive(Debug, Clone)]
pub struct SeparableQuadratics {
    scale: Vec<f64>,
    weights: Vec<Vec<f64>>,
    centers: Vec<Vec<f64>>,
}

impl SeparableQuadratics {
    pub fn new(scale: Vec<f64>, weights: Vec<Vec<f64>>, centers: Vec<Vec<f64>>) -> Self {
        assert_eq!(scale.len(), weights.len());
        assert_eq!(weights.len(), centers.len());
        Self {
            scale,
            weights,
            centers,
        }
    }

    /// Extreme Hessian eigenvalues `(min, max)` of each objective.
    pub fn curvature_bounds(&self) -> Vec<(f64, f64)> {
        self.weights
            .iter()
            .zip(&self.scale)
            .map(|(w, s)| {
                let lo = w.iter().copied().fold(f64::MAX, f64::min);
                let hi = w.iter().copied().fold(f64::MIN, f64::max);
                (2.0 * s * lo, 2.0 * s * hi)
            })
            .collect()
    }
}

impl Objectives for SeparableQuadratics {
    fn dim(&self) -> usize {
        self.weights[0].len()
    }

    fn num_objectives(&self) -> usize {
        self.weights.len()
    }

    fn values(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.centers)
            .zip(&self.scale)
            .map(|((w, c), s)| {
                s * x
                    .iter()
                    .zip(w.iter().zip(c))
                    .map(|(xi, (wi, ci))| wi * (xi - ci) * (xi - ci))
                    .sum::<f64>()
            })
            .collect()
    }

    fn gradients(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.weights
            .iter()
            .zip(&self.centers)
            .zip(&self.scale)
            .map(|((w, c), s)| {
                x.iter()
                    .zip(w.iter().zip(c))
                    .map(|(xi, (wi, ci))| 2.0 * s * wi * (xi - ci))
                    .collect()
            })
            .collect()
    }
}

/// `F_1 = Σ softplus(x_j - 1)`, `F_2 = Σ softplus(-x_j - 1)`.
///
/// Smooth and convex with `L_i = 1/4`, but not strongly convex.
#[derive(Debug, Clone)]
pub struct SoftplusPair {
    n: usize,
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Objectives for SoftplusPair {
    fn dim(&self) -> usize {
        self.n
    }

    fn num_objectives(&self) -> usize {
        2
    }

    fn values(&self, x: &[f64]) -> Vec<f64> {
        vec![
            x.iter().map(|v| softplus(v - 1.0)).sum(),
            x.iter().map(|v| softplus(-v - 1.0)).sum(),
        ]
    }

    fn gradients(&self, x: &[f64]) -> Vec<Vec<f64>> {
        vec![
            x.iter().map(|v| sigmoid(v - 1.0)).collect(),
            x.iter().map(|v| -sigmoid(-v - 1.0)).collect(),
        ]
    }
}

fn unit(n: usize, i: usize, value: f64) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = value;
    e
}

fn aniso_weights(n: usize) -> (Vec<f64>, Vec<f64>) {
    if n == 1 {
        return (vec![1.0], vec![4.0]);
    }
    let w1: Vec<f64> = (0..n)
        .map(|j| 1.0 + 3.0 * j as f64 / (n - 1) as f64)
        .collect();
    let w2 = w1.iter().rev().copied().collect();
    (w1, w2)
}

/// Looks up a catalog problem by name.
///
/// | name | objectives | constants |
/// |---|---|---|
/// | `quad-pair` | `½‖x-e_1‖²`, `½‖x+e_1‖²` | `L = μ = 1` |
/// | `jos1` | `(1/n)Σx_j²`, `(1/n)Σ(x_j-2)²` | `L = μ = 2/n` |
/// | `aniso-pair` | two diagonal quadratics with reversed spectra in `[1, 4]` | `L = 4`, `μ = 1` (n ≥ 2) |
/// | `softplus-pair` | `Σ softplus(x_j-1)`, `Σ softplus(-x_j-1)` | `L = 1/4`, no `μ` (exploratory) |
pub fn builtin_problem(name: &str, n: usize) -> Result<Problem> {
    if !CATALOG.contains(&name) {
        return Err(Error::UnknownProblem {
            name: name.to_string(),
            valid: CATALOG.join(", "),
        });
    }
    if n == 0 {
        return Err(Error::invalid(format!(
            "problem `{name}` needs dimension n >= 1"
        )));
    }
    let problem = match name {
        "quad-pair" => {
            let a = unit(n, 0, 1.0);
            let b = unit(n, 0, -1.0);
            let q = SeparableQuadratics::new(
                vec![0.5, 0.5],
                vec![vec![1.0; n], vec![1.0; n]],
                vec![a.clone(), b.clone()],
            );
            Problem::new(name, q)
                .with_lipschitz(vec![1.0, 1.0])
                .with_convexity(vec![1.0, 1.0])
                .with_pareto_set(ParetoSet::Segment { from: a, to: b })
        }
        "jos1" => {
            let s = 1.0 / n as f64;
            let q = SeparableQuadratics::new(
                vec![s, s],
                vec![vec![1.0; n], vec![1.0; n]],
                vec![vec![0.0; n], vec![2.0; n]],
            );
            let c = 2.0 / n as f64;
            Problem::new(name, q)
                .with_lipschitz(vec![c, c])
                .with_convexity(vec![c, c])
                .with_pareto_set(ParetoSet::Segment {
                    from: vec![0.0; n],
                    to: vec![2.0; n],
                })
        }
        "aniso-pair" => {
            let (w1, w2) = aniso_weights(n);
            let c1 = vec![1.0; n];
            let c2: Vec<f64> = (0..n).map(|j| if j % 2 == 0 { -1.0 } else { 1.0 }).collect();
            let q = SeparableQuadratics::new(
                vec![0.5, 0.5],
                vec![w1.clone(), w2.clone()],
                vec![c1.clone(), c2.clone()],
            );
            let bounds = q.curvature_bounds();
            Problem::new(name, q)
                .with_lipschitz(bounds.iter().map(|b| b.1).collect())
                .with_convexity(bounds.iter().map(|b| b.0).collect())
                .with_pareto_set(ParetoSet::WeightedCenters { w1, c1, w2, c2 })
        }
        "softplus-pair" => Problem::new(name, SoftplusPair { n })
            .with_lipschitz(vec![0.25, 0.25])
            .with_pareto_set(ParetoSet::Line {
                point: vec![0.0; n],
                direction: vec![1.0; n],
            })
            .exploratory(),
        _ => unreachable!(),
    };
    Ok(problem)
}

/// Worst observed ratios from sampling the declared constants on random
/// point pairs drawn from the problem's box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantCheck {
    /// `max ‖∇F_i(x) - ∇F_i(y)‖ / (L_i ‖x - y‖)`; at most 1 when `L_i` holds.
    pub lipschitz_ratio: Option<f64>,
    /// `min (∇F_i(x) - ∇F_i(y))ᵀ(x - y) / (μ_i ‖x - y‖²)`; at least 1 when `μ_i` holds.
    pub convexity_ratio: Option<f64>,
}

pub fn sample_constants(problem: &Problem, pairs: usize, seed: u64) -> Result<ConstantCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut l_ratio = f64::MIN;
    let mut mu_ratio = f64::MAX;
    for _ in 0..pairs {
        let x = problem.domain().sample(&mut rng);
        let y = problem.domain().sample(&mut rng);
        let s = sub(&x, &y);
        let s_sq = dot(&s, &s);
        if s_sq == 0.0 {
            continue;
        }
        let jx = problem.jacobian(&x)?;
        let jy = problem.jacobian(&y)?;
        for i in 0..problem.m() {
            let dg = sub(jx.row(i), jy.row(i));
            if let Some(l) = problem.lipschitz_constants() {
                l_ratio = l_ratio.max(norm(&dg) / (l[i] * s_sq.sqrt()));
            }
            if let Some(mu) = problem.convexity_constants() {
                mu_ratio = mu_ratio.min(dot(&dg, &s) / (mu[i] * s_sq));
            }
        }
    }
    Ok(ConstantCheck {
        lipschitz_ratio: problem.lipschitz_constants().map(|_| l_ratio),
        convexity_ratio: problem.convexity_constants().map(|_| mu_ratio),
    })
}
