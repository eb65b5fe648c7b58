//! Multi-start front approximation and nondominated filtering.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::Problem;
use crate::solver::{solve, SolveConfig, Status};

/// Outcome of one start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartOutcome {
    pub start: usize,
    pub x0: Vec<f64>,
    pub status: Status,
    pub final_x: Vec<f64>,
    pub final_objectives: Vec<f64>,
    pub iterations: usize,
    pub restarts: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Front {
    /// One entry per start, in start order.
    pub runs: Vec<StartOutcome>,
    /// Indices into `runs` of converged runs whose objective vectors are
    /// not dominated by another converged run.
    pub nondominated: Vec<usize>,
}

impl Front {
    pub fn converged(&self) -> usize {
        self.runs.iter().filter(|r| r.status == Status::Converged).count()
    }

    pub fn restarts(&self) -> usize {
        self.runs.iter().map(|r| r.restarts).sum()
    }
}

/// `a` dominates `b`: no worse in every component, better in at least one.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

/// Indices of the nondominated points, ascending. Duplicates are all kept.
pub fn nondominated_filter(points: &[Vec<f64>]) -> Result<Vec<usize>> {
    let Some(first) = points.first() else {
        return Ok(Vec::new());
    };
    let m = first.len();
    for (i, p) in points.iter().enumerate() {
        if p.len() != m {
            return Err(Error::Dimension {
                expected: m,
                actual: p.len(),
            });
        }
        if let Some(j) = p.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "objective vector",
                index: i * m + j,
            });
        }
    }
    // A point can only be dominated by one that precedes it lexicographically.
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .iter()
            .zip(&points[b])
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut kept: Vec<usize> = Vec::new();
    for &i in &order {
        if !kept.iter().any(|&j| dominates(&points[j], &points[i])) {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    Ok(kept)
}

/// Starting points drawn uniformly from the problem domain.
pub fn sample_starts(problem: &Problem, starts: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..starts).map(|_| problem.domain().sample(&mut rng)).collect()
}

/// Solves from `starts` seeded starting points in parallel and filters the
/// converged end points. The result does not depend on thread scheduling.
pub fn multistart_pareto(problem: &Problem, starts: usize, seed: u64, config: &SolveConfig) -> Result<Front> {
    if starts == 0 {
        return Err(Error::invalid("starts must be at least 1"));
    }
    config.validate()?;
    let x0s = sample_starts(problem, starts, seed);
    let runs: Vec<StartOutcome> = x0s
        .into_par_iter()
        .enumerate()
        .map(|(start, x0)| match solve(problem, &x0, config) {
            Ok(report) => StartOutcome {
                start,
                x0,
                status: report.status,
                final_x: report.final_x,
                final_objectives: report.final_objectives,
                iterations: report.iterations,
                restarts: report.restarts,
                error: report.message,
            },
            Err(e) => StartOutcome {
                start,
                final_x: x0.clone(),
                x0,
                status: Status::Error,
                final_objectives: Vec::new(),
                iterations: 0,
                restarts: 0,
                error: Some(e.to_string()),
            },
        })
        .collect();

    let converged: Vec<usize> = runs
        .iter()
        .filter(|r| r.status == Status::Converged)
        .map(|r| r.start)
        .collect();
    let points: Vec<Vec<f64>> = converged.iter().map(|&i| runs[i].final_objectives.clone()).collect();
    let nondominated = nondominated_filter(&points)?.into_iter().map(|i| converged[i]).collect();
    Ok(Front { runs, nondominated })
}
