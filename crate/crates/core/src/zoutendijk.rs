//! Post-run summaries of the Zoutendijk-type sums
//! `Σ ψ²(x^k, d^k)/‖d^k‖²` and `Σ ψ²(x^k, v^k)/‖d^k‖²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::IterationRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoutendijkSummary {
    /// Final value of `Σ ψ²(x^k, d^k)/‖d^k‖²`.
    pub total: f64,
    /// Final value of `Σ ψ²(x^k, v^k)/‖d^k‖²`.
    pub psi_v_total: f64,
    /// The last `window` increments of the first sum, oldest first.
    pub tail_increments: Vec<f64>,
    /// Largest entry of `tail_increments`.
    pub tail_max: f64,
    /// Whether both partial sums never decrease across the records.
    pub nondecreasing: bool,
    /// `min_k τ_k` over the records.
    pub min_tau: f64,
}

/// Summarises the sums over `records`, which must be unthinned for the tail
/// increments to be consecutive.
pub fn zoutendijk_diag(records: &[IterationRecord], window: usize) -> Result<ZoutendijkSummary> {
    let last = records.last().ok_or(Error::EmptyRecords)?;
    if window == 0 {
        return Err(Error::invalid("window must be at least 1"));
    }
    let start = records.len().saturating_sub(window);
    let tail_increments: Vec<f64> = records[start..].iter().map(|r| r.zoutendijk_term).collect();
    let nondecreasing = records.windows(2).all(|w| {
        w[1].zoutendijk_partial >= w[0].zoutendijk_partial && w[1].psi_v_partial >= w[0].psi_v_partial
    });
    Ok(ZoutendijkSummary {
        total: last.zoutendijk_partial,
        psi_v_total: last.psi_v_partial,
        tail_max: tail_increments.iter().copied().fold(0.0, f64::max),
        tail_increments,
        nondecreasing,
        min_tau: records.iter().map(|r| r.tau).fold(f64::INFINITY, f64::min),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::builtin_problem;
    use crate::solver::{solve, SolveConfig};

    #[test]
    fn empty_records_are_an_error() {
        assert_eq!(zoutendijk_diag(&[], 10), Err(Error::EmptyRecords));
    }

    #[test]
    fn sums_are_finite_and_monotone() {
        let p = builtin_problem("jos1", 5).unwrap();
        let report = solve(&p, &[4.0, -3.0, 1.0, 0.0, 7.0], &SolveConfig::default()).unwrap();
        let z = zoutendijk_diag(&report.records, 10).unwrap();
        assert!(z.total.is_finite() && z.nondecreasing);
        assert!(z.psi_v_total >= z.total * 0.0);
        assert!(z.tail_increments.len() <= 10);
        let sum: f64 = report.records.iter().map(|r| r.zoutendijk_term).sum();
        assert!((sum - z.total).abs() <= 1e-12 * sum.max(1.0));
    }
}
