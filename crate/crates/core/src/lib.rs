//! Nonlinear conjugate gradient methods for unconstrained multiobjective
//! optimization that replace the line search with a fixed stepsize formula.
//!
//! The crate is organized bottom-up:
//!
//! - [`problem`]: the objective abstraction and a catalog of analytic test problems.
//! - [`subproblem`]: `ψ(x, d)`, the steepest descent direction `v(x)` and `θ(x)`.
//! - [`stepsize`]: metrics, the fixed stepsize, the `ρ_k`/`η_k` diagnostic and a
//!   Wolfe line search used as a baseline.
//! - [`directions`]: the five `β` families and the direction update.
//! - [`solver`]: the iteration itself, with per-iteration invariant checking.
//! - [`zoutendijk`], [`pareto`]: post-run diagnostics and multistart front approximation.
//! - [`checks`]: self-contained invariant suites used by `mocg check`.
//!
//! ```
//! use mocg::{builtin_problem, solve, SolveConfig, Status};
//!
//! let problem = builtin_problem("quad-pair", 2).unwrap();
//! let report = solve(&problem, &[0.0, 1.0], &SolveConfig::default()).unwrap();
//! assert_eq!(report.status, Status::Converged);
//! assert!(report.final_x[1].abs() <= 1e-6);
//! ```

pub mod checks;
pub mod directions;
mod error;
pub mod linalg;
pub mod pareto;
pub mod problem;
pub mod solver;
pub mod stepsize;
pub mod subproblem;
pub mod zoutendijk;

pub use directions::{BetaFamily, BetaInputs, BetaRule, GuardPolicy};
pub use error::{Error, Result};
pub use pareto::{multistart_pareto, nondominated_filter, Front};
pub use problem::{builtin_problem, Jacobian, Problem, CATALOG};
pub use solver::{solve, IterationRecord, SolveConfig, SolveReport, Status, StepsizeMode};
pub use stepsize::MetricProvider;
pub use subproblem::{psi, solve_subproblem, SubproblemSolution};
pub use zoutendijk::{zoutendijk_diag, ZoutendijkSummary};
