use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("{what} is not finite at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("unknown problem `{name}`; valid names: {valid}")]
    UnknownProblem { name: String, valid: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("subproblem solver did not converge (best dual value {best_value:e}, gap {gap:e})")]
    SolverFailure { best_value: f64, gap: f64 },

    #[error("oracle supports at most 4 objectives, got {0}")]
    OracleScope(usize),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("line search failed after {evaluations} evaluations (last trial t = {last_t:e})")]
    LineSearch { evaluations: usize, last_t: f64 },

    #[error("empty record list")]
    EmptyRecords,
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
