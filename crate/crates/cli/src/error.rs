use thiserror::Error;

pub const EXIT_CONVERGED: u8 = 0;
pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_MAX_ITERS: u8 = 2;
pub const EXIT_CHECK_FAILED: u8 = 3;
pub const EXIT_USAGE: u8 = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{origin}:{line}: {message}")]
    Config {
        origin: String,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Solver(#[from] mocg::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config { .. } | Self::Usage(_) => EXIT_USAGE,
            _ => EXIT_RUNTIME,
        }
    }
}
