use thiserror::Error;

/// Errors raised by the exact and Monte Carlo routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("budget exceeded at step {step}: {detail}")]
    BudgetExceeded { step: u32, detail: String },

    #[error("budget exceeded during certificate scan at N={block_size}, T={block_time}: {source}")]
    ScanBudgetExceeded {
        block_size: u64,
        block_time: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("no crossing of h(p, q) = 1 for q in [0, 1] at p = {p} (h(p, 1) = {h_at_one})")]
    NoCrossing { p: f64, h_at_one: f64 },

    #[error("fixed-point iteration did not converge after {iterations} iterations")]
    IterationCap { iterations: u64 },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. } | Error::ScanBudgetExceeded { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
