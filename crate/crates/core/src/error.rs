use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid skill distribution: {0}")]
    InvalidDistribution(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The worker has already labeled every task it could be sent to.
    #[error("no eligible task for the current worker")]
    NoEligibleTask,

    #[error("duplicate label for task {task} from worker {worker}")]
    DuplicateLabel { task: usize, worker: usize },

    #[error("target of {target} steps is unattainable; bracket z_B in [{lo}, {hi}] gives E(r_a) in [{e_lo}, {e_hi}]")]
    Unattainable {
        target: f64,
        lo: f64,
        hi: f64,
        e_lo: f64,
        e_hi: f64,
    },

    #[error("no sign change found while bracketing: {0}")]
    NoSignChange(String),

    #[error("not converged: {0}")]
    NotConverged(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
