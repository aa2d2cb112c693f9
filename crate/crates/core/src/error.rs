use crate::simplex_opt::OptimizerResult;

/// Error type shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid grid function: {0}")]
    InvalidGridFunction(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("bank validation failed: {0}")]
    InvalidBank(String),
    #[error("sample validation failed: {0}")]
    InvalidSample(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("covariance factorization failed: {0}")]
    Factorization(String),
    #[error("codeword search failed: {0}")]
    CodewordSearch(String),
    #[error("optimizer did not converge: gap {gap:.3e} after {iterations} iterations", gap = .0.fw_gap, iterations = .0.iterations)]
    NonConvergence(Box<OptimizerResult>),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
