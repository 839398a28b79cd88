use thiserror::Error;

/// Crate-wide error type. The variants mirror how callers are expected to
/// react: configuration and schema errors are caller bugs, domain errors are
/// out-of-range mathematical requests, numerical errors are quadrature or
/// convergence failures, cost-guard refusals protect against accidentally
/// quadratic work.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical error: {0}")]
    Numerics(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("cost guard: {0}")]
    CostGuard(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
