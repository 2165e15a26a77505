use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter is finite and well-formed but the resulting object fails
    /// one or more of its defining conditions.
    #[error("range error: {value_name} = {value} violates {}", violated.join(", "))]
    Range {
        value_name: &'static str,
        value: f64,
        violated: Vec<String>,
    },

    /// Numerical configuration (grid size, quadrature resolution, ...) is unusable.
    #[error("configuration error: {0}")]
    Config(String),

    /// Scenario parsing or validation failed; every problem found is listed.
    #[error("schema error: {}", .0.join("; "))]
    Schema(Vec<String>),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
