use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SsvError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("invalid block structure: {0}")]
    Structure(String),

    #[error("cannot form alignment factor from an all-zero matrix")]
    ZeroAlignment,

    #[error("eigenvalue iteration did not converge")]
    EigenFailure,

    #[error("constraint {constraint} is not positive definite")]
    Infeasible { constraint: &'static str },

    #[error("iωI - A is singular at omega = {omega}")]
    SingularResolvent { omega: f64 },

    #[error("solver/structure mismatch: {0}")]
    Incompatible(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Parse(String),

    #[error("empty sweep table")]
    EmptyTable,
}

pub type Result<T> = std::result::Result<T, SsvError>;
