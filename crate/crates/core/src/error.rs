use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("invalid location: {0}")]
    InvalidLocation(String),
    #[error("invalid weight on edge {edge}: {reason}")]
    InvalidWeight { edge: usize, reason: String },
    #[error("invalid subtree: {0}")]
    InvalidSubtree(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("unsupported exponent p = {p}: {reason}")]
    UnsupportedExponent { p: f64, reason: &'static str },
    #[error("grid mismatch: expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
}

pub type Result<T> = core::result::Result<T, Error>;
