use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point outside the type space: {what} = {value} (allowed {lo}..={hi})")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("conditional density is not positive at (v = {v}, k = {k})")]
    DegenerateDensity { v: f64, k: f64 },

    #[error("virtual value has {changes} sign changes in v at k = {k}; the zero is not unique")]
    NonUniqueRoot { k: f64, changes: usize },

    #[error("no sign change of the virtual value in v at k = {k}")]
    NoRoot { k: f64 },

    #[error("invalid threshold curve between k = {k} and k' = {k_prime}: {reason}")]
    InvalidCurve {
        k: f64,
        k_prime: f64,
        reason: &'static str,
    },

    #[error("allocation decreases in v at column k = {k}, between v = {v} and the next node")]
    NotMonotone { v: f64, k: f64 },

    #[error("condition {condition} does not hold: {detail}")]
    Precondition {
        condition: &'static str,
        detail: String,
    },

    #[error("search too large: {what} = {value} exceeds {limit}")]
    SizeLimit {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
