use thiserror::Error;

#[derive(Debug, Error)]
pub enum HtlError {
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("unit search exhausted at bound {bound}: {detail}")]
    UnitSearchExhausted { bound: f64, detail: String },
    #[error("euclidean division stalled in gcd (delta = {delta})")]
    GcdStall { delta: u64 },
    #[error("malformed discriminant data: {0}")]
    BadDiscriminant(String),
    #[error("non-integral matrix entry: {0}")]
    NonIntegralEntry(String),
    #[error("ledger cutoff T = {t} too small for test-function support a = {a}; classes with log(rho) <= a would be missing")]
    LedgerTooSmall { t: f64, a: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HtlError>;
