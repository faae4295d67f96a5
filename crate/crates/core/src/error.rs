use thiserror::Error;

/// Crate-wide error type. Protocol failure paths carry no partial data.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no usable subcarrier")]
    NoUsableSubcarrier,
    #[error("no positive-power solution")]
    InfeasiblePower,
    #[error("negative knapsack budget")]
    NegativeBudget,
    #[error("oracle size limit")]
    OracleSizeLimit,
    #[error("zero mean capacity")]
    ZeroCapacity,
    #[error("no data frame affordable")]
    ZeroDataFrames,
    #[error("amplification budget exceeded")]
    AmplificationBudgetExceeded,
    #[error("bad key length")]
    KeyLength,
    #[error("bit-length mismatch")]
    LengthMismatch,
    #[error("resumption secret already consumed")]
    ResumptionConsumed,
    #[error("reconciliation failure")]
    ReconcileFailure,
    #[error("integrity failure")]
    IntegrityFailure,
    #[error("malformed wire message")]
    DecodeFailure,
    #[error("enrolment exhausted")]
    EnrolmentExhausted,
    #[error("unknown device")]
    UnknownDevice,
}

pub type Result<T> = std::result::Result<T, Error>;
