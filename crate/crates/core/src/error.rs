use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count mismatch: {0} vs {1}")]
    QubitMismatch(usize, usize),

    #[error("{n} qubits exceeds the dense limit of {limit} (set CDADAPT_DENSE_LIMIT to raise it)")]
    DenseLimit { n: usize, limit: usize },

    #[error("invalid Pauli string {0:?}")]
    ParsePauli(String),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("operator is not Hermitian: {0}")]
    NonHermitian(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid ordering: {0}")]
    InvalidOrdering(String),

    #[error("{name} = {value} outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value, lo, hi })
    }
}
