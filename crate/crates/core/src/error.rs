use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("characteristic {0} is not prime")]
    NonPrimeP(u64),
    #[error("field order {0} is not a prime power")]
    NotPrimePower(u64),
    #[error("polynomial {0:?} is reducible over F_{1}")]
    ReduciblePolynomial(Vec<u32>, u32),
    #[error("invalid modulus polynomial: {0}")]
    InvalidPolynomial(String),
    #[error("no built-in irreducible polynomial for q = {0}; supply one")]
    UnsupportedExtension(u64),
    #[error("field of order {0} is too large for this toolkit")]
    FieldTooLarge(u64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("operands live over different fields")]
    FieldMismatch,
    #[error("index {index} out of range for a space of size {size}")]
    IndexOutOfRange { index: u64, size: u64 },
    #[error("enumeration of {requested} items exceeds the cap of {cap}")]
    EnumerationCapExceeded { requested: u128, cap: u128 },
    #[error("rank {k} is impossible for a {rows}x{cols} matrix")]
    InvalidRank { rows: usize, cols: usize, k: usize },
    #[error("work estimate {requested} exceeds the budget of {budget}")]
    BudgetExceeded { requested: u128, budget: u128 },
    #[error("audit failure: {0}")]
    AuditFailure(String),
    /// Carries the best iterate seen.
    #[error("power iteration did not converge in {iterations} iterations (residual {residual:e}, lambda ~ {lambda_est})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        lambda_est: f64,
    },
    #[error("{vertices} vertices exceed the spectral cap of {cap}")]
    SpectralCapExceeded { vertices: u64, cap: u64 },
    #[error("requested {requested} distinct elements from a set of {available}")]
    SizeTooLarge { requested: u64, available: u64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonPrimeP(_)
            | Error::NotPrimePower(_)
            | Error::ReduciblePolynomial(..)
            | Error::InvalidPolynomial(_)
            | Error::UnsupportedExtension(_)
            | Error::FieldTooLarge(_)
            | Error::DimensionMismatch(_)
            | Error::FieldMismatch
            | Error::IndexOutOfRange { .. }
            | Error::InvalidRank { .. }
            | Error::SizeTooLarge { .. }
            | Error::Config(_)
            | Error::Io(_) => 2,
            Error::AuditFailure(_) | Error::NoConvergence { .. } => 3,
            Error::EnumerationCapExceeded { .. }
            | Error::BudgetExceeded { .. }
            | Error::SpectralCapExceeded { .. } => 4,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
