use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("expectation has imaginary residual {residual:.3e}")]
    ImaginaryResidual { residual: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("unphysical correlation triple: eigenvalue {index} is {eigenvalue:.3e}")]
    UnphysicalTriple { index: usize, eigenvalue: f64 },

    #[error("Bloch vector has norm {norm}, expected 1")]
    NonUnitVector { norm: f64 },

    #[error("rotation is not proper (det = {det})")]
    ImproperRotation { det: f64 },

    #[error("{name} = {value} is out of range")]
    OutOfRange { name: &'static str, value: f64 },

    #[error("degenerate correlations: {0}")]
    Degenerate(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("network too large for direct evaluation: n = {n}, limit {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("incomplete correlation table: {0}")]
    IncompleteTable(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("grid budget exceeded: {evaluations} evaluations > {budget}")]
    BudgetExceeded { evaluations: u128, budget: u128 },

    #[error("shot count must be positive")]
    ZeroShots,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
