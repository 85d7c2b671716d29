use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("invalid site selection: {0}")]
    InvalidSites(String),

    #[error("state has zero norm")]
    ZeroState,

    #[error("total dimension {0} exceeds the supported maximum of 2^14")]
    TooLarge(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parameter a = {0} outside the open interval (0, 1/2)")]
    ParameterOutOfRange(f64),

    #[error("{0} is not Hermitian (max deviation {1:e})")]
    NotHermitian(&'static str, f64),

    #[error("Pauli strings {0} and {1} do not commute")]
    NonCommuting(String, String),

    #[error("generators are not independent: {0} is already in the group")]
    DependentGenerators(String),

    #[error("symmetry list is empty")]
    EmptySymmetries,

    #[error("symmetry {index} is not unitary (deviation {deviation:e})")]
    NonUnitarySymmetry { index: usize, deviation: f64 },

    #[error("symmetry {index} does not fix the state (residual {residual:e})")]
    NotASymmetry { index: usize, residual: f64 },

    #[error("witness references symmetry {index} but only {len} are available")]
    SymmetryIndexOutOfRange { index: usize, len: usize },

    #[error("invalid witness: {0}")]
    InvalidWitness(String),

    #[error("completeness violated (residual {residual:e}) {context}")]
    Completeness { residual: f64, context: String },

    #[error("measurement operator {outcome} at branch {path:?} is singular (smallest singular value {sigma_min:e})")]
    SingularMeasurement {
        path: Vec<usize>,
        outcome: usize,
        sigma_min: f64,
    },

    #[error("correction at branch {path:?}, outcome {outcome}, site {site} is not unitary")]
    NonUnitaryCorrection {
        path: Vec<usize>,
        outcome: usize,
        site: usize,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
