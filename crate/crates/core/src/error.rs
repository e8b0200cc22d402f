use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate window: dimension {dim}, radius {radius}")]
    DegenerateWindow { dim: usize, radius: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular matrix: determinant is zero")]
    SingularMatrix,

    #[error("integer overflow in lattice arithmetic")]
    Overflow,

    #[error("dilation matrix is not expansive (eigenvalue modulus {0} <= 1)")]
    NotExpansive(f64),

    #[error("coset scan found {found} classes, expected {expected}")]
    CosetScan { found: usize, expected: usize },

    #[error("unknown catalog system `{0}`")]
    UnknownSystem(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("system is not certified as an NTF generator ({0})")]
    NotCertified(String),

    #[error("operator window (radius {operator}) does not match fiber window (radius {fibers})")]
    WindowMismatch { operator: usize, fibers: usize },

    #[error("operator is not positive semidefinite: {0}")]
    NotPositive(String),

    #[error("systems are not mutually orthogonal (cross Gramian {0:e})")]
    NotOrthogonal(f64),

    #[error("generator is not quasi-orthogonal at xi = {xi:?} (periodization {per})")]
    NotQuasiOrthogonal { xi: Vec<f64>, per: f64 },

    #[error("s = {0:?} lies in the dilated lattice")]
    InSublattice(Vec<i64>),

    #[error("degenerate system: {0}")]
    Degenerate(String),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
