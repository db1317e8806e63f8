use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("frequency error at line {line}, column {column}: {message}")]
    Frequency {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("ellipticity violated: {context} (minimum {min_eigenvalue:e})")]
    Ellipticity {
        context: String,
        min_eigenvalue: f64,
    },

    #[error("unknown coefficient family `{0}`")]
    UnknownFamily(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("resolution {resolution} too coarse: {reason}")]
    Resolution { resolution: usize, reason: String },

    #[error("{solver} did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("mesh rule violated: h = {h:e} exceeds {limit:e} ({rule})")]
    MeshRule { h: f64, limit: f64, rule: String },

    #[error("flux field has nonzero mean {mean:e}; no potential exists")]
    NonZeroMean { mean: f64 },

    #[error("identity check failed: {0}")]
    Identity(String),

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("config: {0}")]
    Config(String),

    #[error("cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
