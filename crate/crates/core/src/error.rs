use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch between {0}")]
    GridMismatch(&'static str),
    #[error("coefficients are not Hermitian-symmetric (residual {residual:e})")]
    NotHermitian { residual: f64 },
    #[error("field carries energy above the dealiasing cutoff")]
    NotDealiased,
    #[error("mode count {m} out of range 0..={max}")]
    ModeOutOfRange { m: usize, max: usize },
    #[error("invalid node set: {0}")]
    InvalidNodeSet(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown {what} `{value}`")]
    UnknownKind { what: &'static str, value: String },
    #[error("invalid forcing profile: {0}")]
    InvalidProfile(String),
    #[error(
        "CFL violation at t = {t}: dt = {dt:e} exceeds limit {limit:e} (max advective speed {speed:e})"
    )]
    Cfl { t: f64, dt: f64, limit: f64, speed: f64 },
    #[error("non-finite value in {what} at t = {t}")]
    NonFinite { what: &'static str, t: f64 },
    #[error("unstable run at t = {t}: {diagnostic}")]
    Unstable { t: f64, diagnostic: String },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("degenerate tangent basis: vector {index} has residual norm {norm:e}")]
    DegenerateBasis { index: usize, norm: f64 },
    #[error("family is not orthonormal (Gram deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
