use std::path::PathBuf;

use crate::spin_ops::BasisTag;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("site {site} out of range for a chain of {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("basis mismatch: {left:?} vs {right:?}")]
    BasisMismatch { left: BasisTag, right: BasisTag },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operator is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("propagator is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("Kraus completeness violated (residual {residual:.3e})")]
    Completeness { residual: f64 },

    #[error("eigensolver failed: {0}")]
    EigenSolver(String),

    #[error("spectrum is numerically defective (condition {score:.3e}); use a Jordan-chain expansion")]
    Defective { score: f64 },

    #[error("{count} complex eigenvalue(s) without a conjugate partner")]
    UnpairedComplex { count: usize },

    #[error("overlap undefined: bath-projected norm {norm:.3e} is below threshold")]
    UndefinedOverlap { norm: f64 },

    #[error("non-positive purity {value:.3e}")]
    NonPositivePurity { value: f64 },

    #[error("insufficient points: need {needed}, found {found}")]
    InsufficientPoints { needed: usize, found: usize },

    #[error("requested Jordan order {order} exceeds the numerical block size (residual {residual:.3e})")]
    JordanOrder { order: usize, residual: f64 },

    #[error("generalized eigenbasis is incomplete: {0}")]
    IncompleteBasis(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("no experiment outputs found in {0}")]
    MissingOutputs(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the command-line runner: 1 for configuration
    /// and usage problems, 2 for everything raised by the numerics or I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::MissingOutputs(_) => 1,
            _ => 2,
        }
    }
}
