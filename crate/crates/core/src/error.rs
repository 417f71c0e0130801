use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("instance too large: {entries} matrix entries exceeds cap of {cap}")]
    InstanceTooLarge { entries: usize, cap: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unsupported local dimension {0}; this routine requires qubits")]
    UnsupportedDimension(usize),

    #[error("measurement is not informationally complete (gram rank {rank} < {required}, smallest gram eigenvalue {smallest:e})")]
    NotInformationallyComplete {
        rank: usize,
        required: usize,
        smallest: f64,
    },

    #[error("graph too large for exhaustive expansion (n = {n} > {max}); use per-partition block expansion instead")]
    GraphTooLarge { n: usize, max: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
