use thiserror::Error;

/// Errors produced by model construction, evaluation and simulation.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("argument {value} outside function domain [{lo}, {hi}]")]
    DomainViolation { value: f64, lo: f64, hi: f64 },

    #[error("passivity violation: {0}")]
    PassivityViolation(String),

    #[error("no closed form: {0}")]
    NoClosedForm(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("netlist error: {0}")]
    Netlist(#[from] crate::netlist::NetlistError),

    #[error("integration failure at path {path}, step {step}: {reason}")]
    StepFailed {
        path: u64,
        step: usize,
        reason: String,
    },

    #[error("dilation requires a series-decomposable dissipator")]
    NonSeriesModel,

    #[error("dilation requires constant inductance")]
    NonConstantInductance,

    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("truncation too small: min eigenvalue {min_eig:.3e}; increase the Fock dimension")]
    TruncationTooSmall { min_eig: f64 },

    #[error("insufficient replicates: got {got}, need at least {need}")]
    InsufficientReplicates { got: usize, need: usize },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
