use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("subsystem label `{0}` appears in both operands")]
    LabelCollision(String),

    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),

    #[error("duplicate subsystem label `{0}`")]
    DuplicateLabel(String),

    #[error("subsystem `{0}` must have positive dimension")]
    ZeroDimension(String),

    #[error("space mismatch: expected {expected}, found {found}")]
    SpaceMismatch { expected: String, found: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("not a density matrix: {0}")]
    NotDensity(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("operating point violated: {0}")]
    OperatingPoint(String),

    #[error("invalid network layout: {0}")]
    InvalidLayout(String),

    #[error("photon on unrouted mode {0}")]
    UnroutedPhoton(String),

    #[error("integrator failure: {0}")]
    Integrator(String),

    #[error("outcome class REJECT has no correction")]
    RejectedOutcome,
}

pub type Result<T> = std::result::Result<T, Error>;
