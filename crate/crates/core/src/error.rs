//! Error types for the crate's public surfaces.

use thiserror::Error;

/// Rejections at the action type boundary.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActionError {
    #[error("arm bits (0,0) are invalid: both arms of a group cannot run AEG at once")]
    BothArmsAeg,
    #[error("a pause action (bits 1,1) cannot carry a target (got fruit {0})")]
    TargetOnPause(usize),
    #[error("arm id {0} outside 1..=4")]
    InvalidArm(u8),
}

/// Geometry-level failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorkspaceError {
    #[error("arm id {0} outside 1..=4")]
    InvalidArm(u8),
    #[error("target {target:?} is not reachable by arm {arm}")]
    Unreachable { arm: u8, target: [f64; 3] },
    #[error("invalid workspace config: {0}")]
    InvalidConfig(String),
}

/// Layout construction and generation failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LayoutError {
    #[error("layout must not be empty in this context")]
    Empty,
    #[error("fruit {0} has non-finite coordinates")]
    NonFinitePosition(usize),
    #[error("fruit {fruit} required_attempts {got} outside 1..=3")]
    BadAttemptCount { fruit: usize, got: u8 },
    #[error("positions and required_attempts lengths differ ({positions} vs {attempts})")]
    LengthMismatch { positions: usize, attempts: usize },
    #[error("fruits {0} and {1} closer than 1 mm")]
    DuplicatePosition(usize, usize),
    #[error("failure profile exceeds fruit count ({doubles}+{triples} > {n})")]
    ProfileTooLarge { n: usize, doubles: usize, triples: usize },
    #[error("could not place {placed}/{requested} fruits after {rejections} rejections")]
    GenerationFailed {
        requested: usize,
        placed: usize,
        rejections: usize,
    },
    #[error("unknown layout preset {0:?}")]
    UnknownPreset(String),
}

/// Environment step and mask failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("illegal action for group {group}: {reason}")]
    IllegalAction { group: usize, reason: String },
    #[error("state violates invariants: {0:?}")]
    InvalidState(Vec<crate::types::Violation>),
    #[error("both arms of a group cannot be in AEG")]
    BothArmsAeg,
    #[error("layout has {n} fruits but the observation is sized for {n_max}")]
    TooManyFruits { n: usize, n_max: usize },
}

/// Exhaustive-search failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("instance has {0} fruits; the search is capped at {1}")]
    TooLarge(usize, usize),
    #[error("layout has grasp failures; pass with_failures to search it anyway")]
    HasFailures,
    #[error("search budget exceeded after {0} expanded nodes")]
    SearchBudgetExceeded(usize),
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// Harness failures, mapped to CLI exit codes.
#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Ppo(#[from] PpoError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

/// Training and checkpoint failures.
#[derive(Debug, Error)]
pub enum PpoError {
    #[error("non-finite loss during update: {0}")]
    NonFiniteLoss(String),
    #[error("checkpoint version {got} unsupported (expected {expected})")]
    BadVersion { got: u32, expected: u32 },
    #[error("checkpoint shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}
