//! Error types shared across the library.

use thiserror::Error;

/// Errors from the numerical primitives.
#[derive(Debug, Error)]
pub enum MathError {
    #[error("dimension {requested} is outside the supported Sobol table (1..={max})")]
    UnsupportedDimension { requested: usize, max: usize },
    #[error("vector length mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not positive definite (pivot {pivot} failed, jitter up to {max_jitter:e} tried)")]
    NotPositiveDefinite { pivot: usize, max_jitter: f64 },
}

/// Errors raised while building or querying an emulator.
#[derive(Debug, Error)]
pub enum EmulatorError {
    #[error("categorical level {level} out of range for variable {variable} with {cardinality} levels")]
    LevelOutOfRange {
        variable: usize,
        level: usize,
        cardinality: usize,
    },
    #[error("source index {index} out of range (problem declares {num_sources} sources)")]
    SourceOutOfRange { index: usize, num_sources: usize },
    #[error("input dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("training data is empty")]
    EmptyTrainingData,
    #[error("inputs and outputs differ in length ({inputs} vs {outputs})")]
    LengthMismatch { inputs: usize, outputs: usize },
    #[error("all {restarts} restarts failed: {detail}")]
    TrainingFailed { restarts: usize, detail: String },
    #[error(transparent)]
    Math(#[from] MathError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Errors from dataset ingestion.
#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("sidecar parse error: {0}")]
    Sidecar(String),
    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error(transparent)]
    Emulator(#[from] EmulatorError),
}

/// Errors from acquisition optimization.
#[derive(Debug, Error)]
pub enum AcquisitionError {
    #[error("inner search for source {index} produced no finite acquisition value")]
    NoFiniteCandidate { index: usize },
    #[error(transparent)]
    Emulator(#[from] EmulatorError),
}

/// Errors from the optimization campaign.
#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("problem is invalid: {0}")]
    InvalidProblem(String),
    #[error("evaluator for source {index} ({name}) failed: {detail}")]
    EvaluatorFailed {
        index: usize,
        name: String,
        detail: String,
    },
    #[error("initialization requires a positive count for at least one source")]
    EmptyInitialization,
    #[error(transparent)]
    Emulator(#[from] EmulatorError),
    #[error(transparent)]
    Acquisition(#[from] AcquisitionError),
    #[error(transparent)]
    Math(#[from] MathError),
}

/// Errors from the benchmark registry.
#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error("unknown benchmark family '{0}'")]
    UnknownFamily(String),
    #[error("unknown variant {variant} for family {family}")]
    UnknownVariant { family: String, variant: usize },
    #[error("input dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coordinate {dim} = {value} is outside the domain [{lo}, {hi}]")]
    OutOfDomain {
        dim: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
}
