//! Error types shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

/// Failures of the vehicle models.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: String, reason: String },
    #[error("unknown gear {gear} (gear table has {available} entries)")]
    UnknownGear { gear: i64, available: usize },
    #[error("integration produced a non-finite value in channel `{channel}`")]
    NonFinite { channel: String },
}

/// Configuration problems: unknown labels, bad dimensions, malformed files.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown channel label `{0}`")]
    UnknownLabel(String),
    #[error("dimension mismatch for `{what}`: expected {expected}, got {got}")]
    Dimension {
        what: String,
        expected: usize,
        got: usize,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("failed to read `{path}`: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("failed to parse `{path}`: {message}")]
    Parse { path: PathBuf, message: String },
}

/// Errors raised while a predictor advances one step.
#[derive(Debug, Error)]
pub enum PredictorError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Bridge(#[from] BridgeError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Errors of the observer loop.
#[derive(Debug, Error)]
pub enum ObserverError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("predictor failed at step {step}: {source}")]
    Predictor {
        step: usize,
        #[source]
        source: PredictorError,
    },
    #[error("observer diverged at step {step}: non-finite value in `{channel}`")]
    Diverged { step: usize, channel: String },
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Dataset schema and IO errors.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("missing required channel `{0}`")]
    MissingChannel(String),
    #[error("channel `{channel}` has {got} samples, expected {expected}")]
    LengthMismatch {
        channel: String,
        expected: usize,
        got: usize,
    },
    #[error("malformed row at line {line}: {message}")]
    MalformedRow { line: usize, message: String },
    #[error("dataset has no samples")]
    Empty,
    #[error("invalid sample period: {0}")]
    InvalidPeriod(f64),
    #[error("plant diverged at t = {time} s: {source}")]
    PlantDiverged {
        time: f64,
        #[source]
        source: DynamicsError,
    },
    #[error("io error on `{path}`: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(String),
}

/// Errors of the tuning loop and the surrogate.
#[derive(Debug, Error)]
pub enum TuneError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("zero-norm ground-truth channel `{0}` cannot be weighted")]
    ZeroNormChannel(String),
    #[error("surrogate needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error(transparent)]
    Observer(#[from] ObserverError),
    #[error("tuning aborted after {completed} evaluations: {source}")]
    Aborted {
        completed: usize,
        /// Every evaluation finished before the failure.
        partial: Box<crate::tuner::History>,
        #[source]
        source: ObserverError,
    },
}

/// External-predictor protocol errors. Every one of them ends the run.
#[derive(Debug, Error)]
pub enum BridgeError {
    #[error("handshake failed: {0}")]
    Handshake(String),
    #[error("protocol version mismatch: local `{local}`, remote `{remote}`")]
    VersionMismatch { local: String, remote: String },
    #[error("timed out after {0:?} waiting for the peer")]
    Timeout(std::time::Duration),
    #[error("field `{field}` has length {got}, expected {expected}")]
    Dimension {
        field: String,
        expected: usize,
        got: usize,
    },
    #[error("out-of-order step index: expected {expected}, got {got}")]
    OutOfOrder { expected: u64, got: u64 },
    #[error("stream closed (last good step: {last_good_step:?})")]
    StreamClosed { last_good_step: Option<u64> },
    #[error("malformed record: {0}")]
    Malformed(String),
    #[error("remote predictor error at step {step}: {message}")]
    Remote { step: u64, message: String },
    #[error("bad address `{0}`")]
    Address(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for BridgeError {
    fn from(e: std::io::Error) -> Self {
        BridgeError::Io(e.to_string())
    }
}

/// Metric and report failures.
#[derive(Debug, Error)]
pub enum ReportError {
    #[error("series lengths differ: estimate {estimate}, truth {truth}")]
    LengthMismatch { estimate: usize, truth: usize },
    #[error("metric needs at least one sample")]
    Empty,
    #[error("contender `{contender}` has no channel `{channel}`")]
    MissingChannel { contender: String, channel: String },
    #[error("nothing to compare")]
    NoContenders,
    #[error(transparent)]
    Data(#[from] DataError),
}
