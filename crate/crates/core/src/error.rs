use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("wire {wire} out of range for a register of {qubits} qubits")]
    WireOutOfRange { wire: usize, qubits: usize },
    #[error("RBS gate needs two distinct nearest-neighbour wires, got ({a}, {b})")]
    InvalidRbsWires { a: usize, b: usize },
    #[error("vector is not unit norm (norm = {norm})")]
    NotNormalized { norm: f64 },
    #[error("expected {expected} angles, got {got}")]
    AngleCountMismatch { expected: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("gate {gate} would move amplitude outside the ground/unary sectors")]
    LeavesReducedSpace { gate: usize },
    #[error("no shots retained for estimation")]
    NoRetainedShots,
    #[error("invalid probability distribution: {0}")]
    InvalidProbabilities(String),
    #[error("parameter `{name}` = {value} outside [{min}, {max}]")]
    OutOfRange { name: &'static str, value: f64, min: f64, max: f64 },
    #[error("{qubits} qubits exceed the exact density-matrix cap of {cap}; use trajectory sampling")]
    CapacityExceeded { qubits: usize, cap: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("non-finite loss at iteration {iteration}")]
    NonFiniteLoss { iteration: usize },
    #[error("training diverged for member {member} after {attempts} attempts")]
    Diverged { member: usize, attempts: usize },
    #[error("spectrum has {available} nonzero bins, {requested} requested")]
    InsufficientSpectrum { available: usize, requested: usize },
    #[error("Cholesky factorization failed even with jitter {jitter}")]
    CholeskyFailed { jitter: f64 },
    #[error("window of {window} samples (+ horizon {horizon}) exceeds signal length {len}")]
    WindowTooLong { window: usize, horizon: usize, len: usize },
    #[error("ensemble members have mismatched shapes")]
    ShapeMismatch,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = core::result::Result<T, Error>;
