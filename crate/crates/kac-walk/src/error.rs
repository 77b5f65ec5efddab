use thiserror::Error;

/// Errors raised by the walk, coupling, and experiment layers.
#[derive(Debug, Error)]
pub enum Error {
    /// State-space dimension below 2; the walk needs a coordinate pair.
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),

    /// An update pair that is not strictly ordered or is out of range.
    #[error("invalid coordinate pair ({i}, {j}) for dimension {n} (need i < j <= n, 1-based)")]
    InvalidIndices { i: usize, j: usize, n: usize },

    /// A state vector whose squared norm is too far from 1.
    #[error("state norm^2 = {norm_sq} deviates from 1 beyond tolerance {tol}")]
    NormOutOfTolerance { norm_sq: f64, tol: f64 },

    /// Normalizing the zero vector (or a vector with non-finite entries).
    #[error("cannot normalize: vector has zero or non-finite norm")]
    DegenerateVector,

    /// Arcsine coupling invoked with a zero-amplitude block statistic.
    #[error("degenerate arcsine parameters: amplitudes must be positive (B = {b}, D = {d})")]
    DegenerateArcsine { b: f64, d: f64 },

    /// Coupling tuning exponents that violate the required ordering.
    #[error("invalid tuning: need 1 < p < q' < q/2, got p = {p}, q' = {q_prime}, q = {q}")]
    InvalidTuning { p: f64, q: f64, q_prime: f64 },

    /// A pair schedule whose length or pairs are inconsistent.
    #[error("invalid pair schedule: {0}")]
    InvalidSchedule(String),

    /// Mismatched dimensions between two coupled states.
    #[error("coupled states have different dimensions: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    /// A malformed experiment configuration; `key` names the offending entry.
    #[error("config error at key `{key}`: {message}")]
    Config { key: String, message: String },

    /// Experiment parameters that cannot be run as given.
    #[error("invalid experiment parameters: {0}")]
    InvalidExperiment(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialize(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
