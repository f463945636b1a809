use thiserror::Error;

/// Errors produced by the simulation kernel.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate channel: column {column} is (numerically) dependent on the previous ones")]
    DegenerateChannel { column: usize },

    #[error("ill-conditioned matrix: condition estimate {condition:.3e} exceeds {threshold:.1e}")]
    IllConditioned { condition: f64, threshold: f64 },

    #[error("codebook of {bits} bits exceeds the {max}-bit limit")]
    Capacity { bits: u32, max: u32 },

    #[error("zero vector cannot be quantized")]
    ZeroVector,

    #[error("target rate gap r = {r} is below the combining loss floor (c = {c:.4} <= 0)")]
    InfeasibleTarget { r: f64, c: f64 },

    #[error("invalid argument: {0}")]
    Domain(String),

    #[error("empty sample")]
    EmptySample,
}

pub type Result<T> = std::result::Result<T, Error>;
