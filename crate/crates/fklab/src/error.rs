use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate bump support: n={n}, r={r} gives radius {radius} >= 1/2")]
    DegenerateSupport { n: u64, r: f64, radius: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("objective evaluated to a non-finite value")]
    NonFiniteObjective,

    #[error("hull resolution too coarse to locate the support preimage (N*R = {nr:.3} < 4)")]
    PreimageNotFound { nr: f64 },

    #[error("perturbation support radius {support} too large for box radius {box_radius}")]
    SupportTooLarge { support: i64, box_radius: i64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed hull CSV at line {line}: {reason}")]
    HullCsv { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
