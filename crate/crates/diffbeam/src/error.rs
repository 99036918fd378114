//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Null offsets repeat, are not sorted, or fall outside (0, pi].
    #[error("invalid null offsets: {0}")]
    InvalidNulls(String),

    /// The (N+1)x(N+1) cosine constraint matrix is numerically singular.
    #[error("singular ideal-pattern constraint matrix (condition number {cond:.3e})")]
    SingularConstraintMatrix { cond: f64 },

    /// Pattern coefficients do not sum to 1.
    #[error("pattern coefficients must sum to 1, got {sum}")]
    NotNormalized { sum: f64 },

    /// The steering constraint matrix D lost row rank.
    #[error("rank-deficient constraint matrix (condition number {cond:.3e})")]
    RankDeficient { cond: f64 },

    /// An order-N design needs at least 2N+1 microphones (2N with a null at pi).
    #[error("{needed} constraints but only {got} microphones")]
    TooFewMicrophones { needed: usize, got: usize },

    /// The WNG slack v must be non-negative for the INC ball to contain h_mWNG.
    #[error("WNG slack must be >= 0 dB, got {0}")]
    InfeasibleSlack(f64),

    /// Trust-region root finding failed even after the eigendecomposition fallback.
    #[error("trust-region hard case could not be resolved")]
    TrustRegionHardCase,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("filter weights are all zero")]
    ZeroFilter,

    #[error("degenerate denominator in directivity factor")]
    DegenerateDenominator,

    #[error("invalid config: {0}")]
    ConfigInvalid(String),

    /// Every frequency in a broadband sweep failed.
    #[error("design failed at every frequency")]
    DesignFailed,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
