use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("degenerate geometry: a + b must be positive (got {0})")]
    DegenerateGeometry(f64),

    #[error("horizon bound is not finite (Lojasiewicz constant estimated as zero)")]
    NonFiniteHorizon,

    #[error("step size must be positive (got {0})")]
    NonPositiveStep(f64),

    #[error("phase portrait requires a balanced head (c = 0), got |c| = {0}")]
    NotPendulum(f64),

    #[error("Lojasiewicz estimation failed: no scanned exponent yields d > {0:e}")]
    LojasiewiczEstimation(f64),

    #[error("exponential threshold violated: hyperbolicity at the optimum is not guaranteed")]
    ThresholdViolated,

    #[error("iteration bound {bound:e} exceeds cap {cap}")]
    IterationOverflow { bound: f64, cap: u64 },

    #[error("feedback rollout stalled at distance {dist:.3} from the steady set")]
    RolloutStalled { dist: f64 },

    #[error("value table io: {0}")]
    TableIo(#[from] std::io::Error),

    #[error("value table format: {0}")]
    TableFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;
