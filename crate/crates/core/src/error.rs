use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("unsupported dimension {0} (expected 2..=16)")]
    UnsupportedDimension(usize),

    #[error("vectors are not orthonormal (worst Gram deviation {0:.3e})")]
    NotOrthonormal(f64),

    #[error("completion projector is numerically zero")]
    RankDeficient,

    #[error("invalid constellation spec: {0}")]
    InvalidSpec(String),

    #[error("spec {0} has no group of d-1 states")]
    NotRestricted(String),

    #[error("expected {expected} angles, got {got}")]
    AngleCount { expected: usize, got: usize },

    #[error("unsupported construction: {0}")]
    Unsupported(String),

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("group index {0} out of range")]
    GroupOutOfRange(usize),

    #[error("invalid permutation: {0}")]
    NotPermutation(String),

    #[error(
        "state {member} of group {group} is not unbiased to group 0 \
         (component modulus off by {deviation:.3e})"
    )]
    NotUnbiased {
        group: usize,
        member: usize,
        deviation: f64,
    },

    #[error("malformed state-set file: {0}")]
    StateFile(String),

    #[error("campaign needs at least one trial")]
    NoTrials,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
