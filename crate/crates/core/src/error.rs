use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("index {index} out of range for {len} points")]
    InvalidIndex { index: usize, len: usize },
    #[error("invalid input: {0}")]
    InvalidSpec(String),
    #[error("frame is not tight: relative deviation of the frame operator from c*I is {deviation:.3e}")]
    NotTight { deviation: f64 },
    #[error("domination hypothesis violated: |f_{sequence}| > |g| at point {point}")]
    DominationViolated { sequence: usize, point: usize },
    #[error("structural failure: {0}")]
    Structural(String),
    #[error("phase-space point off the lattice: {0}")]
    OffLattice(String),
    #[error("empty family")]
    EmptyFamily,
    #[error("averaging function not admissible: {0}")]
    NotNormalized(String),
    #[error("level {level} outside exhaustion with {levels} levels")]
    LevelOutOfRange { level: usize, levels: usize },
    #[error("container format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
