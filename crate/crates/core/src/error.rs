use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter is out of its documented range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A matrix contained NaN or infinite entries.
    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    /// Conformality violation between operands.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A rank-one update hit a vanishing Sherman-Morrison denominator.
    #[error("singular rank-one update: |1 + v^T D^-1 u| = {denominator:.3e} below tolerance")]
    SingularUpdate { denominator: f64 },

    /// An instance file could not be parsed or failed structural validation.
    #[error("instance parse error: {0}")]
    Parse(String),

    /// The instance violates a structural invariant needed by the operation.
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    /// The exact solver refuses graphs above its node limit.
    #[error("graph has {n_nodes} nodes, exceeding the exact-search limit of {limit}")]
    OracleTooLarge { n_nodes: usize, limit: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
