use thiserror::Error;

pub type Result<T, E = LinalgError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("cannot split a dimension of size {n}: need at least 2")]
    InvalidSplit { n: usize },

    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("output view overlaps a read-only input in {op}")]
    Aliasing { op: &'static str },

    #[error("rectangle at ({row}, {col}) of size {rows}x{cols} exceeds a {parent_rows}x{parent_cols} view")]
    Bounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
        parent_rows: usize,
        parent_cols: usize,
    },

    /// Zero pivot on the diagonal of a non-unit triangular matrix. `index` is
    /// the row (equivalently column) of the offending diagonal entry.
    #[error("triangular matrix is singular: zero diagonal entry at index {index}")]
    Singular { index: usize },

    #[error("tile of size {n} exceeds the base-kernel limit {limit}")]
    TileTooLarge { n: usize, limit: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl LinalgError {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        LinalgError::Shape {
            op,
            detail: detail.into(),
        }
    }

    /// Shift a singularity index by `offset`; other variants pass through.
    pub(crate) fn offset_singular(self, offset: usize) -> Self {
        match self {
            LinalgError::Singular { index } => LinalgError::Singular { index: index + offset },
            other => other,
        }
    }
}
