//! Dense storage, views and the GEMM the recursion is built on.

mod backend;
mod gemm;
mod matrix;

pub(crate) use backend::partition;
pub use backend::{Backend, BlockSizes};
pub use gemm::{gemm, gemm_ex};
pub use matrix::{MatMut, MatRef, MatrixBuffer};

use crate::element::Element;
use crate::error::{LinalgError, Result};

/// Split point used by the recursion: `floor(n / 2)`.
pub fn split_half(n: usize) -> Result<usize> {
    if n < 2 {
        return Err(LinalgError::InvalidSplit { n });
    }
    Ok(n / 2)
}

/// `B <- alpha * B`. Non-finite entries stay non-finite even for `alpha = 0`.
pub fn scale<T: Element>(alpha: T, mut b: MatMut<'_, T>) {
    if alpha == T::one() {
        return;
    }
    for j in 0..b.cols() {
        for v in b.col_mut(j) {
            *v = alpha * *v;
        }
    }
}
