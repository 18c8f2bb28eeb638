use crate::variants::{Side, TriangularSpec, Uplo};

/// Reduces any of the 16 variants to one canonical shape: a lower
/// triangular `n x n` operator `L` applied to independent lanes of length
/// `n`.
///
/// * Right-side problems are left-side problems on the transpose, so the
///   operator becomes `op(A)^T` and the lanes are rows of `B`.
/// * An upper triangular operator is a lower one on reversed indices.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LowerFrame {
    n: usize,
    side: Side,
    /// Operator equals `A` (otherwise `A^T`).
    op_is_a: bool,
    reversed: bool,
}

impl LowerFrame {
    pub(crate) fn new(spec: &TriangularSpec, n: usize) -> Self {
        let transposed = spec.trans.is_transposed();
        let op_is_a = match spec.side {
            Side::Left => !transposed,
            Side::Right => transposed,
        };
        let op_lower = op_is_a == (spec.uplo == Uplo::Lower);
        LowerFrame {
            n,
            side: spec.side,
            op_is_a,
            reversed: !op_lower,
        }
    }

    #[inline(always)]
    pub(crate) fn physical(&self, r: usize) -> usize {
        if self.reversed {
            self.n - 1 - r
        } else {
            r
        }
    }

    /// Position in `A` of logical operator entry `L(r, c)`.
    #[inline(always)]
    pub(crate) fn a_index(&self, r: usize, c: usize) -> (usize, usize) {
        let (r, c) = (self.physical(r), self.physical(c));
        if self.op_is_a {
            (r, c)
        } else {
            (c, r)
        }
    }

    /// Position in `B` of logical element `r` of lane `lane`.
    #[inline(always)]
    pub(crate) fn b_index(&self, lane: usize, r: usize) -> (usize, usize) {
        match self.side {
            Side::Left => (self.physical(r), lane),
            Side::Right => (lane, self.physical(r)),
        }
    }

    pub(crate) fn lane_count(&self, b_rows: usize, b_cols: usize) -> usize {
        match self.side {
            Side::Left => b_cols,
            Side::Right => b_rows,
        }
    }

    pub(crate) fn side(&self) -> Side {
        self.side
    }
}
