//! Brute-force reference TRMM/TRSM in double precision.
//!
//! Nothing here shares code with the kernels or the recursion: the stored
//! triangle is copied into a dense f64 matrix, `op` is applied by explicit
//! transposition, and the products and substitutions are plain loops.

use crate::dense::{MatRef, MatrixBuffer};
use crate::element::Element;
use crate::error::{LinalgError, Result};
use crate::variants::{Diag, Side, TriangularSpec, Uplo};

/// Dense copy of a stored triangle: the opposite strict triangle is zeroed
/// and the diagonal is 1 for unit-diagonal matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTriangle {
    pub uplo: Uplo,
    pub matrix: MatrixBuffer<f64>,
}

impl DenseTriangle {
    pub fn n(&self) -> usize {
        self.matrix.rows()
    }
}

pub fn materialize<T: Element>(a: MatRef<'_, T>, uplo: Uplo, diag: Diag) -> Result<DenseTriangle> {
    if a.rows() != a.cols() {
        return Err(LinalgError::shape(
            "materialize",
            format!("A must be square, got {}x{}", a.rows(), a.cols()),
        ));
    }
    let matrix = MatrixBuffer::from_fn(a.rows(), a.cols(), |i, j| {
        let stored = match uplo {
            Uplo::Lower => i >= j,
            Uplo::Upper => i <= j,
        };
        if i == j && diag == Diag::Unit {
            1.0
        } else if stored {
            a.get(i, j).to_f64()
        } else {
            0.0
        }
    });
    Ok(DenseTriangle { uplo, matrix })
}

/// `op(A)` as seen by one lane of `B`.
///
/// A left-side problem acts on columns `b` of `B` as `op(A) b`; a right-side
/// problem acts on rows as `b op(A)`, which is `op(A)^T b`. Either way each
/// lane is an independent matrix-vector problem with the matrix `lane_op`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaneOperator {
    pub side: Side,
    /// Dense lane operator; lower triangular iff `lower`.
    pub matrix: MatrixBuffer<f64>,
    pub lower: bool,
}

impl LaneOperator {
    pub fn new<T: Element>(spec: &TriangularSpec, a: MatRef<'_, T>) -> Result<Self> {
        let tri = materialize(a, spec.uplo, spec.diag)?;
        let op = if spec.trans.is_transposed() {
            tri.matrix.transpose()
        } else {
            tri.matrix
        };
        let (matrix, lower) = match spec.side {
            Side::Left => (op, spec.op_is_lower()),
            Side::Right => (op.transpose(), !spec.op_is_lower()),
        };
        Ok(LaneOperator {
            side: spec.side,
            matrix,
            lower,
        })
    }

    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    /// Infinity norm (max absolute row sum) of the lane operator.
    pub fn norm_inf(&self) -> f64 {
        norm_inf(self.matrix.as_ref())
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|i| (0..n).map(|k| self.matrix.get(i, k) * v[k]).sum())
            .collect()
    }

    /// Solve `L x = rhs` by substitution in natural order.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        let mut x = vec![0.0; n];
        let order: Vec<usize> = if self.lower {
            (0..n).collect()
        } else {
            (0..n).rev().collect()
        };
        for &i in &order {
            let mut s = rhs[i];
            for (k, &xk) in x.iter().enumerate() {
                if k != i {
                    s -= self.matrix.get(i, k) * xk;
                }
            }
            x[i] = s / self.matrix.get(i, i);
        }
        Ok(x)
    }

    /// First zero on the diagonal, scanning ascending indices.
    pub fn first_zero_pivot(&self) -> Option<usize> {
        (0..self.n()).find(|&i| self.matrix.get(i, i) == 0.0)
    }
}

fn lane_count(side: Side, b: &MatRef<'_, impl Element>) -> usize {
    match side {
        Side::Left => b.cols(),
        Side::Right => b.rows(),
    }
}

fn read_lane<T: Element>(side: Side, b: &MatRef<'_, T>, lane: usize) -> Vec<f64> {
    match side {
        Side::Left => (0..b.rows()).map(|i| b.get(i, lane).to_f64()).collect(),
        Side::Right => (0..b.cols()).map(|j| b.get(lane, j).to_f64()).collect(),
    }
}

fn write_lane(side: Side, out: &mut MatrixBuffer<f64>, lane: usize, v: &[f64]) {
    for (k, &x) in v.iter().enumerate() {
        match side {
            Side::Left => out.set(k, lane, x),
            Side::Right => out.set(lane, k, x),
        }
    }
}

fn check_conformal<T: Element>(
    op: &'static str,
    spec: &TriangularSpec,
    a: &MatRef<'_, T>,
    b: &MatRef<'_, T>,
) -> Result<()> {
    spec.validate()?;
    let dim = match spec.side {
        Side::Left => b.rows(),
        Side::Right => b.cols(),
    };
    if a.rows() != a.cols() || dim != a.rows() {
        return Err(LinalgError::shape(
            op,
            format!(
                "{} side: A is {}x{}, B is {}x{}",
                spec.side,
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols()
            ),
        ));
    }
    Ok(())
}

/// `alpha * op(A) * B` or `alpha * B * op(A)`.
pub fn oracle_trmm<T: Element>(spec: &TriangularSpec, a: MatRef<'_, T>, b: MatRef<'_, T>) -> Result<MatrixBuffer<f64>> {
    check_conformal("oracle_trmm", spec, &a, &b)?;
    let op = LaneOperator::new(spec, a)?;
    let mut out = MatrixBuffer::zeros(b.rows(), b.cols());
    for lane in 0..lane_count(spec.side, &b) {
        let y: Vec<f64> = op
            .apply(&read_lane(spec.side, &b, lane))
            .into_iter()
            .map(|v| spec.alpha * v)
            .collect();
        write_lane(spec.side, &mut out, lane, &y);
    }
    Ok(out)
}

/// `X` with `op(A) X = alpha B` or `X op(A) = alpha B`.
pub fn oracle_trsm<T: Element>(spec: &TriangularSpec, a: MatRef<'_, T>, b: MatRef<'_, T>) -> Result<MatrixBuffer<f64>> {
    check_conformal("oracle_trsm", spec, &a, &b)?;
    let op = LaneOperator::new(spec, a)?;
    if let Some(index) = op.first_zero_pivot() {
        return Err(LinalgError::Singular { index });
    }
    let mut out = MatrixBuffer::zeros(b.rows(), b.cols());
    for lane in 0..lane_count(spec.side, &b) {
        let rhs: Vec<f64> = read_lane(spec.side, &b, lane)
            .into_iter()
            .map(|v| spec.alpha * v)
            .collect();
        write_lane(spec.side, &mut out, lane, &op.solve(&rhs)?);
    }
    Ok(out)
}

/// Max absolute row sum.
pub fn norm_inf<T: Element>(m: MatRef<'_, T>) -> f64 {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m.get(i, j).to_f64().abs()).sum::<f64>())
        .fold(0.0, nan_max)
}

/// `|a - b|_inf` over two same-shaped matrices, with `a` promoted to f64.
pub fn diff_norm_inf<T: Element>(a: MatRef<'_, T>, b: MatRef<'_, f64>) -> f64 {
    assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()), "diff_norm_inf shape");
    (0..a.rows())
        .map(|i| {
            (0..a.cols())
                .map(|j| (a.get(i, j).to_f64() - b.get(i, j)).abs())
                .sum::<f64>()
        })
        .fold(0.0, nan_max)
}

/// `max` that keeps NaN instead of discarding it.
fn nan_max(acc: f64, v: f64) -> f64 {
    if v.is_nan() || v > acc {
        v
    } else {
        acc
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den == 0.0 || !den.is_finite() {
        f64::INFINITY
    } else {
        num / den
    }
}

/// `|Y - alpha op(A) B|_inf / (|alpha| |A|_inf |B|_inf)`, with `|A|` taken
/// over the materialized triangle. A NaN anywhere yields infinity, so any
/// tolerance check fails.
pub fn trmm_relative_error<T: Element>(
    spec: &TriangularSpec,
    a: MatRef<'_, T>,
    b: MatRef<'_, T>,
    y: MatRef<'_, T>,
) -> Result<f64> {
    let expected = oracle_trmm(spec, a, b)?;
    let tri = materialize(a, spec.uplo, spec.diag)?;
    let err = diff_norm_inf(y, expected.as_ref());
    let den = spec.alpha.abs() * norm_inf(tri.matrix.as_ref()) * norm_inf(b);
    Ok(finite_or_inf(ratio(err, den)))
}

/// `|op(A) X - alpha B|_inf / (|A|_inf |X|_inf)` (or the right-side form).
pub fn trsm_relative_residual<T: Element>(
    spec: &TriangularSpec,
    a: MatRef<'_, T>,
    b: MatRef<'_, T>,
    x: MatRef<'_, T>,
) -> Result<f64> {
    let unscaled = spec.with_alpha(1.0);
    let ax = oracle_trmm(&unscaled, a, x)?;
    let scaled_b = b.to_owned().map(|v| spec.alpha * v.to_f64());
    let tri = materialize(a, spec.uplo, spec.diag)?;
    let err = diff_norm_inf(scaled_b.as_ref(), ax.as_ref());
    let den = norm_inf(tri.matrix.as_ref()) * norm_inf(x);
    Ok(finite_or_inf(ratio(err, den)))
}

fn finite_or_inf(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// `factor * n * eps` for the element kind of `T`.
pub fn tolerance<T: Element>(factor: f64, n: usize) -> f64 {
    factor * n.max(1) as f64 * T::KIND.epsilon()
}
