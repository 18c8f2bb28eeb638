#![allow(dead_code)]

use rectri::oracle::{norm_inf, trmm_relative_error, trsm_relative_residual};
use rectri::random::{dominant_triangle, seeded, uniform_matrix, Opposite};
use rectri::recursion::{rec_trmm, rec_trsm};
use rectri::{Backend, Element, MatrixBuffer, OpKind, Result, Side, Threshold, TriangularSpec};

pub const OPS: [OpKind; 2] = [OpKind::Trmm, OpKind::Trsm];

/// All 32 (op, side, uplo, trans, diag) combinations.
pub fn all_cases() -> Vec<(OpKind, TriangularSpec)> {
    OPS.iter()
        .flat_map(|&op| TriangularSpec::all_variants().into_iter().map(move |s| (op, s)))
        .collect()
}

pub fn b_shape(side: Side, n: usize, m: usize) -> (usize, usize) {
    match side {
        Side::Left => (n, m),
        Side::Right => (m, n),
    }
}

pub fn problem<T: Element>(
    spec: &TriangularSpec,
    n: usize,
    m: usize,
    opposite: Opposite,
    seed: u64,
) -> (MatrixBuffer<T>, MatrixBuffer<T>) {
    let mut rng = seeded(seed);
    let a = dominant_triangle(n, spec.uplo, spec.diag, opposite, &mut rng);
    let (rows, cols) = b_shape(spec.side, n, m);
    (a, uniform_matrix(rows, cols, &mut rng))
}

pub fn run<T: Element>(
    op: OpKind,
    spec: &TriangularSpec,
    a: &MatrixBuffer<T>,
    b: &MatrixBuffer<T>,
    threshold: usize,
    backend: &Backend,
) -> Result<MatrixBuffer<T>> {
    let mut out = b.clone();
    let threshold = Threshold::new(threshold)?;
    match op {
        OpKind::Trmm => rec_trmm(spec, a.as_ref(), out.as_mut(), threshold, backend)?,
        OpKind::Trsm => rec_trsm(spec, a.as_ref(), out.as_mut(), threshold, backend)?,
    }
    Ok(out)
}

/// Relative error of `out` against the oracle contract for `op`.
pub fn oracle_error<T: Element>(
    op: OpKind,
    spec: &TriangularSpec,
    a: &MatrixBuffer<T>,
    b: &MatrixBuffer<T>,
    out: &MatrixBuffer<T>,
) -> f64 {
    match op {
        OpKind::Trmm => trmm_relative_error(spec, a.as_ref(), b.as_ref(), out.as_ref()),
        OpKind::Trsm => trsm_relative_residual(spec, a.as_ref(), b.as_ref(), out.as_ref()),
    }
    .expect("oracle")
}

/// `factor * n * eps` for `T`.
pub fn tol<T: Element>(factor: f64, n: usize) -> f64 {
    rectri::oracle::tolerance::<T>(factor, n)
}

/// `|x - y|_inf` with both sides promoted to f64.
pub fn diff_inf<T: Element>(x: &MatrixBuffer<T>, y: &MatrixBuffer<T>) -> f64 {
    rectri::oracle::diff_norm_inf(x.as_ref(), y.cast::<f64>().as_ref())
}

pub fn masked_norm<T: Element>(spec: &TriangularSpec, a: &MatrixBuffer<T>) -> f64 {
    let tri = rectri::oracle::materialize(a.as_ref(), spec.uplo, spec.diag).expect("square");
    norm_inf(tri.matrix.as_ref())
}

pub fn bits<T: Element>(m: &MatrixBuffer<T>) -> Vec<u64> {
    m.as_slice().iter().map(|&v| Element::to_f64(v).to_bits()).collect()
}
