//! Tile-sized TRMM/TRSM kernels that terminate the recursion.
//!
//! Each lane (a column of `B` for left-side problems, a row for right-side
//! ones) is independent, mirroring one workgroup per column on a GPU. Within
//! a lane the solve runs the row-normalized elimination: every row is first
//! divided by its diagonal, then step `p` subtracts the contribution of the
//! now-final row `p - 1` from all rows below it.

use crate::dense::{partition, Backend, MatMut, MatRef};
use crate::element::Element;
use crate::error::{LinalgError, Result};
use crate::kernels::frame::LowerFrame;
use crate::variants::{Side, TriangularSpec};

pub const DEFAULT_TILE_LIMIT: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelConfig {
    /// Largest triangular dimension a base kernel accepts.
    pub tile_limit: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            tile_limit: DEFAULT_TILE_LIMIT,
        }
    }
}

fn check_operands<T: Element>(
    op: &'static str,
    spec: &TriangularSpec,
    a: &MatRef<'_, T>,
    b: &MatMut<'_, T>,
    config: &KernelConfig,
) -> Result<usize> {
    spec.validate()?;
    if a.rows() != a.cols() {
        return Err(LinalgError::shape(
            op,
            format!("A must be square, got {}x{}", a.rows(), a.cols()),
        ));
    }
    let n = a.rows();
    let conformal = match spec.side {
        Side::Left => b.rows() == n,
        Side::Right => b.cols() == n,
    };
    if !conformal {
        return Err(LinalgError::shape(
            op,
            format!(
                "{} side needs B conformal with {n}x{n} A, got {}x{}",
                spec.side,
                b.rows(),
                b.cols()
            ),
        ));
    }
    if n > config.tile_limit {
        return Err(LinalgError::TileTooLarge {
            n,
            limit: config.tile_limit,
        });
    }
    if !a.is_disjoint_from(b) {
        return Err(LinalgError::Aliasing { op });
    }
    Ok(n)
}

/// Solve in place with the default tile limit.
pub fn trsm_base<T: Element>(
    spec: &TriangularSpec,
    a: MatRef<'_, T>,
    b: MatMut<'_, T>,
    backend: &Backend,
) -> Result<()> {
    trsm_base_with(spec, a, b, backend, &KernelConfig::default())
}

pub fn trsm_base_with<T: Element>(
    spec: &TriangularSpec,
    a: MatRef<'_, T>,
    b: MatMut<'_, T>,
    backend: &Backend,
    config: &KernelConfig,
) -> Result<()> {
    let n = check_operands("trsm_base", spec, &a, &b, config)?;
    if n == 0 {
        return Ok(());
    }
    let unit = spec.is_unit();
    if !unit {
        if let Some(index) = (0..n).find(|&k| a.get(k, k) == T::zero()) {
            return Err(LinalgError::Singular { index });
        }
    }

    let frame = LowerFrame::new(spec, n);
    let diag: Vec<T> = (0..n)
        .map(|r| {
            if unit {
                T::one()
            } else {
                let (i, j) = frame.a_index(r, r);
                a.get(i, j)
            }
        })
        .collect();
    // coef[r + c * n] = L(r, c) / L(r, r) for c < r.
    let mut coef = vec![T::zero(); n * n];
    for c in 0..n {
        for r in c + 1..n {
            let (i, j) = frame.a_index(r, c);
            let v = a.get(i, j);
            coef[r + c * n] = if unit { v } else { v / diag[r] };
        }
    }

    let alpha = T::from_f64(spec.alpha);
    for_each_lane(b, &frame, n, backend, |w, _| {
        for (v, &d) in w.iter_mut().zip(&diag) {
            *v = *v * alpha;
            if !unit {
                *v = *v / d;
            }
        }
        for p in 1..n {
            let x = w[p - 1];
            let col = &coef[(p - 1) * n..p * n];
            for (v, &l) in w[p..].iter_mut().zip(&col[p..]) {
                *v = *v - l * x;
            }
        }
    });
    Ok(())
}

/// Multiply in place with the default tile limit.
pub fn trmm_base<T: Element>(
    spec: &TriangularSpec,
    a: MatRef<'_, T>,
    b: MatMut<'_, T>,
    backend: &Backend,
) -> Result<()> {
    trmm_base_with(spec, a, b, backend, &KernelConfig::default())
}

pub fn trmm_base_with<T: Element>(
    spec: &TriangularSpec,
    a: MatRef<'_, T>,
    b: MatMut<'_, T>,
    backend: &Backend,
    config: &KernelConfig,
) -> Result<()> {
    let n = check_operands("trmm_base", spec, &a, &b, config)?;
    if n == 0 {
        return Ok(());
    }
    let unit = spec.is_unit();
    let frame = LowerFrame::new(spec, n);
    let diag: Vec<T> = (0..n)
        .map(|r| {
            if unit {
                T::one()
            } else {
                let (i, j) = frame.a_index(r, r);
                a.get(i, j)
            }
        })
        .collect();
    let mut lower = vec![T::zero(); n * n];
    for c in 0..n {
        for r in c + 1..n {
            let (i, j) = frame.a_index(r, c);
            lower[r + c * n] = a.get(i, j);
        }
    }

    let alpha = T::from_f64(spec.alpha);
    for_each_lane(b, &frame, n, backend, |w, out| {
        out.clear();
        out.extend(w.iter().zip(&diag).map(|(&x, &d)| if unit { x } else { d * x }));
        for c in 0..n {
            let x = w[c];
            let col = &lower[c * n..(c + 1) * n];
            for (y, &l) in out[c + 1..].iter_mut().zip(&col[c + 1..]) {
                *y = *y + l * x;
            }
        }
        for (v, &y) in w.iter_mut().zip(out.iter()) {
            *v = alpha * y;
        }
    });
    Ok(())
}

/// Run `f` on every lane of `b`, gathered into logical order. The second
/// argument is per-worker scratch space.
fn for_each_lane<T, F>(b: MatMut<'_, T>, frame: &LowerFrame, n: usize, backend: &Backend, f: F)
where
    T: Element,
    F: Fn(&mut [T], &mut Vec<T>) + Sync,
{
    let lanes = frame.lane_count(b.rows(), b.cols());
    let workers = backend.workers_for(lanes, lanes * n * n / 2);
    if workers <= 1 {
        run_lanes(b, frame, n, &f);
        return;
    }
    std::thread::scope(|scope| {
        let mut rest = b;
        let mut consumed = 0;
        for range in partition(lanes, workers, 1) {
            let split = range.end - consumed;
            let (chunk, tail) = match frame.side() {
                Side::Left => rest.split_at_col(split),
                Side::Right => rest.split_at_row(split),
            };
            rest = tail;
            consumed = range.end;
            let f = &f;
            scope.spawn(move || run_lanes(chunk, frame, n, f));
        }
    });
}

fn run_lanes<T, F>(mut b: MatMut<'_, T>, frame: &LowerFrame, n: usize, f: &F)
where
    T: Element,
    F: Fn(&mut [T], &mut Vec<T>),
{
    let mut lane = vec![T::zero(); n];
    let mut scratch = Vec::with_capacity(n);
    for g in 0..frame.lane_count(b.rows(), b.cols()) {
        for (r, v) in lane.iter_mut().enumerate() {
            let (i, j) = frame.b_index(g, r);
            *v = b.get(i, j);
        }
        f(&mut lane, &mut scratch);
        for (r, &v) in lane.iter().enumerate() {
            let (i, j) = frame.b_index(g, r);
            b.set(i, j, v);
        }
    }
}
