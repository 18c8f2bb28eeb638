//! Cache-blocked GEMM with packed panels and a register-tiled microkernel.
//!
//! Loop order follows the usual jc / pc / ic / jr / ir nest: a `kc x nc`
//! block of `op(B)` is packed into `NR`-wide panels, an `mc x kc` block of
//! `op(A)` into `MR`-tall panels, and the microkernel accumulates an
//! `MR x NR` tile over the shared dimension before adding `alpha * tile` into
//! `C`. Every entry of `C` therefore sees the same reduction order no matter
//! how the output columns are split across workers.

use std::ops::Range;

use crate::dense::backend::{partition, Backend, BlockSizes};
use crate::dense::matrix::{MatMut, MatRef};
use crate::element::Element;
use crate::error::{LinalgError, Result};
use crate::variants::Trans;

const MR: usize = 8;
const NR: usize = 4;

/// `op(X)` as a raw strided operand.
#[derive(Clone, Copy)]
struct Operand<T> {
    ptr: *const T,
    rows: usize,
    cols: usize,
    rs: usize,
    cs: usize,
}

// SAFETY: an Operand is only built from a MatRef and is read-only.
unsafe impl<T: Sync> Send for Operand<T> {}
unsafe impl<T: Sync> Sync for Operand<T> {}

impl<T: Element> Operand<T> {
    fn new(view: MatRef<'_, T>, trans: Trans) -> Self {
        let ld = view.leading_dim();
        if trans.is_transposed() {
            Operand {
                ptr: view.as_ptr(),
                rows: view.cols(),
                cols: view.rows(),
                rs: ld,
                cs: 1,
            }
        } else {
            Operand {
                ptr: view.as_ptr(),
                rows: view.rows(),
                cols: view.cols(),
                rs: 1,
                cs: ld,
            }
        }
    }

    fn col_range(self, range: Range<usize>) -> Self {
        debug_assert!(range.end <= self.cols);
        Operand {
            // SAFETY: range lies within the operand's columns.
            ptr: unsafe { self.ptr.add(range.start * self.cs) },
            cols: range.len(),
            ..self
        }
    }

    /// # Safety
    ///
    /// `i < rows`, `j < cols`.
    #[inline(always)]
    unsafe fn at(&self, i: usize, j: usize) -> T {
        *self.ptr.add(i * self.rs + j * self.cs)
    }
}

/// `C <- alpha * op(A) * B + beta * C`.
pub fn gemm<T: Element>(
    alpha: T,
    trans_a: Trans,
    a: MatRef<'_, T>,
    b: MatRef<'_, T>,
    beta: T,
    c: MatMut<'_, T>,
    backend: &Backend,
) -> Result<()> {
    gemm_ex(alpha, trans_a, a, Trans::NoTrans, b, beta, c, backend)
}

/// `C <- alpha * op(A) * op(B) + beta * C`.
///
/// With `beta == 0` the previous contents of `C` are not read.
#[allow(clippy::too_many_arguments)]
pub fn gemm_ex<T: Element>(
    alpha: T,
    trans_a: Trans,
    a: MatRef<'_, T>,
    trans_b: Trans,
    b: MatRef<'_, T>,
    beta: T,
    mut c: MatMut<'_, T>,
    backend: &Backend,
) -> Result<()> {
    let opa = Operand::new(a, trans_a);
    let opb = Operand::new(b, trans_b);
    if opa.cols != opb.rows || opa.rows != c.rows() || opb.cols != c.cols() {
        return Err(LinalgError::shape(
            "gemm",
            format!(
                "op(A) is {}x{}, op(B) is {}x{}, C is {}x{}",
                opa.rows,
                opa.cols,
                opb.rows,
                opb.cols,
                c.rows(),
                c.cols()
            ),
        ));
    }
    if !a.is_disjoint_from(&c) || !b.is_disjoint_from(&c) {
        return Err(LinalgError::Aliasing { op: "gemm" });
    }

    let (m, n, k) = (c.rows(), c.cols(), opa.cols);
    if m == 0 || n == 0 {
        return Ok(());
    }
    if beta == T::zero() {
        c.fill(T::zero());
    } else if beta != T::one() {
        for j in 0..n {
            for v in c.col_mut(j) {
                *v = beta * *v;
            }
        }
    }
    if k == 0 || alpha == T::zero() {
        return Ok(());
    }

    let bs = backend.block_sizes();
    let workers = backend.workers_for(n.div_ceil(NR), m * n * k);
    if workers == 1 {
        gemm_serial(alpha, opa, opb, c, bs);
        return Ok(());
    }

    let ranges = partition(n, workers, NR);
    std::thread::scope(|scope| {
        let mut rest = c;
        let mut consumed = 0;
        for range in ranges {
            let (chunk, tail) = rest.split_at_col(range.end - consumed);
            rest = tail;
            consumed = range.end;
            let bsub = opb.col_range(range);
            scope.spawn(move || gemm_serial(alpha, opa, bsub, chunk, bs));
        }
    });
    Ok(())
}

fn gemm_serial<T: Element>(alpha: T, a: Operand<T>, b: Operand<T>, mut c: MatMut<'_, T>, bs: BlockSizes) {
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut apack = vec![T::zero(); bs.mc.div_ceil(MR) * MR * bs.kc.min(k)];
    let mut bpack = vec![T::zero(); bs.nc.div_ceil(NR) * NR * bs.kc.min(k)];

    for jc in (0..n).step_by(bs.nc) {
        let nb = bs.nc.min(n - jc);
        for pc in (0..k).step_by(bs.kc) {
            let kb = bs.kc.min(k - pc);
            pack_b(&b, pc, kb, jc, nb, &mut bpack);
            for ic in (0..m).step_by(bs.mc) {
                let mb = bs.mc.min(m - ic);
                pack_a(&a, ic, mb, pc, kb, &mut apack);
                for jr in (0..nb).step_by(NR) {
                    let nr = NR.min(nb - jr);
                    let bp = &bpack[(jr / NR) * NR * kb..][..NR * kb];
                    for ir in (0..mb).step_by(MR) {
                        let mr = MR.min(mb - ir);
                        let ap = &apack[(ir / MR) * MR * kb..][..MR * kb];
                        let acc = microkernel(ap, bp);
                        for (j, acc_col) in acc.iter().enumerate().take(nr) {
                            let col = &mut c.col_mut(jc + jr + j)[ic + ir..ic + ir + mr];
                            for (dst, &v) in col.iter_mut().zip(acc_col.iter()) {
                                *dst = *dst + alpha * v;
                            }
                        }
                    }
                }
            }
        }
    }
}

#[inline(always)]
fn microkernel<T: Element>(a: &[T], b: &[T]) -> [[T; MR]; NR] {
    let mut acc = [[T::zero(); MR]; NR];
    for (ap, bp) in a.chunks_exact(MR).zip(b.chunks_exact(NR)) {
        for j in 0..NR {
            let bj = bp[j];
            for i in 0..MR {
                acc[j][i] = acc[j][i] + ap[i] * bj;
            }
        }
    }
    acc
}

/// Pack rows `ic..ic+mb`, columns `pc..pc+kb` of `a` into zero-padded
/// `MR`-row panels laid out panel by panel, k-major inside a panel.
fn pack_a<T: Element>(a: &Operand<T>, ic: usize, mb: usize, pc: usize, kb: usize, out: &mut [T]) {
    for (panel, row0) in (0..mb).step_by(MR).enumerate() {
        let rows = MR.min(mb - row0);
        let dst = &mut out[panel * MR * kb..][..MR * kb];
        for p in 0..kb {
            let slot = &mut dst[p * MR..(p + 1) * MR];
            for (i, v) in slot.iter_mut().enumerate() {
                *v = if i < rows {
                    // SAFETY: row and column are inside the operand.
                    unsafe { a.at(ic + row0 + i, pc + p) }
                } else {
                    T::zero()
                };
            }
        }
    }
}

fn pack_b<T: Element>(b: &Operand<T>, pc: usize, kb: usize, jc: usize, nb: usize, out: &mut [T]) {
    for (panel, col0) in (0..nb).step_by(NR).enumerate() {
        let cols = NR.min(nb - col0);
        let dst = &mut out[panel * NR * kb..][..NR * kb];
        for p in 0..kb {
            let slot = &mut dst[p * NR..(p + 1) * NR];
            for (j, v) in slot.iter_mut().enumerate() {
                *v = if j < cols {
                    // SAFETY: row and column are inside the operand.
                    unsafe { b.at(pc + p, jc + col0 + j) }
                } else {
                    T::zero()
                };
            }
        }
    }
}
