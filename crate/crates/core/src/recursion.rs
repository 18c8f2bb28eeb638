//! Unified recursive TRMM/TRSM driver.
//!
//! Every variant follows the same three steps on a `floor(n/2)` split of the
//! triangle: recurse on one diagonal block, apply a GEMM update with the
//! off-diagonal block, recurse on the other diagonal block. The
//! [`RecursionSchema`] for a variant says which block goes first and which
//! half of `B` the update reads and writes. Blocks at or below the threshold
//! are handed to the base kernels.
//!
//! The in-place ordering rule: the GEMM update must only read the half of
//! `B` that still holds the values it needs. For TRSM that is the half just
//! solved; for TRMM it is the half not yet multiplied.

use std::fmt;
use std::str::FromStr;

use crate::dense::{gemm_ex, scale, split_half, Backend, MatMut, MatRef};
use crate::element::Element;
use crate::error::{LinalgError, Result};
use crate::kernels::{trmm_base_with, trsm_base_with, KernelConfig};
use crate::variants::{Side, Trans, TriangularSpec, Uplo};

pub const DEFAULT_THRESHOLD: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    Trmm,
    Trsm,
}

impl OpKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OpKind::Trmm => "trmm",
            OpKind::Trsm => "trsm",
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OpKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "trmm" => Ok(OpKind::Trmm),
            "trsm" => Ok(OpKind::Trsm),
            other => Err(format!("unknown op `{other}` (expected trmm|trsm)")),
        }
    }
}

/// Size at or below which recursion stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Threshold(usize);

impl Threshold {
    pub fn new(value: usize) -> Result<Self> {
        if value == 0 {
            return Err(LinalgError::InvalidArgument("threshold must be at least 1".into()));
        }
        Ok(Threshold(value))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

impl Default for Threshold {
    fn default() -> Self {
        Threshold(DEFAULT_THRESHOLD)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiagBlock {
    A11,
    A22,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OffDiagBlock {
    /// Below the diagonal; used when `A` is lower triangular.
    A21,
    /// Above the diagonal; used when `A` is upper triangular.
    A12,
}

/// Halves of `B`: leading rows (left side) or leading columns (right side)
/// are `B1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Half {
    B1,
    B2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UpdateSign {
    /// `write += alpha * product` (TRMM).
    Accumulate,
    /// `write -= product` (TRSM).
    Subtract,
}

/// The GEMM between the two recursive calls:
/// `write <- write ± op(block) * read` on the left,
/// `write <- write ± read * op(block)` on the right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GemmUpdate {
    pub block: OffDiagBlock,
    pub transposed: bool,
    pub read: Half,
    pub write: Half,
    pub sign: UpdateSign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RecursionSchema {
    pub first: DiagBlock,
    pub update: GemmUpdate,
    pub second: DiagBlock,
}

impl RecursionSchema {
    fn half_of(block: DiagBlock) -> Half {
        match block {
            DiagBlock::A11 => Half::B1,
            DiagBlock::A22 => Half::B2,
        }
    }

    /// Half of `B` the first recursive call works on.
    pub fn first_half(&self) -> Half {
        Self::half_of(self.first)
    }
}

/// Recursion schema for every (op, side, uplo, trans) combination.
pub fn schema_for(op: OpKind, spec: &TriangularSpec) -> RecursionSchema {
    // Left + lower op(A): row block 2 depends on row block 1. Moving to the
    // right side flips the dependency.
    let writes_b2 = spec.op_is_lower() == (spec.side == Side::Left);
    let (read, write) = if writes_b2 {
        (Half::B1, Half::B2)
    } else {
        (Half::B2, Half::B1)
    };
    // TRSM solves the read half first; TRMM finishes the written half first
    // so the read half is still unmodified when the GEMM consumes it.
    let solve_b1_first = match op {
        OpKind::Trsm => read == Half::B1,
        OpKind::Trmm => write == Half::B1,
    };
    let (first, second) = if solve_b1_first {
        (DiagBlock::A11, DiagBlock::A22)
    } else {
        (DiagBlock::A22, DiagBlock::A11)
    };
    RecursionSchema {
        first,
        update: GemmUpdate {
            block: match spec.uplo {
                Uplo::Lower => OffDiagBlock::A21,
                Uplo::Upper => OffDiagBlock::A12,
            },
            transposed: spec.trans.is_transposed(),
            read,
            write,
            sign: match op {
                OpKind::Trmm => UpdateSign::Accumulate,
                OpKind::Trsm => UpdateSign::Subtract,
            },
        },
        second,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CallEvent {
    Gemm,
    BaseTrmm,
    BaseTrsm,
}

/// One instrumented call. `n` is the triangle size at that level, `m` the
/// number of independent lanes of `B`, `depth` the recursion level (1 for
/// the outermost call).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Call {
    pub event: CallEvent,
    pub n: usize,
    pub m: usize,
    pub depth: usize,
}

pub trait CallSink {
    fn record(&mut self, call: Call);
}

impl<F: FnMut(Call)> CallSink for F {
    fn record(&mut self, call: Call) {
        self(call)
    }
}

/// Counts calls per event type.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CallCounter {
    pub gemm: usize,
    pub base_trmm: usize,
    pub base_trsm: usize,
    pub max_depth: usize,
}

impl CallCounter {
    pub fn base_calls(&self) -> usize {
        self.base_trmm + self.base_trsm
    }
}

impl CallSink for CallCounter {
    fn record(&mut self, call: Call) {
        match call.event {
            CallEvent::Gemm => self.gemm += 1,
            CallEvent::BaseTrmm => self.base_trmm += 1,
            CallEvent::BaseTrsm => self.base_trsm += 1,
        }
        self.max_depth = self.max_depth.max(call.depth);
    }
}

struct NoSink;

impl CallSink for NoSink {
    fn record(&mut self, _: Call) {}
}

/// `B <- alpha * op(A) * B` (left) or `B <- alpha * B * op(A)` (right).
pub fn rec_trmm<T: Element>(
    spec: &TriangularSpec,
    a: MatRef<'_, T>,
    b: MatMut<'_, T>,
    threshold: Threshold,
    backend: &Backend,
) -> Result<()> {
    rec_trmm_with_sink(spec, a, b, threshold, backend, &mut NoSink)
}

pub fn rec_trmm_with_sink<T: Element>(
    spec: &TriangularSpec,
    a: MatRef<'_, T>,
    b: MatMut<'_, T>,
    threshold: Threshold,
    backend: &Backend,
    sink: &mut dyn CallSink,
) -> Result<()> {
    check_problem(OpKind::Trmm, spec, &a, &b)?;
    // alpha is folded into the base kernels and the accumulating GEMMs; each
    // of those reads only unmodified input, so every term is scaled once.
    let mut driver = Driver {
        op: OpKind::Trmm,
        spec: *spec,
        alpha: T::from_f64(spec.alpha),
        schema: schema_for(OpKind::Trmm, spec),
        threshold: threshold.get(),
        backend,
        sink,
    };
    driver.run(a, b, 0, 1)
}

/// Solve `op(A) * X = alpha * B` (left) or `X * op(A) = alpha * B` (right),
/// overwriting `B` with `X`.
///
/// A zero pivot is reported with its row index in the full `A`, and leaves
/// `B` partially updated.
pub fn rec_trsm<T: Element>(
    spec: &TriangularSpec,
    a: MatRef<'_, T>,
    b: MatMut<'_, T>,
    threshold: Threshold,
    backend: &Backend,
) -> Result<()> {
    rec_trsm_with_sink(spec, a, b, threshold, backend, &mut NoSink)
}

pub fn rec_trsm_with_sink<T: Element>(
    spec: &TriangularSpec,
    a: MatRef<'_, T>,
    mut b: MatMut<'_, T>,
    threshold: Threshold,
    backend: &Backend,
    sink: &mut dyn CallSink,
) -> Result<()> {
    check_problem(OpKind::Trsm, spec, &a, &b)?;
    // Scale once up front; every level below solves with alpha = 1.
    scale(T::from_f64(spec.alpha), b.rb_mut());
    let inner = spec.with_alpha(1.0);
    let mut driver = Driver {
        op: OpKind::Trsm,
        spec: inner,
        alpha: T::one(),
        schema: schema_for(OpKind::Trsm, &inner),
        threshold: threshold.get(),
        backend,
        sink,
    };
    driver.run(a, b, 0, 1)
}

fn check_problem<T: Element>(op: OpKind, spec: &TriangularSpec, a: &MatRef<'_, T>, b: &MatMut<'_, T>) -> Result<()> {
    let name = match op {
        OpKind::Trmm => "rec_trmm",
        OpKind::Trsm => "rec_trsm",
    };
    spec.validate()?;
    if a.rows() != a.cols() {
        return Err(LinalgError::shape(
            name,
            format!("A must be square, got {}x{}", a.rows(), a.cols()),
        ));
    }
    let n = a.rows();
    let dim = match spec.side {
        Side::Left => b.rows(),
        Side::Right => b.cols(),
    };
    if dim != n {
        return Err(LinalgError::shape(
            name,
            format!(
                "{} side needs B conformal with {n}x{n} A, got {}x{}",
                spec.side,
                b.rows(),
                b.cols()
            ),
        ));
    }
    if !a.is_disjoint_from(b) {
        return Err(LinalgError::Aliasing { op: name });
    }
    Ok(())
}

struct Driver<'s, T> {
    op: OpKind,
    spec: TriangularSpec,
    alpha: T,
    schema: RecursionSchema,
    threshold: usize,
    backend: &'s Backend,
    sink: &'s mut dyn CallSink,
}

impl<T: Element> Driver<'_, T> {
    fn lanes(&self, b: &MatMut<'_, T>) -> usize {
        match self.spec.side {
            Side::Left => b.cols(),
            Side::Right => b.rows(),
        }
    }

    /// `offset` is the position of this block's first row within the full
    /// `A`, used to report singular pivots globally.
    fn run(&mut self, a: MatRef<'_, T>, b: MatMut<'_, T>, offset: usize, depth: usize) -> Result<()> {
        let n = a.rows();
        if n == 0 {
            return Ok(());
        }
        let m = self.lanes(&b);
        if n <= self.threshold {
            let config = KernelConfig {
                tile_limit: self.threshold,
            };
            let event = match self.op {
                OpKind::Trmm => CallEvent::BaseTrmm,
                OpKind::Trsm => CallEvent::BaseTrsm,
            };
            self.sink.record(Call { event, n, m, depth });
            let result = match self.op {
                OpKind::Trmm => trmm_base_with(&self.spec, a, b, self.backend, &config),
                OpKind::Trsm => trsm_base_with(&self.spec, a, b, self.backend, &config),
            };
            return result.map_err(|e| e.offset_singular(offset));
        }

        let mid = split_half(n)?;
        let rest = n - mid;
        let a11 = a.block(0, 0, mid, mid);
        let a22 = a.block(mid, mid, rest, rest);
        let off = match self.schema.update.block {
            OffDiagBlock::A21 => a.block(mid, 0, rest, mid),
            OffDiagBlock::A12 => a.block(0, mid, mid, rest),
        };
        let (mut b1, mut b2) = match self.spec.side {
            Side::Left => b.split_at_row(mid),
            Side::Right => b.split_at_col(mid),
        };

        let schema = self.schema;
        self.diagonal(schema.first, a11, a22, &mut b1, &mut b2, offset, mid, depth)?;

        let update = schema.update;
        let (read, write) = match update.write {
            Half::B2 => (b1.rb(), b2.rb_mut()),
            Half::B1 => (b2.rb(), b1.rb_mut()),
        };
        let coeff = match update.sign {
            UpdateSign::Accumulate => self.alpha,
            UpdateSign::Subtract => -T::one(),
        };
        let trans = if update.transposed {
            Trans::Trans
        } else {
            Trans::NoTrans
        };
        self.sink.record(Call {
            event: CallEvent::Gemm,
            n,
            m,
            depth,
        });
        match self.spec.side {
            Side::Left => gemm_ex(coeff, trans, off, Trans::NoTrans, read, T::one(), write, self.backend)?,
            Side::Right => gemm_ex(coeff, Trans::NoTrans, read, trans, off, T::one(), write, self.backend)?,
        }

        self.diagonal(schema.second, a11, a22, &mut b1, &mut b2, offset, mid, depth)
    }

    #[allow(clippy::too_many_arguments)]
    fn diagonal(
        &mut self,
        block: DiagBlock,
        a11: MatRef<'_, T>,
        a22: MatRef<'_, T>,
        b1: &mut MatMut<'_, T>,
        b2: &mut MatMut<'_, T>,
        offset: usize,
        mid: usize,
        depth: usize,
    ) -> Result<()> {
        match block {
            DiagBlock::A11 => self.run(a11, b1.rb_mut(), offset, depth + 1),
            DiagBlock::A22 => self.run(a22, b2.rb_mut(), offset + mid, depth + 1),
        }
    }
}
