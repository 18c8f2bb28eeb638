//! Recursive triangular matrix multiply (TRMM) and solve (TRSM) built on a
//! blocked GEMM.
//!
//! All sixteen side/uplo/trans/diag variants of each operation go through
//! one recursive driver ([`recursion`]) that splits the triangle in half,
//! recurses on the diagonal blocks and pushes the off-diagonal work into
//! GEMM. Small blocks are handled by base kernels whose structure mirrors a
//! barrier-phased workgroup program; [`kernels::simulator`] runs that program
//! under arbitrary thread interleavings and reports data races.
//!
//! [`oracle`] holds double-precision brute-force references and [`bench`]
//! the timing harness behind the `bench` binary.

pub mod bench;
pub mod dense;
pub mod element;
pub mod error;
pub mod kernels;
pub mod oracle;
pub mod random;
pub mod recursion;
pub mod variants;

pub use dense::{gemm, gemm_ex, scale, split_half, Backend, BlockSizes, MatMut, MatRef, MatrixBuffer};
pub use element::{ElemKind, Element};
pub use error::{LinalgError, Result};
pub use recursion::{rec_trmm, rec_trsm, OpKind, Threshold};
pub use variants::{Diag, Side, Trans, TriangularSpec, Uplo};
