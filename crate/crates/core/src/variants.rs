//! Flags describing every TRMM/TRSM variant.
//!
//! A variant is the tuple (side, uplo, trans, diag) plus the scalar `alpha`:
//!
//! * TRMM: `B <- alpha * op(A) * B` (left) or `B <- alpha * B * op(A)` (right)
//! * TRSM: solve `op(A) * X = alpha * B` (left) or `X * op(A) = alpha * B`
//!   (right), overwriting `B` with `X`
//!
//! Results are written in place into `B`.

use std::fmt;
use std::str::FromStr;

use crate::element::ElemKind;
use crate::error::{LinalgError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Uplo {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Trans {
    NoTrans,
    Trans,
    /// Conjugate transpose; identical to `Trans` on real element kinds.
    ConjTrans,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Diag {
    NonUnit,
    /// Diagonal of `A` is never read and taken to be 1.
    Unit,
}

impl Trans {
    /// Whether `op(A)` is a transpose after reducing conjugation on reals.
    pub fn is_transposed(self) -> bool {
        !matches!(self, Trans::NoTrans)
    }
}

macro_rules! flag_strings {
    ($ty:ident, $what:literal, $( $variant:ident => $s:literal ),+ $(,)?) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $( $ty::$variant => $s ),+ }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
                match s {
                    $( $s => Ok($ty::$variant), )+
                    other => Err(format!(
                        concat!("unknown ", $what, " `{}` (expected {})"),
                        other,
                        [$($s),+].join("|")
                    )),
                }
            }
        }
    };
}

flag_strings!(Side, "side", Left => "left", Right => "right");
flag_strings!(Uplo, "uplo", Lower => "lower", Upper => "upper");
flag_strings!(Trans, "trans", NoTrans => "n", Trans => "t", ConjTrans => "c");
flag_strings!(Diag, "diag", NonUnit => "nonunit", Unit => "unit");

/// Full descriptor of one TRMM/TRSM problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangularSpec {
    pub side: Side,
    pub uplo: Uplo,
    pub trans: Trans,
    pub diag: Diag,
    pub alpha: f64,
}

impl TriangularSpec {
    pub fn new(side: Side, uplo: Uplo, trans: Trans, diag: Diag) -> Self {
        TriangularSpec {
            side,
            uplo,
            trans,
            diag,
            alpha: 1.0,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha.is_finite() {
            Ok(())
        } else {
            Err(LinalgError::InvalidArgument(format!(
                "alpha must be finite, got {}",
                self.alpha
            )))
        }
    }

    pub fn is_unit(&self) -> bool {
        self.diag == Diag::Unit
    }

    /// Whether `op(A)` is lower triangular.
    pub fn op_is_lower(&self) -> bool {
        (self.uplo == Uplo::Lower) != self.trans.is_transposed()
    }

    /// The 16 distinct variants on real element kinds (ConjTrans folded
    /// into Trans), all with `alpha = 1`.
    pub fn all_variants() -> Vec<TriangularSpec> {
        let mut out = Vec::with_capacity(16);
        for side in [Side::Left, Side::Right] {
            for uplo in [Uplo::Lower, Uplo::Upper] {
                for trans in [Trans::NoTrans, Trans::Trans] {
                    for diag in [Diag::NonUnit, Diag::Unit] {
                        out.push(TriangularSpec::new(side, uplo, trans, diag));
                    }
                }
            }
        }
        out
    }

    /// Short identifier used in benchmark output, e.g. `left-lower-n-nonunit`.
    pub fn variant_name(&self) -> String {
        format!("{}-{}-{}-{}", self.side, self.uplo, self.trans, self.diag)
    }
}

impl fmt::Display for TriangularSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} alpha={}", self.variant_name(), self.alpha)
    }
}

/// The transposition actually applied for `spec` on `kind`.
pub fn effective_op(spec: &TriangularSpec, kind: ElemKind) -> Trans {
    match spec.trans {
        Trans::ConjTrans if kind.is_real() => Trans::Trans,
        other => other,
    }
}
