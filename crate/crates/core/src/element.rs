use std::fmt;
use std::str::FromStr;

use num_traits::Float;

/// Element kinds supported by the library.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElemKind {
    F32,
    F64,
}

impl ElemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ElemKind::F32 => "f32",
            ElemKind::F64 => "f64",
        }
    }

    /// Machine epsilon of the kind, as f64.
    pub fn epsilon(self) -> f64 {
        match self {
            ElemKind::F32 => f32::EPSILON as f64,
            ElemKind::F64 => f64::EPSILON,
        }
    }

    /// Both kinds are real, so there is never anything to conjugate.
    pub fn is_real(self) -> bool {
        true
    }
}

impl fmt::Display for ElemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ElemKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "f32" => Ok(ElemKind::F32),
            "f64" => Ok(ElemKind::F64),
            other => Err(format!("unknown element kind `{other}` (expected f32|f64)")),
        }
    }
}

/// Real floating-point scalar usable as a matrix element.
pub trait Element: Float + Default + Send + Sync + fmt::Debug + fmt::Display + 'static {
    const KIND: ElemKind;

    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Element for f32 {
    const KIND: ElemKind = ElemKind::F32;

    #[inline(always)]
    fn from_f64(v: f64) -> Self {
        v as f32
    }

    #[inline(always)]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Element for f64 {
    const KIND: ElemKind = ElemKind::F64;

    #[inline(always)]
    fn from_f64(v: f64) -> Self {
        v
    }

    #[inline(always)]
    fn to_f64(self) -> f64 {
        self
    }
}
