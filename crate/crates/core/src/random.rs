//! Seeded test and benchmark inputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::MatrixBuffer;
use crate::element::Element;
use crate::variants::{Diag, Uplo};

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries uniform in `[-1, 1)`.
pub fn uniform_matrix<T: Element, R: Rng>(rows: usize, cols: usize, rng: &mut R) -> MatrixBuffer<T> {
    MatrixBuffer::from_fn(rows, cols, |_, _| T::from_f64(rng.gen_range(-1.0..1.0)))
}

/// What to store in the triangle the routines must ignore.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Opposite {
    Zero,
    Nan,
    Value(f64),
    /// Large random values, so any accidental read shows up in the result.
    Garbage,
}

/// Diagonally dominant triangle stored in `uplo`, opposite triangle filled
/// per `opposite`.
///
/// Non-unit: off-diagonal entries uniform in `[-1, 1)`, each diagonal entry
/// `±(row off-diagonal magnitude + 1)`. Unit: off-diagonal entries are
/// shrunk so every row sums to less than 1/2 in magnitude, and the stored
/// diagonal holds random values (the routines must ignore them).
pub fn dominant_triangle<T: Element, R: Rng>(
    n: usize,
    uplo: Uplo,
    diag: Diag,
    opposite: Opposite,
    rng: &mut R,
) -> MatrixBuffer<T> {
    let mut a = MatrixBuffer::<f64>::zeros(n, n);
    for i in 0..n {
        let cols: Vec<usize> = match uplo {
            Uplo::Lower => (0..i).collect(),
            Uplo::Upper => (i + 1..n).collect(),
        };
        let vals: Vec<f64> = cols.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sum: f64 = vals.iter().map(|v: &f64| v.abs()).sum();
        let shrink = match diag {
            Diag::NonUnit => 1.0,
            Diag::Unit => 0.5 / (sum + 1.0),
        };
        for (&j, v) in cols.iter().zip(vals) {
            a.set(i, j, v * shrink);
        }
        let d = match diag {
            Diag::NonUnit => {
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                sign * (sum + 1.0)
            }
            Diag::Unit => rng.gen_range(-4.0..4.0),
        };
        a.set(i, i, d);
        for j in 0..n {
            let ignored = match uplo {
                Uplo::Lower => j > i,
                Uplo::Upper => j < i,
            };
            if ignored {
                let v = match opposite {
                    Opposite::Zero => 0.0,
                    Opposite::Nan => f64::NAN,
                    Opposite::Value(v) => v,
                    Opposite::Garbage => rng.gen_range(-1e3..1e3),
                };
                a.set(i, j, v);
            }
        }
    }
    a.cast()
}
