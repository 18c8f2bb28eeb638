mod common;

use common::*;
use proptest::prelude::*;
use rectri::kernels::{build_trsm_program, simulate, trmm_base, trsm_base, Schedule};
use rectri::oracle::{oracle_trmm, oracle_trsm};
use rectri::random::{seeded, uniform_matrix, Opposite};
use rectri::recursion::{rec_trmm, rec_trmm_with_sink, rec_trsm, CallCounter};
use rectri::{
    gemm_ex, scale, Backend, BlockSizes, Diag, LinalgError, MatMut, MatRef, MatrixBuffer, OpKind, Side, Threshold,
    Trans, TriangularSpec, Uplo,
};

fn any_spec() -> impl Strategy<Value = TriangularSpec> {
    (0..TriangularSpec::all_variants().len()).prop_map(|i| TriangularSpec::all_variants()[i])
}

fn any_op() -> impl Strategy<Value = OpKind> {
    prop_oneof![Just(OpKind::Trmm), Just(OpKind::Trsm)]
}

fn any_trans() -> impl Strategy<Value = Trans> {
    prop_oneof![Just(Trans::NoTrans), Just(Trans::Trans), Just(Trans::ConjTrans)]
}

fn small_blocks() -> Backend {
    Backend::new("seq", 1, BlockSizes { mc: 5, kc: 3, nc: 7 }).unwrap()
}

fn naive_gemm(
    alpha: f64,
    ta: Trans,
    a: &MatrixBuffer<f64>,
    tb: Trans,
    b: &MatrixBuffer<f64>,
    beta: f64,
    c: &MatrixBuffer<f64>,
) -> (MatrixBuffer<f64>, MatrixBuffer<f64>) {
    let opa = if ta.is_transposed() { a.transpose() } else { a.clone() };
    let opb = if tb.is_transposed() { b.transpose() } else { b.clone() };
    let k = opa.cols();
    let value = MatrixBuffer::from_fn(c.rows(), c.cols(), |i, j| {
        let dot: f64 = (0..k).map(|p| opa.get(i, p) * opb.get(p, j)).sum();
        let prior = if beta == 0.0 { 0.0 } else { beta * c.get(i, j) };
        alpha * dot + prior
    });
    let magnitude = MatrixBuffer::from_fn(c.rows(), c.cols(), |i, j| {
        let dot: f64 = (0..k).map(|p| (opa.get(i, p) * opb.get(p, j)).abs()).sum();
        alpha.abs() * dot + (beta * c.get(i, j)).abs()
    });
    (value, magnitude)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn gemm_matches_triple_loop(
        m in 1usize..=16, n in 1usize..=16, k in 1usize..=16,
        ta in any_trans(), tb in any_trans(),
        alpha in -2.0f64..2.0, beta in prop_oneof![Just(0.0), Just(1.0), -2.0f64..2.0],
        seed in any::<u64>(),
        blocked in any::<bool>(),
    ) {
        let mut rng = seeded(seed);
        let (ar, ac) = if ta.is_transposed() { (k, m) } else { (m, k) };
        let (br, bc) = if tb.is_transposed() { (n, k) } else { (k, n) };
        let a: MatrixBuffer<f64> = uniform_matrix(ar, ac, &mut rng);
        let b: MatrixBuffer<f64> = uniform_matrix(br, bc, &mut rng);
        let c0: MatrixBuffer<f64> = uniform_matrix(m, n, &mut rng);
        let backend = if blocked { small_blocks() } else { Backend::sequential() };
        let mut c = c0.clone();
        gemm_ex(alpha, ta, a.as_ref(), tb, b.as_ref(), beta, c.as_mut(), &backend).unwrap();
        let (expected, magnitude) = naive_gemm(alpha, ta, &a, tb, &b, beta, &c0);
        for i in 0..m {
            for j in 0..n {
                let bound = 8.0 * k as f64 * f64::EPSILON * magnitude.get(i, j);
                prop_assert!((c.get(i, j) - expected.get(i, j)).abs() <= bound);
            }
        }
    }

    #[test]
    fn gemm_f32_matches_triple_loop(m in 1usize..=16, n in 1usize..=16, k in 1usize..=16, seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let a: MatrixBuffer<f32> = uniform_matrix(m, k, &mut rng);
        let b: MatrixBuffer<f32> = uniform_matrix(k, n, &mut rng);
        let mut c = MatrixBuffer::<f32>::zeros(m, n);
        gemm_ex(1.0, Trans::NoTrans, a.as_ref(), Trans::NoTrans, b.as_ref(), 0.0, c.as_mut(), &small_blocks()).unwrap();
        let zeros = MatrixBuffer::<f64>::zeros(m, n);
        let (expected, magnitude) = naive_gemm(1.0, Trans::NoTrans, &a.cast(), Trans::NoTrans, &b.cast(), 0.0, &zeros);
        for i in 0..m {
            for j in 0..n {
                let bound = 8.0 * k as f64 * f32::EPSILON as f64 * magnitude.get(i, j);
                prop_assert!((c.get(i, j) as f64 - expected.get(i, j)).abs() <= bound);
            }
        }
    }

    #[test]
    fn gemm_backends_agree(m in 1usize..=80, n in 1usize..=80, k in 1usize..=80, width in 2usize..=4, seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let a: MatrixBuffer<f64> = uniform_matrix(m, k, &mut rng);
        let b: MatrixBuffer<f64> = uniform_matrix(k, n, &mut rng);
        let c0: MatrixBuffer<f64> = uniform_matrix(m, n, &mut rng);
        let mut seq = c0.clone();
        let mut par = c0.clone();
        gemm_ex(0.5, Trans::NoTrans, a.as_ref(), Trans::NoTrans, b.as_ref(), 1.0, seq.as_mut(), &Backend::sequential()).unwrap();
        gemm_ex(0.5, Trans::NoTrans, a.as_ref(), Trans::NoTrans, b.as_ref(), 1.0, par.as_mut(), &Backend::parallel_with_width(width)).unwrap();
        let (_, magnitude) = naive_gemm(0.5, Trans::NoTrans, &a, Trans::NoTrans, &b, 1.0, &c0);
        for i in 0..m {
            for j in 0..n {
                let bound = 8.0 * k as f64 * f64::EPSILON * magnitude.get(i, j);
                prop_assert!((seq.get(i, j) - par.get(i, j)).abs() <= bound);
            }
        }
    }

    #[test]
    fn gemm_into_subview_equals_standalone(
        m in 1usize..=12, n in 1usize..=12, k in 1usize..=12,
        row in 0usize..4, col in 0usize..4, seed in any::<u64>(),
    ) {
        let mut rng = seeded(seed);
        let a: MatrixBuffer<f64> = uniform_matrix(m, k, &mut rng);
        let b: MatrixBuffer<f64> = uniform_matrix(k, n, &mut rng);
        let big0: MatrixBuffer<f64> = uniform_matrix(m + 4, n + 4, &mut rng);
        for backend in [Backend::sequential(), small_blocks(), Backend::parallel_with_width(3)] {
            let mut big = big0.clone();
            let mut region = big0.as_ref().subview(row, col, m, n).unwrap().to_owned();
            gemm_ex(-1.5, Trans::NoTrans, a.as_ref(), Trans::NoTrans, b.as_ref(), 0.5, region.as_mut(), &backend).unwrap();
            let view = big.as_mut().subview_mut(row, col, m, n).unwrap();
            gemm_ex(-1.5, Trans::NoTrans, a.as_ref(), Trans::NoTrans, b.as_ref(), 0.5, view, &backend).unwrap();
            for i in 0..m + 4 {
                for j in 0..n + 4 {
                    let inside = (row..row + m).contains(&i) && (col..col + n).contains(&j);
                    let expected = if inside { region.get(i - row, j - col) } else { big0.get(i, j) };
                    prop_assert_eq!(big.get(i, j).to_bits(), expected.to_bits());
                }
            }
        }
    }

    #[test]
    fn recursion_matches_oracle(
        op in any_op(), spec in any_spec(), n in 1usize..=48, m in 1usize..=6,
        threshold in 1usize..=20, alpha in -3.0f64..3.0, seed in any::<u64>(),
    ) {
        let spec = spec.with_alpha(alpha);
        let (a, b) = problem::<f64>(&spec, n, m, Opposite::Garbage, seed);
        let out = run(op, &spec, &a, &b, threshold, &Backend::sequential()).unwrap();
        prop_assert!(oracle_error(op, &spec, &a, &b, &out) <= tol::<f64>(32.0, n));
    }

    #[test]
    fn recursion_backends_agree(
        op in any_op(), spec in any_spec(), n in 1usize..=96, threshold in 1usize..=40, seed in any::<u64>(),
    ) {
        let m = 64;
        let (a, b) = problem::<f64>(&spec, n, m, Opposite::Zero, seed);
        let seq = run(op, &spec, &a, &b, threshold, &Backend::sequential()).unwrap();
        let par = run(op, &spec, &a, &b, threshold, &Backend::parallel_with_width(3)).unwrap();
        let scale = masked_norm(&spec, &a) * rectri::oracle::norm_inf(b.as_ref());
        prop_assert!(diff_inf(&seq, &par) <= tol::<f64>(32.0, n) * scale);
    }

    #[test]
    fn conj_trans_is_trans_for_reals(op in any_op(), spec in any_spec(), n in 1usize..=24, seed in any::<u64>()) {
        prop_assume!(spec.trans == Trans::Trans);
        let conj = TriangularSpec { trans: Trans::ConjTrans, ..spec };
        let (a, b) = problem::<f32>(&spec, n, 3, Opposite::Garbage, seed);
        let t = run(op, &spec, &a, &b, 4, &Backend::sequential()).unwrap();
        let c = run(op, &conj, &a, &b, 4, &Backend::sequential()).unwrap();
        prop_assert_eq!(bits(&t), bits(&c));
    }

    #[test]
    fn ignored_triangle_and_unit_diagonal_never_read(
        op in any_op(), spec in any_spec(), n in 1usize..=40, threshold in 1usize..=16,
        garbage in -1e6f64..1e6, seed in any::<u64>(),
    ) {
        let (a_nan, b) = problem::<f64>(&spec, n, 4, Opposite::Nan, seed);
        let (a_val, _) = problem::<f64>(&spec, n, 4, Opposite::Value(garbage), seed);
        let x = run(op, &spec, &a_nan, &b, threshold, &Backend::sequential()).unwrap();
        let y = run(op, &spec, &a_val, &b, threshold, &Backend::sequential()).unwrap();
        prop_assert!(x.as_slice().iter().all(|v| v.is_finite()));
        prop_assert_eq!(bits(&x), bits(&y));
        if spec.diag == Diag::Unit {
            let mut a = a_nan.clone();
            for i in 0..n {
                a.set(i, i, garbage);
            }
            let z = run(op, &spec, &a, &b, threshold, &Backend::sequential()).unwrap();
            prop_assert_eq!(bits(&x), bits(&z));
        }
    }

    #[test]
    fn trmm_alpha_factors_out(spec in any_spec(), n in 1usize..=40, alpha in -4.0f64..4.0, pow in -3i32..=3, seed in any::<u64>()) {
        let (a, b) = problem::<f64>(&spec, n, 5, Opposite::Garbage, seed);
        let backend = Backend::sequential();
        let unit_alpha = run(OpKind::Trmm, &spec.with_alpha(1.0), &a, &b, 4, &backend).unwrap();

        // Powers of two scale exactly, so factoring is bitwise.
        let p = 2f64.powi(pow);
        let direct = run(OpKind::Trmm, &spec.with_alpha(p), &a, &b, 4, &backend).unwrap();
        let mut scaled = unit_alpha.clone();
        scale(p, scaled.as_mut());
        prop_assert_eq!(bits(&direct), bits(&scaled));

        // General alpha: within 4 ulp of |alpha| * (|op(A)| |B|) per entry.
        let direct = run(OpKind::Trmm, &spec.with_alpha(alpha), &a, &b, 4, &backend).unwrap();
        let mut scaled = unit_alpha;
        scale(alpha, scaled.as_mut());
        let abs_spec = spec.with_alpha(alpha.abs());
        let magnitude = oracle_trmm(&abs_spec, a.map(f64::abs).as_ref(), b.map(f64::abs).as_ref()).unwrap();
        for i in 0..b.rows() {
            for j in 0..b.cols() {
                prop_assert!((direct.get(i, j) - scaled.get(i, j)).abs() <= 4.0 * f64::EPSILON * magnitude.get(i, j) * n as f64);
            }
        }
    }

    #[test]
    fn trsm_alpha_is_applied_once_up_front(spec in any_spec(), n in 1usize..=40, alpha in -4.0f64..4.0, seed in any::<u64>()) {
        let (a, b) = problem::<f32>(&spec, n, 3, Opposite::Garbage, seed);
        let direct = run(OpKind::Trsm, &spec.with_alpha(alpha), &a, &b, 3, &Backend::sequential()).unwrap();
        let mut pre = b.clone();
        scale(alpha as f32, pre.as_mut());
        let unscaled = run(OpKind::Trsm, &spec.with_alpha(1.0), &a, &pre, 3, &Backend::sequential()).unwrap();
        prop_assert_eq!(bits(&direct), bits(&unscaled));
    }

    #[test]
    fn right_side_is_transposed_left_side(op in any_op(), spec in any_spec(), n in 1usize..=40, m in 1usize..=5, seed in any::<u64>()) {
        let right = TriangularSpec { side: Side::Right, ..spec };
        let left = TriangularSpec {
            side: Side::Left,
            trans: if spec.trans.is_transposed() { Trans::NoTrans } else { Trans::Trans },
            ..spec
        };
        let (a, b) = problem::<f64>(&right, n, m, Opposite::Garbage, seed);
        let x = run(op, &right, &a, &b, 6, &Backend::sequential()).unwrap();
        let y = run(op, &left, &a, &b.transpose(), 6, &Backend::sequential()).unwrap();
        let scale = masked_norm(&spec, &a) * rectri::oracle::norm_inf(b.as_ref());
        prop_assert!(diff_inf(&x, &y.transpose()) <= tol::<f64>(32.0, n) * scale);
    }

    #[test]
    fn depth_is_logarithmic(spec in any_spec(), n in 1usize..=300, threshold in 1usize..=64) {
        let a = MatrixBuffer::<f64>::identity(n);
        let mut b = MatrixBuffer::<f64>::zeros(n, 1);
        let spec = TriangularSpec { side: Side::Left, ..spec };
        let mut counter = CallCounter::default();
        rec_trmm_with_sink(&spec, a.as_ref(), b.as_mut(), Threshold::new(threshold).unwrap(), &Backend::sequential(), &mut counter).unwrap();
        let ratio = n as f64 / threshold as f64;
        let bound = if ratio <= 1.0 { 1 } else { ratio.log2().ceil() as usize + 1 };
        prop_assert!(counter.max_depth <= bound, "depth {} > {}", counter.max_depth, bound);
        prop_assert_eq!(counter.gemm + 1, counter.base_calls());
    }

    #[test]
    fn simulator_matches_base_kernel(spec in any_spec(), n in 1usize..=7, m in 1usize..=3, alpha in -2.0f64..2.0, seed in any::<u64>()) {
        let spec = spec.with_alpha(alpha);
        let (a, b) = problem::<f64>(&spec, n, m, Opposite::Nan, seed);
        let mut expected = b.clone();
        trsm_base(&spec, a.as_ref(), expected.as_mut(), &Backend::sequential()).unwrap();
        let program = build_trsm_program(&spec, n, m).unwrap();
        for schedule in [Schedule::Identity, Schedule::Reversed, Schedule::Seeded(seed)] {
            let out = simulate(&program, a.as_ref(), b.as_ref(), &schedule).unwrap();
            prop_assert!(out.hazards.is_empty());
            prop_assert!(out.trace.phases_monotone());
            prop_assert_eq!(bits(&out.result), bits(&expected));
        }
    }

    #[test]
    fn base_kernels_match_oracle(spec in any_spec(), n in 1usize..=64, m in 1usize..=4, seed in any::<u64>()) {
        // Diagonal magnified to at least n * max off-diagonal.
        let (mut a, b) = problem::<f64>(&spec, n, m, Opposite::Garbage, seed);
        for i in 0..n {
            let d = a.get(i, i);
            a.set(i, i, d.signum() * d.abs().max(n as f64));
        }
        let mut x = b.clone();
        trsm_base(&spec, a.as_ref(), x.as_mut(), &Backend::sequential()).unwrap();
        let residual = rectri::oracle::trsm_relative_residual(&spec, a.as_ref(), b.as_ref(), x.as_ref()).unwrap();
        prop_assert!(residual <= tol::<f64>(16.0, n));

        let mut y = b.clone();
        trmm_base(&spec, a.as_ref(), y.as_mut(), &Backend::sequential()).unwrap();
        let expected = oracle_trmm(&spec, a.as_ref(), b.as_ref()).unwrap();
        let magnitude = oracle_trmm(&spec, a.map(f64::abs).as_ref(), b.map(f64::abs).as_ref()).unwrap();
        for i in 0..b.rows() {
            for j in 0..b.cols() {
                prop_assert!((y.get(i, j) - expected.get(i, j)).abs() <= tol::<f64>(8.0, n) * magnitude.get(i, j));
            }
        }
    }

    #[test]
    fn oracle_round_trip(spec in any_spec(), n in 1usize..=32, seed in any::<u64>()) {
        let (a, b) = problem::<f64>(&spec, n, 3, Opposite::Garbage, seed);
        let x = oracle_trsm(&spec, a.as_ref(), b.as_ref()).unwrap();
        let back = oracle_trmm(&spec, a.as_ref(), x.as_ref()).unwrap();
        let scale = masked_norm(&spec, &a) * rectri::oracle::norm_inf(b.as_ref());
        prop_assert!(diff_inf(&back, &b) <= tol::<f64>(64.0, n) * scale);
    }

    #[test]
    fn oracle_trsm_residual_is_small(spec in any_spec(), n in 1usize..=32, seed in any::<u64>()) {
        let (a, b) = problem::<f64>(&spec, n, 2, Opposite::Garbage, seed);
        let x = oracle_trsm(&spec, a.as_ref(), b.as_ref()).unwrap();
        let x = x.cast::<f64>();
        let residual = rectri::oracle::trsm_relative_residual(&spec, a.as_ref(), b.as_ref(), x.as_ref()).unwrap();
        prop_assert!(residual <= tol::<f64>(8.0, n));
    }

    #[test]
    fn oracle_trmm_matches_base_kernel(spec in any_spec(), n in 1usize..=8, seed in any::<u64>()) {
        let (a, b) = problem::<f64>(&spec, n, 2, Opposite::Garbage, seed);
        let mut y = b.clone();
        trmm_base(&spec, a.as_ref(), y.as_mut(), &Backend::sequential()).unwrap();
        let expected = oracle_trmm(&spec, a.as_ref(), b.as_ref()).unwrap();
        prop_assert!(diff_inf(&y, &expected) <= tol::<f64>(8.0, n) * masked_norm(&spec, &a) * rectri::oracle::norm_inf(b.as_ref()));
    }
}

#[test]
fn spec_examples_through_recursion() {
    let seq = Backend::sequential();
    let t1 = Threshold::new(1).unwrap();
    let lower_t = TriangularSpec::new(Side::Left, Uplo::Lower, Trans::Trans, Diag::NonUnit);

    let a = MatrixBuffer::<f64>::identity(4);
    let b0 = MatrixBuffer::from_fn(4, 2, |i, j| (i as f64) - 2.0 * j as f64 + 0.5);
    let mut b = b0.clone();
    rec_trmm(&lower_t, a.as_ref(), b.as_mut(), Threshold::new(2).unwrap(), &seq).unwrap();
    assert_eq!(b, b0);

    let a = MatrixBuffer::from_rows(&[[2.0, 0.0], [3.0, 4.0]]).unwrap();
    let mut b = MatrixBuffer::from_rows(&[[1.0], [1.0]]).unwrap();
    rec_trmm(&lower_t, a.as_ref(), b.as_mut(), t1, &seq).unwrap();
    assert_eq!(b.to_rows(), vec![vec![5.0], vec![4.0]]);

    let right_upper = TriangularSpec::new(Side::Right, Uplo::Upper, Trans::NoTrans, Diag::NonUnit);
    let a = MatrixBuffer::from_rows(&[[1.0, 1.0], [0.0, 1.0]]).unwrap();
    let mut b = MatrixBuffer::from_rows(&[[1.0, 1.0]]).unwrap();
    rec_trmm(&right_upper, a.as_ref(), b.as_mut(), t1, &seq).unwrap();
    assert_eq!(b.to_rows(), vec![vec![1.0, 2.0]]);

    let lower_n = TriangularSpec::new(Side::Left, Uplo::Lower, Trans::NoTrans, Diag::NonUnit);
    let a = MatrixBuffer::<f64>::identity(8);
    let b0: MatrixBuffer<f64> = uniform_matrix(8, 3, &mut seeded(11));
    let mut b = b0.clone();
    rec_trsm(&lower_n, a.as_ref(), b.as_mut(), Threshold::new(2).unwrap(), &seq).unwrap();
    assert_eq!(b, b0);

    let a = MatrixBuffer::from_rows(&[[2.0, 0.0], [1.0, 4.0]]).unwrap();
    let mut b = MatrixBuffer::from_rows(&[[2.0], [6.0]]).unwrap();
    rec_trsm(&lower_n, a.as_ref(), b.as_mut(), t1, &seq).unwrap();
    assert_eq!(b.to_rows(), vec![vec![1.0], vec![1.25]]);
}

#[test]
fn overlapping_operands_are_rejected() {
    let spec = TriangularSpec::new(Side::Left, Uplo::Lower, Trans::NoTrans, Diag::NonUnit);
    let mut storage = MatrixBuffer::<f64>::identity(4);
    let ptr = storage.as_mut_slice().as_mut_ptr();
    // Both views cover the same 4x4 block.
    let a = unsafe { MatRef::from_raw_parts(ptr as *const f64, 4, 4, 4) };
    let b = unsafe { MatMut::from_raw_parts(ptr, 4, 4, 4) };
    assert_eq!(
        rec_trsm(&spec, a, b, Threshold::default(), &Backend::sequential()),
        Err(LinalgError::Aliasing { op: "rec_trsm" })
    );
}

#[test]
fn views_with_offsets_work_end_to_end() {
    // A and B carved out of one larger buffer at disjoint offsets.
    let spec = TriangularSpec::new(Side::Left, Uplo::Upper, Trans::Trans, Diag::NonUnit);
    let n = 9;
    let (a_small, b_small) = problem::<f64>(&spec, n, 4, Opposite::Garbage, 3);
    let mut big = MatrixBuffer::<f64>::zeros(2 * n + 1, n + 6);
    for i in 0..n {
        for j in 0..n {
            big.set(i + 1, j + 2, a_small.get(i, j));
        }
        for j in 0..4 {
            big.set(n + 1 + i, j + 3, b_small.get(i, j));
        }
    }
    let expected = run(OpKind::Trsm, &spec, &a_small, &b_small, 2, &Backend::sequential()).unwrap();
    let (top, bottom) = big.as_mut().split_at_row(n + 1);
    let a = top.into_ref().subview(1, 2, n, n).unwrap();
    let b = bottom.subview_mut(0, 3, n, 4).unwrap();
    rec_trsm(&spec, a, b, Threshold::new(2).unwrap(), &Backend::sequential()).unwrap();
    for i in 0..n {
        for j in 0..4 {
            assert_eq!(big.get(n + 1 + i, j + 3).to_bits(), expected.get(i, j).to_bits());
        }
    }
}
