//! Python bindings: `import pyrectri`.
//!
//! Matrices are exposed as a small column-major `Matrix` class holding f64.
//! `trmm`, `trsm`, `gemm` and `scale` overwrite their output argument in
//! place, like the Rust API.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use rectri::kernels::{build_trsm_program, simulate as simulate_program, Schedule};
use rectri::recursion::{
    rec_trmm_with_sink, rec_trsm_with_sink, schema_for as rust_schema_for, CallCounter, DiagBlock, Half, OffDiagBlock,
    UpdateSign,
};
use rectri::{Backend, LinalgError as RustError, MatrixBuffer, OpKind, Threshold};

create_exception!(pyrectri, LinalgError, PyValueError, "Base class for rectri errors.");
create_exception!(pyrectri, ShapeError, LinalgError, "Operand shapes do not conform.");
create_exception!(
    pyrectri,
    AliasingError,
    LinalgError,
    "An output overlaps a read-only input."
);
create_exception!(
    pyrectri,
    SingularError,
    LinalgError,
    "Zero pivot on a non-unit diagonal."
);

fn to_py(err: RustError) -> PyErr {
    let msg = err.to_string();
    match err {
        RustError::Shape { .. } | RustError::Bounds { .. } => ShapeError::new_err(msg),
        RustError::Aliasing { .. } => AliasingError::new_err(msg),
        RustError::Singular { index } => SingularError::new_err((msg, index)),
        _ => LinalgError::new_err(msg),
    }
}

fn parse<T: std::str::FromStr<Err = String>>(s: &str) -> PyResult<T> {
    s.parse().map_err(PyValueError::new_err)
}

/// Dense column-major f64 matrix.
#[pyclass(name = "Matrix", module = "pyrectri", from_py_object)]
#[derive(Clone)]
struct Matrix {
    inner: MatrixBuffer<f64>,
}

#[pymethods]
impl Matrix {
    /// Build from a list of rows.
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        if rows.is_empty() {
            return Ok(Matrix {
                inner: MatrixBuffer::zeros(0, 0),
            });
        }
        MatrixBuffer::from_rows(&rows)
            .map(|inner| Matrix { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            inner: MatrixBuffer::zeros(rows, cols),
        }
    }

    #[staticmethod]
    fn identity(n: usize) -> Self {
        Matrix {
            inner: MatrixBuffer::identity(n),
        }
    }

    #[getter]
    fn rows(&self) -> usize {
        self.inner.rows()
    }

    #[getter]
    fn cols(&self) -> usize {
        self.inner.cols()
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.rows(), self.inner.cols())
    }

    fn to_list(&self) -> Vec<Vec<f64>> {
        self.inner.to_rows()
    }

    fn copy(&self) -> Self {
        self.clone()
    }

    fn transpose(&self) -> Self {
        Matrix {
            inner: self.inner.transpose(),
        }
    }

    fn __getitem__(&self, idx: (usize, usize)) -> PyResult<f64> {
        self.check(idx)?;
        Ok(self.inner.get(idx.0, idx.1))
    }

    fn __setitem__(&mut self, idx: (usize, usize), value: f64) -> PyResult<()> {
        self.check(idx)?;
        self.inner.set(idx.0, idx.1, value);
        Ok(())
    }

    fn __eq__(&self, other: &Matrix) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Matrix({:?})", self.inner.to_rows())
    }
}

impl Matrix {
    fn check(&self, (i, j): (usize, usize)) -> PyResult<()> {
        if i >= self.inner.rows() || j >= self.inner.cols() {
            return Err(pyo3::exceptions::PyIndexError::new_err(format!(
                "index ({i}, {j}) out of range for {}x{} matrix",
                self.inner.rows(),
                self.inner.cols()
            )));
        }
        Ok(())
    }
}

/// Side, triangle, transposition, diagonal and scalar of a TRMM/TRSM call.
#[pyclass(name = "TriangularSpec", module = "pyrectri", from_py_object)]
#[derive(Clone)]
struct Spec {
    inner: rectri::TriangularSpec,
}

#[pymethods]
impl Spec {
    #[new]
    #[pyo3(signature = (side = "left", uplo = "lower", trans = "n", diag = "nonunit", alpha = 1.0))]
    fn new(side: &str, uplo: &str, trans: &str, diag: &str, alpha: f64) -> PyResult<Self> {
        let inner =
            rectri::TriangularSpec::new(parse(side)?, parse(uplo)?, parse(trans)?, parse(diag)?).with_alpha(alpha);
        inner.validate().map_err(to_py)?;
        Ok(Spec { inner })
    }

    /// The 16 distinct real variants, all with alpha = 1.
    #[staticmethod]
    fn all_variants() -> Vec<Spec> {
        rectri::TriangularSpec::all_variants()
            .into_iter()
            .map(|inner| Spec { inner })
            .collect()
    }

    #[getter]
    fn side(&self) -> &'static str {
        self.inner.side.as_str()
    }

    #[getter]
    fn uplo(&self) -> &'static str {
        self.inner.uplo.as_str()
    }

    #[getter]
    fn trans(&self) -> &'static str {
        self.inner.trans.as_str()
    }

    #[getter]
    fn diag(&self) -> &'static str {
        self.inner.diag.as_str()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    fn with_alpha(&self, alpha: f64) -> Spec {
        Spec {
            inner: self.inner.with_alpha(alpha),
        }
    }

    fn variant_name(&self) -> String {
        self.inner.variant_name()
    }

    fn __repr__(&self) -> String {
        format!(
            "TriangularSpec({}, alpha={})",
            self.inner.variant_name(),
            self.inner.alpha
        )
    }
}

fn distinct(a: &Bound<'_, Matrix>, b: &Bound<'_, Matrix>) -> PyResult<()> {
    if a.is(b) {
        return Err(AliasingError::new_err("A and B are the same matrix object"));
    }
    Ok(())
}

fn run_recursive(
    op: OpKind,
    spec: &Spec,
    a: &Bound<'_, Matrix>,
    b: &Bound<'_, Matrix>,
    threshold: usize,
    backend: &str,
) -> PyResult<CallCounter> {
    distinct(a, b)?;
    let threshold = Threshold::new(threshold).map_err(to_py)?;
    let backend: Backend = parse(backend)?;
    let a = a.borrow();
    let mut b = b.borrow_mut();
    let mut counter = CallCounter::default();
    let result = match op {
        OpKind::Trmm => rec_trmm_with_sink(
            &spec.inner,
            a.inner.as_ref(),
            b.inner.as_mut(),
            threshold,
            &backend,
            &mut counter,
        ),
        OpKind::Trsm => rec_trsm_with_sink(
            &spec.inner,
            a.inner.as_ref(),
            b.inner.as_mut(),
            threshold,
            &backend,
            &mut counter,
        ),
    };
    result.map_err(to_py)?;
    Ok(counter)
}

/// B <- alpha * op(A) * B (left) or alpha * B * op(A) (right), in place.
#[pyfunction]
#[pyo3(signature = (spec, a, b, threshold = 256, backend = "seq"))]
fn trmm(spec: &Spec, a: &Bound<'_, Matrix>, b: &Bound<'_, Matrix>, threshold: usize, backend: &str) -> PyResult<()> {
    run_recursive(OpKind::Trmm, spec, a, b, threshold, backend).map(drop)
}

/// Overwrite B with X solving op(A) X = alpha B (left) or X op(A) = alpha B (right).
#[pyfunction]
#[pyo3(signature = (spec, a, b, threshold = 256, backend = "seq"))]
fn trsm(spec: &Spec, a: &Bound<'_, Matrix>, b: &Bound<'_, Matrix>, threshold: usize, backend: &str) -> PyResult<()> {
    run_recursive(OpKind::Trsm, spec, a, b, threshold, backend).map(drop)
}

/// Run TRMM or TRSM on a copy of B and report the instrumented call counts.
#[pyfunction]
#[pyo3(signature = (op, spec, a, b, threshold = 256))]
fn count_calls<'py>(
    py: Python<'py>,
    op: &str,
    spec: &Spec,
    a: &Bound<'py, Matrix>,
    b: &Bound<'py, Matrix>,
    threshold: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let scratch = Bound::new(py, b.borrow().clone())?;
    let counter = run_recursive(parse(op)?, spec, a, &scratch, threshold, "seq")?;
    let d = PyDict::new(py);
    d.set_item("gemm", counter.gemm)?;
    d.set_item("base", counter.base_calls())?;
    d.set_item("max_depth", counter.max_depth)?;
    Ok(d)
}

/// C <- alpha * op(A) * op(B) + beta * C, in place.
#[pyfunction]
#[pyo3(signature = (alpha, a, b, beta, c, trans_a = "n", trans_b = "n", backend = "seq"))]
#[allow(clippy::too_many_arguments)]
fn gemm(
    alpha: f64,
    a: &Bound<'_, Matrix>,
    b: &Bound<'_, Matrix>,
    beta: f64,
    c: &Bound<'_, Matrix>,
    trans_a: &str,
    trans_b: &str,
    backend: &str,
) -> PyResult<()> {
    distinct(a, c)?;
    distinct(b, c)?;
    let backend: Backend = parse(backend)?;
    let (a, b) = (a.borrow(), b.borrow());
    let mut c = c.borrow_mut();
    rectri::gemm_ex(
        alpha,
        parse(trans_a)?,
        a.inner.as_ref(),
        parse(trans_b)?,
        b.inner.as_ref(),
        beta,
        c.inner.as_mut(),
        &backend,
    )
    .map_err(to_py)
}

#[pyfunction]
fn scale(alpha: f64, b: &Bound<'_, Matrix>) {
    rectri::scale(alpha, b.borrow_mut().inner.as_mut());
}

#[pyfunction]
fn split_half(n: usize) -> PyResult<usize> {
    rectri::split_half(n).map_err(to_py)
}

#[pyfunction]
fn oracle_trmm(spec: &Spec, a: &Matrix, b: &Matrix) -> PyResult<Matrix> {
    rectri::oracle::oracle_trmm(&spec.inner, a.inner.as_ref(), b.inner.as_ref())
        .map(|inner| Matrix { inner })
        .map_err(to_py)
}

#[pyfunction]
fn oracle_trsm(spec: &Spec, a: &Matrix, b: &Matrix) -> PyResult<Matrix> {
    rectri::oracle::oracle_trsm(&spec.inner, a.inner.as_ref(), b.inner.as_ref())
        .map(|inner| Matrix { inner })
        .map_err(to_py)
}

/// Recursion schema as a dict: first/second diagonal block and the GEMM
/// update between them.
#[pyfunction]
fn schema_for<'py>(py: Python<'py>, op: &str, spec: &Spec) -> PyResult<Bound<'py, PyDict>> {
    let s = rust_schema_for(parse(op)?, &spec.inner);
    let block = |b: DiagBlock| match b {
        DiagBlock::A11 => "A11",
        DiagBlock::A22 => "A22",
    };
    let half = |h: Half| match h {
        Half::B1 => "B1",
        Half::B2 => "B2",
    };
    let d = PyDict::new(py);
    d.set_item("first", block(s.first))?;
    d.set_item("second", block(s.second))?;
    d.set_item(
        "offdiag",
        match s.update.block {
            OffDiagBlock::A21 => "A21",
            OffDiagBlock::A12 => "A12",
        },
    )?;
    d.set_item("transposed", s.update.transposed)?;
    d.set_item("read", half(s.update.read))?;
    d.set_item("write", half(s.update.write))?;
    d.set_item(
        "sign",
        match s.update.sign {
            UpdateSign::Accumulate => "+",
            UpdateSign::Subtract => "-",
        },
    )?;
    Ok(d)
}

fn parse_schedule(schedule: Option<&Bound<'_, PyAny>>) -> PyResult<Schedule> {
    let Some(s) = schedule else {
        return Ok(Schedule::Identity);
    };
    if let Ok(seed) = s.extract::<u64>() {
        return Ok(Schedule::Seeded(seed));
    }
    match s.extract::<String>()?.as_str() {
        "identity" => Ok(Schedule::Identity),
        "reversed" => Ok(Schedule::Reversed),
        other => Err(PyValueError::new_err(format!(
            "schedule must be 'identity', 'reversed' or an integer seed, got '{other}'"
        ))),
    }
}

/// Run the barrier-phased base TRSM program in the workgroup simulator.
/// Returns `(result, hazard_count)`.
#[pyfunction]
#[pyo3(signature = (spec, a, b, schedule = None, remove_barrier = None))]
fn simulate_trsm(
    spec: &Spec,
    a: &Matrix,
    b: &Matrix,
    schedule: Option<&Bound<'_, PyAny>>,
    remove_barrier: Option<usize>,
) -> PyResult<(Matrix, usize)> {
    let n = a.inner.rows();
    let m = match spec.inner.side {
        rectri::Side::Left => b.inner.cols(),
        rectri::Side::Right => b.inner.rows(),
    };
    let mut program = build_trsm_program(&spec.inner, n, m).map_err(to_py)?;
    if let Some(phase) = remove_barrier {
        program.remove_barrier(phase).map_err(to_py)?;
    }
    let out =
        simulate_program(&program, a.inner.as_ref(), b.inner.as_ref(), &parse_schedule(schedule)?).map_err(to_py)?;
    Ok((Matrix { inner: out.result }, out.hazards.len()))
}

#[pymodule]
fn pyrectri(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<Matrix>()?;
    m.add_class::<Spec>()?;
    m.add("LinalgError", py.get_type::<LinalgError>())?;
    m.add("ShapeError", py.get_type::<ShapeError>())?;
    m.add("AliasingError", py.get_type::<AliasingError>())?;
    m.add("SingularError", py.get_type::<SingularError>())?;
    m.add_function(wrap_pyfunction!(trmm, m)?)?;
    m.add_function(wrap_pyfunction!(trsm, m)?)?;
    m.add_function(wrap_pyfunction!(count_calls, m)?)?;
    m.add_function(wrap_pyfunction!(gemm, m)?)?;
    m.add_function(wrap_pyfunction!(scale, m)?)?;
    m.add_function(wrap_pyfunction!(split_half, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_trmm, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_trsm, m)?)?;
    m.add_function(wrap_pyfunction!(schema_for, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_trsm, m)?)?;
    Ok(())
}
