//! Column-major owned storage and strided rectangular windows into it.
//!
//! [`MatRef`] and [`MatMut`] are the borrowed views the rest of the crate
//! works with. Both carry the window's offset inside the buffer they were cut
//! from, so two views of the same buffer can be tested for disjointness by
//! comparing index rectangles. A view never changes the leading dimension of
//! its origin: element `(i, j)` always lives at `ptr + i + j * ld`.

use std::fmt;
use std::marker::PhantomData;

use crate::element::{ElemKind, Element};
use crate::error::{LinalgError, Result};

/// Owned column-major matrix.
#[derive(Clone, PartialEq)]
pub struct MatrixBuffer<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Element> MatrixBuffer<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(LinalgError::shape(
                "from_col_major",
                format!("{} values for a {rows}x{cols} matrix", data.len()),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    /// Build from row-major nested rows, e.g. `&[[1.0, 2.0], [3.0, 4.0]]`.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        if let Some(bad) = rows.iter().position(|r| r.as_ref().len() != ncols) {
            return Err(LinalgError::shape(
                "from_rows",
                format!("row {bad} has a different length than row 0"),
            ));
        }
        Ok(Self::from_fn(nrows, ncols, |i, j| rows[i].as_ref()[j]))
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j)).collect())
            .collect()
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn elem_kind(&self) -> ElemKind {
        T::KIND
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        self.data[i + j * self.rows]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: T) {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        self.data[i + j * self.rows] = value;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn map<U: Element>(&self, mut f: impl FnMut(T) -> U) -> MatrixBuffer<U> {
        MatrixBuffer {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn cast<U: Element>(&self) -> MatrixBuffer<U> {
        self.map(|v| U::from_f64(v.to_f64()))
    }

    pub fn as_ref(&self) -> MatRef<'_, T> {
        MatRef {
            ptr: self.data.as_ptr(),
            rows: self.rows,
            cols: self.cols,
            ld: self.rows.max(1),
            row_offset: 0,
            col_offset: 0,
            _marker: PhantomData,
        }
    }

    pub fn as_mut(&mut self) -> MatMut<'_, T> {
        MatMut {
            ptr: self.data.as_mut_ptr(),
            rows: self.rows,
            cols: self.cols,
            ld: self.rows.max(1),
            row_offset: 0,
            col_offset: 0,
            _marker: PhantomData,
        }
    }
}

impl<T: Element> fmt::Debug for MatrixBuffer<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MatrixBuffer<{}>({}x{}) ", T::KIND, self.rows, self.cols)?;
        f.debug_list().entries(self.to_rows()).finish()
    }
}

/// Read-only strided window.
pub struct MatRef<'a, T> {
    ptr: *const T,
    rows: usize,
    cols: usize,
    ld: usize,
    row_offset: usize,
    col_offset: usize,
    _marker: PhantomData<&'a T>,
}

/// Mutable strided window. Holding one guarantees exclusive access to its
/// rectangle.
pub struct MatMut<'a, T> {
    ptr: *mut T,
    rows: usize,
    cols: usize,
    ld: usize,
    row_offset: usize,
    col_offset: usize,
    _marker: PhantomData<&'a mut T>,
}

impl<T> Clone for MatRef<'_, T> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<T> Copy for MatRef<'_, T> {}

// SAFETY: a MatRef behaves like `&[T]` over its rectangle.
unsafe impl<T: Sync> Send for MatRef<'_, T> {}
unsafe impl<T: Sync> Sync for MatRef<'_, T> {}
// SAFETY: a MatMut behaves like `&mut [T]` over its rectangle.
unsafe impl<T: Send> Send for MatMut<'_, T> {}
unsafe impl<T: Sync> Sync for MatMut<'_, T> {}

fn check_rect(row: usize, col: usize, rows: usize, cols: usize, parent_rows: usize, parent_cols: usize) -> Result<()> {
    let fits = row.checked_add(rows).is_some_and(|e| e <= parent_rows)
        && col.checked_add(cols).is_some_and(|e| e <= parent_cols);
    if fits {
        Ok(())
    } else {
        Err(LinalgError::Bounds {
            row,
            col,
            rows,
            cols,
            parent_rows,
            parent_cols,
        })
    }
}

/// Geometry shared by both view kinds; used for overlap tests.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Footprint {
    base: usize,
    ptr: usize,
    elem: usize,
    rows: usize,
    cols: usize,
    ld: usize,
    row_offset: usize,
    col_offset: usize,
}

impl Footprint {
    fn new<T>(ptr: *const T, rows: usize, cols: usize, ld: usize, ro: usize, co: usize) -> Self {
        let elem = std::mem::size_of::<T>().max(1);
        let ptr = ptr as usize;
        Footprint {
            base: ptr.wrapping_sub((ro + co * ld) * elem),
            ptr,
            elem,
            rows,
            cols,
            ld,
            row_offset: ro,
            col_offset: co,
        }
    }

    fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    /// Whether any element address is shared by the two windows.
    pub(crate) fn overlaps(&self, other: &Footprint) -> bool {
        if self.is_empty() || other.is_empty() {
            return false;
        }
        if self.base == other.base && self.ld == other.ld {
            // Same origin buffer: compare index rectangles exactly.
            let rows =
                self.row_offset < other.row_offset + other.rows && other.row_offset < self.row_offset + self.rows;
            let cols =
                self.col_offset < other.col_offset + other.cols && other.col_offset < self.col_offset + self.cols;
            return rows && cols;
        }
        let last = |f: &Footprint| f.ptr + ((f.rows - 1) + (f.cols - 1) * f.ld) * f.elem;
        self.ptr <= last(other) && other.ptr <= last(self)
    }
}

impl<'a, T: Element> MatRef<'a, T> {
    /// View a column-major slice with leading dimension `ld`.
    pub fn from_slice(data: &'a [T], rows: usize, cols: usize, ld: usize) -> Result<Self> {
        if ld < rows.max(1) || (cols > 0 && rows > 0 && data.len() < (cols - 1) * ld + rows) {
            return Err(LinalgError::shape(
                "MatRef::from_slice",
                format!("slice of {} cannot hold {rows}x{cols} with ld {ld}", data.len()),
            ));
        }
        Ok(MatRef {
            ptr: data.as_ptr(),
            rows,
            cols,
            ld,
            row_offset: 0,
            col_offset: 0,
            _marker: PhantomData,
        })
    }

    /// # Safety
    ///
    /// `ptr` must be valid for reads of every `ptr + i + j * ld` with
    /// `i < rows`, `j < cols` for the lifetime `'a`, and no mutable access to
    /// those elements may happen during that lifetime.
    pub unsafe fn from_raw_parts(ptr: *const T, rows: usize, cols: usize, ld: usize) -> Self {
        MatRef {
            ptr,
            rows,
            cols,
            ld: ld.max(1),
            row_offset: 0,
            col_offset: 0,
            _marker: PhantomData,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn leading_dim(&self) -> usize {
        self.ld
    }

    pub fn row_offset(&self) -> usize {
        self.row_offset
    }

    pub fn col_offset(&self) -> usize {
        self.col_offset
    }

    pub fn as_ptr(&self) -> *const T {
        self.ptr
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        // SAFETY: bounds checked above.
        unsafe { *self.ptr.add(i + j * self.ld) }
    }

    /// # Safety
    ///
    /// `i < rows` and `j < cols`.
    #[inline(always)]
    pub unsafe fn get_unchecked(&self, i: usize, j: usize) -> T {
        *self.ptr.add(i + j * self.ld)
    }

    /// Column `j` as a contiguous slice.
    pub fn col(&self, j: usize) -> &'a [T] {
        assert!(j < self.cols, "column {j} out of bounds");
        // SAFETY: a column of a view is `rows` contiguous elements.
        unsafe { std::slice::from_raw_parts(self.ptr.add(j * self.ld), self.rows) }
    }

    pub fn subview(&self, row: usize, col: usize, rows: usize, cols: usize) -> Result<MatRef<'a, T>> {
        check_rect(row, col, rows, cols, self.rows, self.cols)?;
        Ok(MatRef {
            // SAFETY: rectangle checked; the offset stays inside the parent.
            ptr: unsafe { self.ptr.add(row + col * self.ld) },
            rows,
            cols,
            ld: self.ld,
            row_offset: self.row_offset + row,
            col_offset: self.col_offset + col,
            _marker: PhantomData,
        })
    }

    /// Infallible subview for internal callers that have already validated
    /// the rectangle.
    pub(crate) fn block(&self, row: usize, col: usize, rows: usize, cols: usize) -> MatRef<'a, T> {
        self.subview(row, col, rows, cols)
            .expect("internal block outside its parent view")
    }

    pub fn to_owned(&self) -> MatrixBuffer<T> {
        MatrixBuffer::from_fn(self.rows, self.cols, |i, j| self.get(i, j))
    }

    pub(crate) fn footprint(&self) -> Footprint {
        Footprint::new(
            self.ptr,
            self.rows,
            self.cols,
            self.ld,
            self.row_offset,
            self.col_offset,
        )
    }

    /// True when the two windows share no element.
    pub fn is_disjoint_from(&self, other: &MatMut<'_, T>) -> bool {
        !self.footprint().overlaps(&other.footprint())
    }
}

impl<'a, T: Element> MatMut<'a, T> {
    pub fn from_slice(data: &'a mut [T], rows: usize, cols: usize, ld: usize) -> Result<Self> {
        if ld < rows.max(1) || (cols > 0 && rows > 0 && data.len() < (cols - 1) * ld + rows) {
            return Err(LinalgError::shape(
                "MatMut::from_slice",
                format!("slice of {} cannot hold {rows}x{cols} with ld {ld}", data.len()),
            ));
        }
        Ok(MatMut {
            ptr: data.as_mut_ptr(),
            rows,
            cols,
            ld,
            row_offset: 0,
            col_offset: 0,
            _marker: PhantomData,
        })
    }

    /// # Safety
    ///
    /// `ptr` must be valid for reads and writes of every `ptr + i + j * ld`
    /// with `i < rows`, `j < cols` for the lifetime `'a`, and nothing else may
    /// access those elements during that lifetime.
    pub unsafe fn from_raw_parts(ptr: *mut T, rows: usize, cols: usize, ld: usize) -> Self {
        MatMut {
            ptr,
            rows,
            cols,
            ld: ld.max(1),
            row_offset: 0,
            col_offset: 0,
            _marker: PhantomData,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn leading_dim(&self) -> usize {
        self.ld
    }

    pub fn row_offset(&self) -> usize {
        self.row_offset
    }

    pub fn col_offset(&self) -> usize {
        self.col_offset
    }

    pub fn as_mut_ptr(&mut self) -> *mut T {
        self.ptr
    }

    /// Shared reborrow.
    pub fn rb(&self) -> MatRef<'_, T> {
        MatRef {
            ptr: self.ptr,
            rows: self.rows,
            cols: self.cols,
            ld: self.ld,
            row_offset: self.row_offset,
            col_offset: self.col_offset,
            _marker: PhantomData,
        }
    }

    /// Mutable reborrow.
    pub fn rb_mut(&mut self) -> MatMut<'_, T> {
        MatMut {
            ptr: self.ptr,
            rows: self.rows,
            cols: self.cols,
            ld: self.ld,
            row_offset: self.row_offset,
            col_offset: self.col_offset,
            _marker: PhantomData,
        }
    }

    pub fn into_ref(self) -> MatRef<'a, T> {
        MatRef {
            ptr: self.ptr,
            rows: self.rows,
            cols: self.cols,
            ld: self.ld,
            row_offset: self.row_offset,
            col_offset: self.col_offset,
            _marker: PhantomData,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.rb().get(i, j)
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: T) {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        // SAFETY: bounds checked above.
        unsafe { *self.ptr.add(i + j * self.ld) = value }
    }

    /// # Safety
    ///
    /// `i < rows` and `j < cols`.
    #[inline(always)]
    pub unsafe fn ptr_at(&mut self, i: usize, j: usize) -> *mut T {
        self.ptr.add(i + j * self.ld)
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        assert!(j < self.cols, "column {j} out of bounds");
        // SAFETY: columns are contiguous and we hold exclusive access.
        unsafe { std::slice::from_raw_parts_mut(self.ptr.add(j * self.ld), self.rows) }
    }

    pub fn subview_mut(self, row: usize, col: usize, rows: usize, cols: usize) -> Result<MatMut<'a, T>> {
        check_rect(row, col, rows, cols, self.rows, self.cols)?;
        Ok(MatMut {
            // SAFETY: rectangle checked; the offset stays inside the parent.
            ptr: unsafe { self.ptr.add(row + col * self.ld) },
            rows,
            cols,
            ld: self.ld,
            row_offset: self.row_offset + row,
            col_offset: self.col_offset + col,
            _marker: PhantomData,
        })
    }

    /// Split into rows `[0, mid)` and `[mid, rows)`.
    pub fn split_at_row(self, mid: usize) -> (MatMut<'a, T>, MatMut<'a, T>) {
        assert!(mid <= self.rows, "row split {mid} beyond {} rows", self.rows);
        let top = MatMut {
            rows: mid,
            ..self.shallow()
        };
        let bottom = MatMut {
            // SAFETY: mid <= rows.
            ptr: unsafe { self.ptr.add(mid) },
            rows: self.rows - mid,
            row_offset: self.row_offset + mid,
            ..self.shallow()
        };
        (top, bottom)
    }

    /// Split into columns `[0, mid)` and `[mid, cols)`.
    pub fn split_at_col(self, mid: usize) -> (MatMut<'a, T>, MatMut<'a, T>) {
        assert!(mid <= self.cols, "column split {mid} beyond {} cols", self.cols);
        let left = MatMut {
            cols: mid,
            ..self.shallow()
        };
        let right = MatMut {
            // SAFETY: mid <= cols.
            ptr: unsafe { self.ptr.add(mid * self.ld) },
            cols: self.cols - mid,
            col_offset: self.col_offset + mid,
            ..self.shallow()
        };
        (left, right)
    }

    fn shallow(&self) -> MatMut<'a, T> {
        MatMut {
            ptr: self.ptr,
            rows: self.rows,
            cols: self.cols,
            ld: self.ld,
            row_offset: self.row_offset,
            col_offset: self.col_offset,
            _marker: PhantomData,
        }
    }

    pub fn fill(&mut self, value: T) {
        for j in 0..self.cols {
            self.col_mut(j).fill(value);
        }
    }

    pub fn copy_from(&mut self, src: MatRef<'_, T>) -> Result<()> {
        if src.rows() != self.rows || src.cols() != self.cols {
            return Err(LinalgError::shape(
                "copy_from",
                format!(
                    "source {}x{} into destination {}x{}",
                    src.rows(),
                    src.cols(),
                    self.rows,
                    self.cols
                ),
            ));
        }
        for j in 0..self.cols {
            self.col_mut(j).copy_from_slice(src.col(j));
        }
        Ok(())
    }

    pub fn to_owned(&self) -> MatrixBuffer<T> {
        self.rb().to_owned()
    }

    pub(crate) fn footprint(&self) -> Footprint {
        Footprint::new(
            self.ptr,
            self.rows,
            self.cols,
            self.ld,
            self.row_offset,
            self.col_offset,
        )
    }
}

impl<T: Element> fmt::Debug for MatRef<'_, T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "MatRef({}x{} @ ({}, {}), ld {})",
            self.rows, self.cols, self.row_offset, self.col_offset, self.ld
        )
    }
}

impl<T: Element> fmt::Debug for MatMut<'_, T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "MatMut({}x{} @ ({}, {}), ld {})",
            self.rows, self.cols, self.row_offset, self.col_offset, self.ld
        )
    }
}
