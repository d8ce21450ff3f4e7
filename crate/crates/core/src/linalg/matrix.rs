use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Dense real matrix with at least one row and one column and only finite
/// entries.
///
/// Samples are stored one per column throughout the crate, so a data set of
/// `N` samples with `d` features is a `d x N` matrix. Storage is delegated to
/// [`nalgebra::DMatrix`]; the row-major accessors exist for I/O.
#[derive(Clone, PartialEq)]
pub struct DataMatrix(DMatrix<f64>);

impl DataMatrix {
    /// Builds a matrix from values listed row by row.
    pub fn from_row_major(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::dim(
                "DataMatrix::from_row_major",
                "rows >= 1 and cols >= 1",
                format!("{rows}x{cols}"),
            ));
        }
        if values.len() != rows * cols {
            return Err(Error::dim(
                "DataMatrix::from_row_major",
                rows * cols,
                values.len(),
            ));
        }
        Self::new(DMatrix::from_row_slice(rows, cols, &values))
    }

    /// Builds a matrix from a list of rows. All rows must share a length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::dim("DataMatrix::from_rows", cols, bad.len()));
        }
        Self::from_row_major(rows.len(), cols, rows.concat())
    }

    /// Wraps an nalgebra matrix after checking the shape and finiteness invariants.
    pub fn new(inner: DMatrix<f64>) -> Result<Self> {
        if inner.nrows() == 0 || inner.ncols() == 0 {
            return Err(Error::dim(
                "DataMatrix::new",
                "rows >= 1 and cols >= 1",
                format!("{}x{}", inner.nrows(), inner.ncols()),
            ));
        }
        if let Some(idx) = inner.iter().position(|v| !v.is_finite()) {
            // nalgebra iterates column-major
            let rows = inner.nrows();
            return Err(Error::NonFinite {
                row: idx % rows,
                col: idx / rows,
            });
        }
        Ok(DataMatrix(inner))
    }

    /// Internal constructor for results of arithmetic on already valid matrices.
    pub(crate) fn wrap(inner: DMatrix<f64>) -> Self {
        debug_assert!(inner.nrows() > 0 && inner.ncols() > 0);
        DataMatrix(inner)
    }

    /// Like [`DataMatrix::new`] but reports which operation produced a
    /// non-finite value.
    pub(crate) fn checked(inner: DMatrix<f64>, operation: &'static str) -> Result<Self> {
        if inner.iter().all(|v| v.is_finite()) {
            Ok(DataMatrix(inner))
        } else {
            Err(Error::NumericalFailure {
                operation,
                rows: inner.nrows(),
                cols: inner.ncols(),
            })
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "DataMatrix must be at least 1x1");
        DataMatrix(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        assert!(n > 0, "DataMatrix must be at least 1x1");
        DataMatrix(DMatrix::identity(n, n))
    }

    /// Matrix with entries `f(i, j)`. Panics if any entry is non-finite.
    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> f64) -> Self {
        let m = DMatrix::from_fn(rows, cols, f);
        Self::new(m).expect("from_fn produced an invalid matrix")
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.0.get((i, j)).copied()
    }

    pub fn as_inner(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            out.extend(self.0.row(i).iter());
        }
        out
    }

    pub fn transpose(&self) -> Self {
        DataMatrix(self.0.transpose())
    }

    pub fn matmul(&self, rhs: &DataMatrix) -> Result<DataMatrix> {
        if self.cols() != rhs.rows() {
            return Err(Error::dim(
                "matmul",
                format!("rhs with {} rows", self.cols()),
                format!("{}x{}", rhs.rows(), rhs.cols()),
            ));
        }
        Ok(DataMatrix(&self.0 * &rhs.0))
    }

    pub fn scale(&self, factor: f64) -> Self {
        DataMatrix(&self.0 * factor)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// Frobenius norm of `self - other`.
    pub fn distance(&self, other: &DataMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        (&self.0 - &other.0).norm()
    }

    /// Row index of the largest entry in each column; ties go to the smallest index.
    pub fn column_argmax(&self) -> Vec<usize> {
        self.0
            .column_iter()
            .map(|col| {
                let mut best = 0;
                for (i, &v) in col.iter().enumerate() {
                    if v > col[best] {
                        best = i;
                    }
                }
                best
            })
            .collect()
    }

    /// Copy of the listed columns, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> Result<DataMatrix> {
        if indices.is_empty() {
            return Err(Error::dim("select_columns", "at least one column", 0));
        }
        if let Some(&bad) = indices.iter().find(|&&j| j >= self.cols()) {
            return Err(Error::dim(
                "select_columns",
                format!("index < {}", self.cols()),
                bad,
            ));
        }
        Ok(DataMatrix(self.0.select_columns(indices)))
    }

    /// Stacks matrices on top of each other. All parts must share a column count.
    pub fn vstack(parts: &[&DataMatrix]) -> Result<DataMatrix> {
        let first = parts
            .first()
            .ok_or_else(|| Error::dim("vstack", "at least one block", 0))?;
        let cols = first.cols();
        if let Some(bad) = parts.iter().find(|p| p.cols() != cols) {
            return Err(Error::dim("vstack", format!("{cols} columns"), bad.cols()));
        }
        let rows: usize = parts.iter().map(|p| p.rows()).sum();
        let mut out = DMatrix::zeros(rows, cols);
        let mut offset = 0;
        for p in parts {
            out.rows_mut(offset, p.rows()).copy_from(&p.0);
            offset += p.rows();
        }
        Ok(DataMatrix(out))
    }
}

impl std::ops::Index<(usize, usize)> for DataMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

impl fmt::Debug for DataMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rows() * self.cols() <= 64 {
            write!(f, "DataMatrix{:?}", self.to_rows())
        } else {
            write!(f, "DataMatrix({}x{})", self.rows(), self.cols())
        }
    }
}

impl DataMatrix {
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows())
            .map(|i| self.0.row(i).iter().copied().collect())
            .collect()
    }
}
