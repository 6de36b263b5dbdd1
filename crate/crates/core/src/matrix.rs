//! Dense row-major matrices and row-vector similarity.

use crate::error::{Error, Result};
use crate::scalar::{dot, squared_norm, Real};

/// A dense `rows × cols` matrix stored row-major, optionally carrying one
/// integer class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
    labels: Option<Vec<i64>>,
}

impl<T: Real> Matrix<T> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            data,
            labels: None,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
            labels: None,
        }
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} columns, expected {cols}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::from_vec(rows.len(), cols, data)
    }

    /// Attaches one label per row.
    pub fn with_labels(mut self, labels: Vec<i64>) -> Result<Self> {
        if labels.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} rows",
                labels.len(),
                self.rows
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn without_labels(mut self) -> Self {
        self.labels = None;
        self
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
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn labels(&self) -> Option<&[i64]> {
        self.labels.as_deref()
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        // chunks_exact rejects a zero chunk size
        (0..self.rows).map(move |i| self.row(i))
    }

    /// First non-finite entry, if any.
    pub fn find_non_finite(&self) -> Option<(usize, usize)> {
        self.data
            .iter()
            .position(|v| !v.is_finite())
            .map(|p| (p / self.cols.max(1), p % self.cols.max(1)))
    }

    pub fn ensure_finite(&self) -> Result<()> {
        match self.find_non_finite() {
            Some((row, col)) => Err(Error::NonFiniteInput { row, col }),
            None => Ok(()),
        }
    }

    /// Labels are dropped; they belong to rows, not columns.
    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// `self · rhs`. Row labels of `self` carry over.
    pub fn matmul(&self, rhs: &Matrix<T>) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                crate::scalar::axpy(a, rhs.row(k), out_row);
            }
        }
        out.labels = self.labels.clone();
        Ok(out)
    }

    pub fn row_norms(&self) -> Vec<T> {
        self.iter_rows().map(|r| squared_norm(r).sqrt()).collect()
    }

    /// Squared row norms; fails on the first zero-norm row.
    pub fn nonzero_row_sq_norms(&self) -> Result<Vec<T>> {
        let norms: Vec<T> = self.iter_rows().map(squared_norm).collect();
        match norms.iter().position(|&n| n == T::zero()) {
            Some(row) => Err(Error::ZeroNorm { row }),
            None => Ok(norms),
        }
    }

    /// Cosine similarity between rows `i` and `j`.
    pub fn row_cosine(&self, i: usize, j: usize) -> Result<T> {
        cosine_similarity(self.row(i), self.row(j)).map_err(|e| match e {
            Error::ZeroNorm { row: 0 } => Error::ZeroNorm { row: i },
            Error::ZeroNorm { .. } => Error::ZeroNorm { row: j },
            other => other,
        })
    }

    /// Converts every entry to another scalar type.
    pub fn cast<U: Real>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| U::lit(v.as_f64())).collect(),
            labels: self.labels.clone(),
        }
    }
}

/// Cosine of the angle between `a` and `b`, clamped to `[-1, 1]`.
///
/// A zero-norm argument is reported as `ZeroNorm { row }` where `row` is the
/// argument position (0 or 1); [`Matrix::row_cosine`] rewrites it to the
/// matrix row index.
pub fn cosine_similarity<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let sa = squared_norm(a);
    if sa == T::zero() {
        return Err(Error::ZeroNorm { row: 0 });
    }
    let sb = squared_norm(b);
    if sb == T::zero() {
        return Err(Error::ZeroNorm { row: 1 });
    }
    Ok(cosine_with_sq_norms(a, b, sa, sb))
}

/// Cosine from precomputed squared norms. Every similarity in the crate goes
/// through this so that different search paths agree bit for bit.
#[inline]
pub(crate) fn cosine_with_sq_norms<T: Real>(a: &[T], b: &[T], sa: T, sb: T) -> T {
    // sqrt(sa * sb) keeps parallel vectors at exactly 1
    let mut denom = (sa * sb).sqrt();
    if !denom.is_normal() {
        denom = sa.sqrt() * sb.sqrt();
    }
    let sim = dot(a, b) / denom;
    sim.min(T::one()).max(-T::one())
}
