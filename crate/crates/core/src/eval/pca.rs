//! PCA baseline via a symmetric eigendecomposition of the sample covariance.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct Pca<T> {
    /// Column means of the fitted data.
    pub mean: Vec<T>,
    /// `d × D`, one principal direction per row, strongest first.
    pub components: Matrix<T>,
    pub explained_variance: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
}

impl<T: Real> Pca<T> {
    pub fn fit(m: &Matrix<T>, d: usize) -> Result<Self> {
        let (n, cols) = m.shape();
        if d == 0 || d > n.min(cols) {
            return Err(Error::InvalidConfig(format!(
                "PCA dimension {d} must be in 1..={} for a {n}x{cols} matrix",
                n.min(cols)
            )));
        }
        m.ensure_finite()?;
        let mut mean = vec![0.0f64; cols];
        for row in m.iter_rows() {
            for (acc, v) in mean.iter_mut().zip(row) {
                *acc += v.as_f64();
            }
        }
        mean.iter_mut().for_each(|v| *v /= n as f64);
        let centered = DMatrix::from_fn(n, cols, |i, j| m.get(i, j).as_f64() - mean[j]);
        let denom = (n.max(2) - 1) as f64;
        let cov = (centered.transpose() * &centered) / denom;
        let eig = SymmetricEigen::new(cov);

        let mut order: Vec<usize> = (0..cols).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .partial_cmp(&eig.eigenvalues[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let total: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();
        let mut components = Matrix::zeros(d, cols);
        let mut explained_variance = Vec::with_capacity(d);
        for (r, &idx) in order.iter().take(d).enumerate() {
            let v = eig.eigenvectors.column(idx);
            // fix the sign so the largest-magnitude entry is positive
            let pivot = (0..cols)
                .max_by(|&a, &b| v[a].abs().partial_cmp(&v[b].abs()).unwrap().then(b.cmp(&a)))
                .unwrap_or(0);
            let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
            for (j, out) in components.row_mut(r).iter_mut().enumerate() {
                *out = T::lit(sign * v[j]);
            }
            explained_variance.push(eig.eigenvalues[idx].max(0.0));
        }
        let explained_variance_ratio = explained_variance
            .iter()
            .map(|v| if total > 0.0 { v / total } else { 0.0 })
            .collect();
        Ok(Self {
            mean: mean.into_iter().map(T::lit).collect(),
            components,
            explained_variance,
            explained_variance_ratio,
        })
    }

    pub fn dims(&self) -> usize {
        self.components.rows()
    }

    /// Projects rows of `m` onto the components. Labels are carried over.
    pub fn transform(&self, m: &Matrix<T>) -> Result<Matrix<T>> {
        if m.cols() != self.mean.len() {
            return Err(Error::DimensionMismatch(format!(
                "PCA fitted on {} columns, got {}",
                self.mean.len(),
                m.cols()
            )));
        }
        let d = self.dims();
        let mut out = Matrix::zeros(m.rows(), d);
        let mut centered = vec![T::zero(); m.cols()];
        for i in 0..m.rows() {
            for ((c, &x), &mu) in centered.iter_mut().zip(m.row(i)).zip(&self.mean) {
                *c = x - mu;
            }
            for (r, out) in out.row_mut(i).iter_mut().enumerate() {
                *out = crate::scalar::dot(&centered, self.components.row(r));
            }
        }
        match m.labels() {
            Some(l) => out.with_labels(l.to_vec()),
            None => Ok(out),
        }
    }

    /// Maps projected rows back to the input space.
    pub fn inverse_transform(&self, z: &Matrix<T>) -> Result<Matrix<T>> {
        if z.cols() != self.dims() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} PCA coordinates, got {}",
                self.dims(),
                z.cols()
            )));
        }
        let mut out = Matrix::zeros(z.rows(), self.mean.len());
        for i in 0..z.rows() {
            let row = out.row_mut(i);
            row.copy_from_slice(&self.mean);
            for (r, &c) in z.row(i).iter().enumerate() {
                crate::scalar::axpy(c, self.components.row(r), row);
            }
        }
        Ok(out)
    }
}

/// Mean-centered projection of `m` onto its top `d` principal directions.
pub fn pca_baseline<T: Real>(m: &Matrix<T>, d: usize) -> Result<Matrix<T>> {
    Pca::fit(m, d)?.transform(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_line_has_full_ratio() {
        let m = crate::synth::line::<f64>(50, 3, 2).unwrap();
        let p = Pca::fit(&m, 1).unwrap();
        assert!((p.explained_variance_ratio[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_rank_reconstructs() {
        let m = Matrix::<f64>::from_rows(&[
            [1.0, 2.0, 0.5],
            [0.0, -1.0, 3.0],
            [2.0, 2.0, 2.0],
            [4.0, 0.0, 1.0],
        ])
        .unwrap();
        let p = Pca::fit(&m, 3).unwrap();
        let back = p.inverse_transform(&p.transform(&m).unwrap()).unwrap();
        for (a, b) in back.as_slice().iter().zip(m.as_slice()) {
            assert!((a - b).abs() < 1e-8);
        }
        let ratio: f64 = p.explained_variance_ratio.iter().sum();
        assert!((ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bad_dims() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [0.0, 1.0], [3.0, 3.0]]).unwrap();
        assert!(Pca::fit(&m, 0).is_err());
        assert!(Pca::fit(&m, 3).is_err());
    }

    #[test]
    fn keeps_labels() {
        let m = Matrix::from_rows(&[[1.0f32, 2.0], [0.0, 1.0], [3.0, 3.0]])
            .unwrap()
            .with_labels(vec![4, 5, 6])
            .unwrap();
        let z = pca_baseline(&m, 1).unwrap();
        assert_eq!(z.shape(), (3, 1));
        assert_eq!(z.labels(), Some(&[4, 5, 6][..]));
    }
}
