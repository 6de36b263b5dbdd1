//! Synthetic labelled datasets for tests, examples and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlobSpec {
    pub n: usize,
    pub dim: usize,
    pub centers: usize,
    /// Euclidean distance between any two cluster centers.
    pub separation: f64,
    pub seed: u64,
}

impl Default for BlobSpec {
    fn default() -> Self {
        Self {
            n: 300,
            dim: 100,
            centers: 3,
            separation: 10.0,
            seed: 0,
        }
    }
}

/// Isotropic unit-variance Gaussian clusters. Center `c` sits at
/// `separation/√2 · e_c`, so every pair of centers is exactly `separation`
/// apart. Points are assigned round-robin and labelled by cluster.
pub fn blobs<T: Real>(spec: &BlobSpec) -> Result<Matrix<T>> {
    if spec.centers == 0 || spec.centers > spec.dim {
        return Err(Error::InvalidConfig(format!(
            "need 1 <= centers <= dim, got {} centers in {} dimensions",
            spec.centers, spec.dim
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let offset = spec.separation / std::f64::consts::SQRT_2;
    let mut data = Vec::with_capacity(spec.n * spec.dim);
    let mut labels = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let c = i % spec.centers;
        for j in 0..spec.dim {
            let noise: f64 = rng.sample(StandardNormal);
            let center = if j == c { offset } else { 0.0 };
            data.push(T::lit(center + noise));
        }
        labels.push(c as i64);
    }
    Matrix::from_vec(spec.n, spec.dim, data)?.with_labels(labels)
}

/// `n` points `a + t·v` on one random line in `dim` dimensions.
pub fn line<T: Real>(n: usize, dim: usize, seed: u64) -> Result<Matrix<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let anchor: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let direction: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let mut data = Vec::with_capacity(n * dim);
    for _ in 0..n {
        let t: f64 = rng.random_range(-3.0..3.0);
        data.extend(
            anchor
                .iter()
                .zip(&direction)
                .map(|(a, v)| T::lit(a + t * v)),
        );
    }
    Matrix::from_vec(n, dim, data)
}
