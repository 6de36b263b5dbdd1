use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{squared_euclidean, Real};

const MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult<T> {
    pub labels: Vec<usize>,
    pub centroids: Matrix<T>,
    /// Sum of squared distances to the assigned centroid.
    pub inertia: T,
}

/// Lloyd's algorithm from k-means++ seeding; the best of `restarts` runs by
/// inertia wins. Deterministic for a given seed.
pub fn kmeans<T: Real>(
    z: &Matrix<T>,
    n_clusters: usize,
    seed: u64,
    restarts: usize,
) -> Result<KMeansResult<T>> {
    if n_clusters == 0 {
        return Err(Error::Evaluation("k-means needs at least 1 cluster".into()));
    }
    if n_clusters > z.rows() {
        return Err(Error::Evaluation(format!(
            "{n_clusters} clusters requested for {} points",
            z.rows()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansResult<T>> = None;
    for _ in 0..restarts.max(1) {
        let run = lloyd(z, seed_plus_plus(z, n_clusters, &mut rng));
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn seed_plus_plus<T: Real>(z: &Matrix<T>, k: usize, rng: &mut ChaCha8Rng) -> Matrix<T> {
    let n = z.rows();
    let mut centroids = Matrix::zeros(k, z.cols());
    let first = rng.random_range(0..n);
    centroids.row_mut(0).copy_from_slice(z.row(first));
    let mut closest: Vec<f64> = (0..n)
        .map(|i| squared_euclidean(z.row(i), z.row(first)).as_f64())
        .collect();
    for c in 1..k {
        let total: f64 = closest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            closest
                .iter()
                .position(|&d| {
                    acc += d;
                    acc > target
                })
                .unwrap_or(n - 1)
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).copy_from_slice(z.row(pick));
        for (i, best) in closest.iter_mut().enumerate() {
            let d = squared_euclidean(z.row(i), z.row(pick)).as_f64();
            if d < *best {
                *best = d;
            }
        }
    }
    centroids
}

fn nearest<T: Real>(point: &[T], centroids: &Matrix<T>) -> (usize, T) {
    let mut best = (0, T::infinity());
    for (c, centroid) in centroids.iter_rows().enumerate() {
        let d = squared_euclidean(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn lloyd<T: Real>(z: &Matrix<T>, mut centroids: Matrix<T>) -> KMeansResult<T> {
    let (n, dim) = z.shape();
    let k = centroids.rows();
    let mut labels = vec![usize::MAX; n];
    for _ in 0..MAX_ITERATIONS {
        let mut changed = false;
        let mut distances = Vec::with_capacity(n);
        for (i, label) in labels.iter_mut().enumerate() {
            let (c, d) = nearest(z.row(i), &centroids);
            distances.push(d);
            if *label != c {
                *label = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = Matrix::<T>::zeros(k, dim);
        let mut counts = vec![0usize; k];
        for (i, &c) in labels.iter().enumerate() {
            counts[c] += 1;
            crate::scalar::axpy(T::one(), z.row(i), sums.row_mut(c));
        }
        for c in 0..k {
            if counts[c] == 0 {
                // reseed an empty cluster at the worst-served point
                let far = (0..n)
                    .max_by(|&a, &b| distances[a].partial_cmp(&distances[b]).expect("finite"))
                    .expect("n > 0");
                distances[far] = T::zero();
                centroids.row_mut(c).copy_from_slice(z.row(far));
            } else {
                let inv = T::one() / T::from_usize_lossy(counts[c]);
                for (dst, &s) in centroids.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *dst = s * inv;
                }
            }
        }
    }
    let mut inertia = T::zero();
    for (i, label) in labels.iter_mut().enumerate() {
        let (c, d) = nearest(z.row(i), &centroids);
        *label = c;
        inertia += d;
    }
    KMeansResult {
        labels,
        centroids,
        inertia,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singletons() {
        let z = Matrix::from_rows(&[[0.0, 0.0], [5.0, 1.0]]).unwrap();
        let r = kmeans(&z, 2, 3, 10).unwrap();
        assert_ne!(r.labels[0], r.labels[1]);
        assert_eq!(r.inertia, 0.0);
    }

    #[test]
    fn deterministic_for_a_seed() {
        let z = crate::synth::blobs::<f64>(&crate::synth::BlobSpec {
            n: 60,
            dim: 4,
            centers: 3,
            separation: 3.0,
            seed: 2,
        })
        .unwrap();
        assert_eq!(kmeans(&z, 3, 7, 10).unwrap(), kmeans(&z, 3, 7, 10).unwrap());
    }

    #[test]
    fn rejects_bad_cluster_counts() {
        let z = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        assert!(kmeans(&z, 0, 1, 1).is_err());
        assert!(kmeans(&z, 3, 1, 1).is_err());
    }
}
