//! Stratified k-fold cross-validation of a Euclidean kNN classifier, with
//! the neighbor count picked per training fold by an inner grid search.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{squared_euclidean, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct KnnCvConfig {
    pub folds: usize,
    pub k_grid: Vec<usize>,
    /// Shuffles fold membership.
    pub seed: u64,
}

impl Default for KnnCvConfig {
    fn default() -> Self {
        Self {
            folds: 4,
            k_grid: vec![1, 3, 5, 7, 9, 11],
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnCvResult {
    pub fold_accuracies: Vec<f64>,
    /// Neighbor count chosen on each training fold.
    pub chosen_k: Vec<usize>,
    pub mean_accuracy: f64,
    /// Twice the (population) standard deviation of the fold accuracies.
    pub two_std: f64,
}

/// Assigns every row to one of `folds` folds so that each class is spread as
/// evenly as possible. Fails when a class has fewer members than folds.
pub fn stratified_folds(labels: &[i64], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::Evaluation(format!(
            "need at least 2 folds, got {folds}"
        )));
    }
    if labels.len() < folds {
        return Err(Error::Evaluation(format!(
            "{} rows cannot fill {folds} folds",
            labels.len()
        )));
    }
    let mut by_class: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    let mut offset = 0;
    for (label, mut members) in by_class {
        if members.len() < folds {
            return Err(Error::Evaluation(format!(
                "class {label} has {} members, fewer than {folds} folds",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for (pos, &i) in members.iter().enumerate() {
            assignment[i] = (offset + pos) % folds;
        }
        offset += members.len();
    }
    Ok(assignment)
}

/// Majority label among the first `k` neighbors; ties go to the smallest label.
fn vote(neighbor_labels: &[i64], k: usize, counts: &mut BTreeMap<i64, usize>) -> i64 {
    counts.clear();
    for &l in &neighbor_labels[..k.min(neighbor_labels.len())] {
        *counts.entry(l).or_default() += 1;
    }
    let mut best = (i64::MAX, 0usize);
    for (&label, &count) in counts.iter() {
        if count > best.1 {
            best = (label, count);
        }
    }
    best.0
}

/// Labels of the `k_max` training rows nearest to `query`, nearest first,
/// ties by lower row index.
fn neighbor_labels<T: Real>(
    z: &Matrix<T>,
    labels: &[i64],
    train: &[usize],
    query: usize,
    k_max: usize,
    scratch: &mut Vec<(T, usize)>,
) -> Vec<i64> {
    scratch.clear();
    scratch.extend(
        train
            .iter()
            .filter(|&&j| j != query)
            .map(|&j| (squared_euclidean(z.row(query), z.row(j)), j)),
    );
    let cmp = |a: &(T, usize), b: &(T, usize)| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
    };
    let k = k_max.min(scratch.len());
    if k == 0 {
        return Vec::new();
    }
    if k < scratch.len() {
        scratch.select_nth_unstable_by(k - 1, cmp);
        scratch.truncate(k);
    }
    scratch.sort_by(cmp);
    scratch.iter().map(|&(_, j)| labels[j]).collect()
}

/// Accuracy for every `k` in `grid`, training on `train` and testing on `test`.
fn grid_accuracy<T: Real>(
    z: &Matrix<T>,
    labels: &[i64],
    train: &[usize],
    test: &[usize],
    grid: &[usize],
) -> Vec<f64> {
    let k_max = grid.iter().copied().max().unwrap_or(1);
    let mut correct = vec![0usize; grid.len()];
    let mut scratch = Vec::with_capacity(train.len());
    let mut counts = BTreeMap::new();
    for &q in test {
        let nl = neighbor_labels(z, labels, train, q, k_max, &mut scratch);
        for (slot, &k) in grid.iter().enumerate() {
            if vote(&nl, k, &mut counts) == labels[q] {
                correct[slot] += 1;
            }
        }
    }
    correct
        .iter()
        .map(|&c| c as f64 / test.len().max(1) as f64)
        .collect()
}

/// Picks the grid entry with the best inner cross-validated accuracy on the
/// training rows (smallest `k` on ties). Falls back to leave-one-out when a
/// class is too small for the inner folds.
fn select_k<T: Real>(
    z: &Matrix<T>,
    labels: &[i64],
    train: &[usize],
    cfg: &KnnCvConfig,
    fold_seed: u64,
) -> usize {
    if cfg.k_grid.len() == 1 {
        return cfg.k_grid[0];
    }
    let train_labels: Vec<i64> = train.iter().map(|&i| labels[i]).collect();
    let mut score = vec![0.0; cfg.k_grid.len()];
    match stratified_folds(&train_labels, cfg.folds, fold_seed) {
        Ok(inner) => {
            for f in 0..cfg.folds {
                let (fit, hold): (Vec<_>, Vec<_>) =
                    train.iter().zip(&inner).partition(|&(_, &g)| g != f);
                let fit: Vec<usize> = fit.into_iter().map(|(&i, _)| i).collect();
                let hold: Vec<usize> = hold.into_iter().map(|(&i, _)| i).collect();
                let acc = grid_accuracy(z, labels, &fit, &hold, &cfg.k_grid);
                for (s, a) in score.iter_mut().zip(acc) {
                    *s += a * hold.len() as f64;
                }
            }
        }
        Err(_) => {
            // the query row is skipped inside neighbor_labels
            score = grid_accuracy(z, labels, train, train, &cfg.k_grid);
        }
    }
    let mut best = 0;
    for slot in 1..cfg.k_grid.len() {
        let better = score[slot] > score[best]
            || (score[slot] == score[best] && cfg.k_grid[slot] < cfg.k_grid[best]);
        if better {
            best = slot;
        }
    }
    cfg.k_grid[best]
}

/// Cross-validated kNN accuracy of the labelled rows of `z`.
pub fn knn_cv_accuracy<T: Real>(z: &Matrix<T>, cfg: &KnnCvConfig) -> Result<KnnCvResult> {
    let labels = z
        .labels()
        .ok_or_else(|| Error::Evaluation("kNN evaluation needs row labels".into()))?;
    if cfg.k_grid.is_empty() || cfg.k_grid.contains(&0) {
        return Err(Error::Evaluation(
            "k grid must be nonempty and positive".into(),
        ));
    }
    let assignment = stratified_folds(labels, cfg.folds, cfg.seed)?;
    let (fold_accuracies, chosen_k): (Vec<f64>, Vec<usize>) = (0..cfg.folds)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = (0..z.rows()).filter(|&i| assignment[i] != f).collect();
            let test: Vec<usize> = (0..z.rows()).filter(|&i| assignment[i] == f).collect();
            let k = select_k(z, labels, &train, cfg, cfg.seed.wrapping_add(f as u64 + 1));
            (grid_accuracy(z, labels, &train, &test, &[k])[0], k)
        })
        .unzip();
    let (mean, std) = super::stats::mean_std(&fold_accuracies);
    Ok(KnnCvResult {
        fold_accuracies,
        chosen_k,
        mean_accuracy: mean,
        two_std: 2.0 * std,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_are_stratified() {
        let labels: Vec<i64> = (0..40).map(|i| i % 2).collect();
        let a = stratified_folds(&labels, 4, 3).unwrap();
        for f in 0..4 {
            let members: Vec<_> = (0..40).filter(|&i| a[i] == f).collect();
            assert_eq!(members.len(), 10);
            assert_eq!(members.iter().filter(|&&i| labels[i] == 0).count(), 5);
        }
        assert!(stratified_folds(&[0, 0, 0, 1, 1, 1, 1, 1], 4, 0).is_err());
        assert!(stratified_folds(&[0, 1], 4, 0).is_err());
    }

    #[test]
    fn vote_ties_go_to_smallest_label() {
        let mut counts = BTreeMap::new();
        assert_eq!(vote(&[3, 1, 1, 3], 4, &mut counts), 1);
        assert_eq!(vote(&[3, 1, 1, 3], 1, &mut counts), 3);
        assert_eq!(vote(&[5, 2], 2, &mut counts), 2);
    }

    #[test]
    fn separable_blobs_are_perfect() {
        let z = crate::synth::blobs::<f64>(&crate::synth::BlobSpec {
            n: 80,
            dim: 3,
            centers: 2,
            separation: 50.0,
            seed: 1,
        })
        .unwrap();
        for grid in [vec![1], vec![1, 3, 5, 7, 9, 11]] {
            let r = knn_cv_accuracy(
                &z,
                &KnnCvConfig {
                    k_grid: grid,
                    ..Default::default()
                },
            )
            .unwrap();
            assert_eq!(r.mean_accuracy, 1.0);
            assert_eq!(r.two_std, 0.0);
            assert_eq!(r.fold_accuracies.len(), 4);
        }
    }

    #[test]
    fn single_k_grid_is_plain_cv() {
        let z = crate::synth::blobs::<f64>(&crate::synth::BlobSpec {
            n: 60,
            dim: 3,
            centers: 3,
            separation: 1.5,
            seed: 4,
        })
        .unwrap();
        let cfg = KnnCvConfig {
            k_grid: vec![1],
            ..Default::default()
        };
        let r = knn_cv_accuracy(&z, &cfg).unwrap();
        assert_eq!(r.chosen_k, vec![1; 4]);
        // 1-NN by hand
        let labels = z.labels().unwrap();
        let folds = stratified_folds(labels, 4, 0).unwrap();
        let mut correct = [0usize; 4];
        let mut sizes = [0usize; 4];
        for q in 0..60 {
            let nearest = (0..60)
                .filter(|&j| folds[j] != folds[q])
                .min_by(|&a, &b| {
                    squared_euclidean(z.row(q), z.row(a))
                        .partial_cmp(&squared_euclidean(z.row(q), z.row(b)))
                        .unwrap()
                })
                .unwrap();
            sizes[folds[q]] += 1;
            if labels[nearest] == labels[q] {
                correct[folds[q]] += 1;
            }
        }
        for f in 0..4 {
            assert_eq!(r.fold_accuracies[f], correct[f] as f64 / sizes[f] as f64);
        }
    }

    #[test]
    fn needs_labels_and_big_enough_classes() {
        let z = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]).unwrap();
        assert!(knn_cv_accuracy(&z, &KnnCvConfig::default()).is_err());
        let z = z.with_labels(vec![0, 0, 0, 1]).unwrap();
        assert!(knn_cv_accuracy(&z, &KnnCvConfig::default()).is_err());
    }
}
