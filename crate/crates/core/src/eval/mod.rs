//! Evaluation protocols: cross-validated kNN accuracy, k-means + ARI, a PCA
//! baseline and neighborhood diagnostics.

mod ari;
mod kmeans;
mod knn_cv;
mod pca;
mod preservation;
mod report;
mod stats;

use std::collections::BTreeSet;

pub use ari::adjusted_rand_index;
pub use kmeans::{kmeans, KMeansResult};
pub use knn_cv::{knn_cv_accuracy, stratified_folds, KnnCvConfig, KnnCvResult};
pub use pca::{pca_baseline, Pca};
pub use preservation::neighborhood_preservation;
pub use report::{parse_records, stage_timings, EvalReport};
pub use stats::{average_ranks, cosine_rank_correlation, mean_std, pearson, spearman};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Real;

pub const DEFAULT_KMEANS_RESTARTS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub knn: KnnCvConfig,
    /// Defaults to the number of distinct labels.
    pub clusters: Option<usize>,
    pub kmeans_restarts: usize,
    pub seed: u64,
    pub preservation_topk: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            knn: KnnCvConfig::default(),
            clusters: None,
            kmeans_restarts: DEFAULT_KMEANS_RESTARTS,
            seed: 0,
            preservation_topk: crate::graph::DEFAULT_TOPK,
        }
    }
}

/// Runs every protocol on embedding `z` of `input`. Labels are read from `z`,
/// falling back to `input`.
pub fn evaluate_embedding<T: Real, U: Real>(
    method: &str,
    dataset: &str,
    input: &Matrix<T>,
    z: &Matrix<U>,
    opts: &EvalOptions,
    timings: Vec<(String, f64)>,
) -> Result<EvalReport> {
    let labels = z
        .labels()
        .or(input.labels())
        .ok_or_else(|| Error::Evaluation("evaluation needs row labels".into()))?
        .to_vec();
    if labels.len() != z.rows() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: z.rows(),
        });
    }
    let labelled = z.clone().with_labels(labels.clone())?;
    let cv = knn_cv_accuracy(&labelled, &opts.knn)?;
    let clusters = opts
        .clusters
        .unwrap_or_else(|| labels.iter().collect::<BTreeSet<_>>().len());
    let km = kmeans(z, clusters, opts.seed, opts.kmeans_restarts)?;
    let ari = adjusted_rand_index(&labels, &km.labels)?;
    let preservation = neighborhood_preservation(input, z, opts.preservation_topk)?;
    let report = EvalReport {
        method: method.to_owned(),
        dataset: dataset.to_owned(),
        dims: z.cols(),
        folds: opts.knn.folds,
        fold_accuracies: cv.fold_accuracies,
        chosen_k: cv.chosen_k,
        mean_accuracy: cv.mean_accuracy,
        two_std: cv.two_std,
        clustering: "kmeans".into(),
        clusters,
        ari,
        preservation_topk: opts.preservation_topk.min(z.rows().saturating_sub(1)),
        preservation,
        timings,
    };
    report.validate()?;
    Ok(report)
}
