//! End-to-end reduction: similarity graph → random walks → skip-gram.
//!
//! In sample-space mode the rows of `M` are the graph nodes and the trained
//! input weights are returned directly. In feature-space mode the columns are
//! embedded instead (the graph is built on `Mᵀ`) and every row is mapped
//! through the resulting `D × d` matrix, which is far cheaper when `n ≫ D`.
//!
//! The embedding width `d` is a tuning knob; a value near the number of
//! classes in the data tends to work well, and small `topk` values (under 5)
//! keep the graph sparse without hurting quality.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::graph::{transpose_reduce, NeighborRule, SimilarityGraph};
use crate::matrix::Matrix;
use crate::scalar::Real;
use crate::skipgram::{train_observed, SkipGramModel, TrainConfig, TrainStats};
use crate::walk::{generate_corpus, StreamedWalks, WalkConfig, WalkCorpus, WalkSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Embed the rows of `M` directly.
    #[default]
    SampleSpace,
    /// Embed the columns of `M`, then project the rows: `M · Z`.
    FeatureSpace,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vec2vecConfig {
    pub neighbor_rule: NeighborRule,
    pub walk: WalkConfig,
    pub train: TrainConfig,
    pub mode: Mode,
    /// Regenerate walks on the fly instead of storing the corpus.
    pub stream_walks: bool,
}

impl Vec2vecConfig {
    /// Sets both the walk and the training seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.walk.seed = seed;
        self.train.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.neighbor_rule.validate()?;
        self.walk.validate()?;
        self.train.validate()
    }
}

/// Wall-clock time spent in each stage.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub graph: Duration,
    pub walks: Duration,
    pub train: Duration,
    /// Final `M · Z` product in feature-space mode.
    pub project: Duration,
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.graph + self.walks + self.train + self.project
    }
}

/// Everything a reduction produced.
#[derive(Debug, Clone)]
pub struct Reduction<T> {
    /// `n × d`; row `i` embeds row `i` of the input. Input labels carry over.
    pub embedding: Matrix<T>,
    /// Graph over the embedded objects (rows, or columns in feature mode).
    pub graph: SimilarityGraph<T>,
    /// Present unless walks were streamed.
    pub corpus: Option<WalkCorpus>,
    pub model: SkipGramModel<T>,
    pub timings: StageTimings,
    pub stats: TrainStats,
}

/// Reduces `m` to `n × d`.
pub fn reduce<T: Real>(m: &Matrix<T>, cfg: &Vec2vecConfig) -> Result<Matrix<T>> {
    reduce_detailed(m, cfg).map(|r| r.embedding)
}

pub fn reduce_detailed<T: Real>(m: &Matrix<T>, cfg: &Vec2vecConfig) -> Result<Reduction<T>> {
    cfg.validate()?;
    m.ensure_finite()?;
    match cfg.mode {
        Mode::SampleSpace => {
            let mut out = embed_nodes(m, cfg)?;
            if let Some(labels) = m.labels() {
                out.embedding = out.embedding.with_labels(labels.to_vec())?;
            }
            Ok(out)
        }
        Mode::FeatureSpace => {
            let mut inner = None;
            let started = Instant::now();
            let mut embedding = transpose_reduce(m, |features| {
                let r = embed_nodes(features, cfg)?;
                let w = r.embedding.clone();
                inner = Some(r);
                Ok(w)
            })?;
            let mut out = inner.expect("inner reduction ran");
            out.timings.project = started
                .elapsed()
                .saturating_sub(out.timings.graph + out.timings.walks + out.timings.train);
            if let Some(labels) = m.labels() {
                embedding = embedding.with_labels(labels.to_vec())?;
            }
            out.embedding = embedding;
            Ok(out)
        }
    }
}

/// Graph, walks and training over the rows of `nodes`.
fn embed_nodes<T: Real>(nodes: &Matrix<T>, cfg: &Vec2vecConfig) -> Result<Reduction<T>> {
    let n = nodes.rows();
    if n < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 points to embed, got {n}"
        )));
    }
    if cfg.train.dims >= n {
        return Err(Error::InvalidConfig(format!(
            "embedding width d = {} must be smaller than the number of embedded points ({n}); \
             a one-hot input of width {n} cannot support a wider hidden layer",
            cfg.train.dims
        )));
    }
    let mut timings = StageTimings::default();

    let t = Instant::now();
    let graph = cfg.neighbor_rule.build(nodes)?;
    timings.graph = t.elapsed();

    let t = Instant::now();
    let corpus = if cfg.stream_walks {
        None
    } else {
        Some(generate_corpus(&graph, &cfg.walk)?)
    };
    timings.walks = t.elapsed();

    let t = Instant::now();
    let (model, stats) = match &corpus {
        Some(c) => train_observed(c, cfg.walk.window, &cfg.train, &mut |_, _| {})?,
        None => {
            let streamed = StreamedWalks::new(&graph, cfg.walk)?;
            let source: &dyn WalkSource = &streamed;
            train_observed(source, cfg.walk.window, &cfg.train, &mut |_, _| {})?
        }
    };
    timings.train = t.elapsed();

    Ok(Reduction {
        embedding: model.w.clone(),
        graph,
        corpus,
        model,
        timings,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_pair_is_smallest_instance() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [1.0, 2.0]]).unwrap();
        let cfg = Vec2vecConfig {
            train: TrainConfig {
                dims: 1,
                ..Default::default()
            },
            ..Default::default()
        };
        let z = reduce(&m, &cfg).unwrap();
        assert_eq!(z.shape(), (2, 1));
        assert!(z.find_non_finite().is_none());
    }

    #[test]
    fn rejects_wide_embeddings() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0], [1.0, 1.0]]).unwrap();
        let cfg = Vec2vecConfig::default();
        let err = reduce(&m, &cfg).unwrap_err();
        assert!(err.to_string().contains("must be smaller"), "{err}");
    }

    #[test]
    fn streaming_matches_materialised() {
        let m = crate::synth::blobs::<f64>(&crate::synth::BlobSpec {
            n: 60,
            dim: 10,
            centers: 3,
            separation: 10.0,
            seed: 4,
        })
        .unwrap();
        let cfg = Vec2vecConfig {
            train: TrainConfig {
                dims: 4,
                epochs: 2,
                ..Default::default()
            },
            ..Default::default()
        };
        let a = reduce_detailed(&m, &cfg).unwrap();
        let b = reduce_detailed(
            &m,
            &Vec2vecConfig {
                stream_walks: true,
                ..cfg.clone()
            },
        )
        .unwrap();
        assert_eq!(a.embedding, b.embedding);
        assert!(a.corpus.is_some() && b.corpus.is_none());
        assert_eq!(a.embedding.labels(), m.labels());
    }

    #[test]
    fn feature_mode_projects_rows() {
        let m = crate::synth::blobs::<f64>(&crate::synth::BlobSpec {
            n: 40,
            dim: 12,
            centers: 2,
            separation: 10.0,
            seed: 9,
        })
        .unwrap();
        // shift so no column is all-zero or sign-cancelling
        let shifted =
            Matrix::from_vec(40, 12, m.as_slice().iter().map(|v| v + 20.0).collect()).unwrap();
        let cfg = Vec2vecConfig {
            mode: Mode::FeatureSpace,
            train: TrainConfig {
                dims: 3,
                epochs: 2,
                ..Default::default()
            },
            ..Default::default()
        };
        let r = reduce_detailed(&shifted, &cfg).unwrap();
        assert_eq!(r.embedding.shape(), (40, 3));
        assert_eq!(r.model.w.shape(), (12, 3));
        assert_eq!(r.embedding, shifted.matmul(&r.model.w).unwrap());
    }
}
