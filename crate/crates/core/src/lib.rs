//! Similarity-preserving dimensionality reduction: a cosine neighborhood
//! graph over matrix rows, similarity-weighted random walks, and a skip-gram
//! model with negative sampling whose input weights are the embedding.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`). The aliases
//! below fix the scalar for the common cases.
//!
//! ```
//! use vec2vec::{reduce, synth, Vec2vecConfig};
//!
//! let m = synth::blobs::<f64>(&synth::BlobSpec { n: 60, dim: 10, ..Default::default() }).unwrap();
//! let mut cfg = Vec2vecConfig::default();
//! cfg.train.dims = 4;
//! let z = reduce(&m, &cfg).unwrap();
//! assert_eq!(z.shape(), (60, 4));
//! ```

pub mod error;
pub mod eval;
pub mod graph;
pub mod io;
pub mod matrix;
pub mod pipeline;
pub mod scalar;
pub mod skipgram;
pub mod synth;
pub mod walk;

pub use error::{Error, Result};
pub use graph::{NeighborRule, SimilarityGraph};
pub use matrix::{cosine_similarity, Matrix};
pub use pipeline::{reduce, reduce_detailed, Mode, Reduction, StageTimings, Vec2vecConfig};
pub use scalar::Real;
pub use skipgram::{SkipGramModel, TrainConfig};
pub use walk::{WalkConfig, WalkCorpus, WalkSource};

pub type DenseMatrix = Matrix<f64>;
pub type DenseMatrixF32 = Matrix<f32>;
pub type Graph = SimilarityGraph<f64>;
pub type GraphF32 = SimilarityGraph<f32>;
pub type Model = SkipGramModel<f64>;
pub type ModelF32 = SkipGramModel<f32>;
