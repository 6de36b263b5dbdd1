use serde::{Deserialize, Serialize};
use vec2vec::{Mode, NeighborRule, TrainConfig, Vec2vecConfig, WalkConfig};

use crate::args::{ModeArg, Precision};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeighborSetting {
    TopK(usize),
    Epsilon(f64),
}

/// Every pipeline parameter with defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub dims: usize,
    pub neighbors: NeighborSetting,
    pub walks: usize,
    pub walk_length: usize,
    pub window: usize,
    pub negatives: usize,
    pub lambda: f64,
    pub epochs: usize,
    pub lr: f64,
    pub subsample: f64,
    pub seed: u64,
    pub mode: ModeArg,
    pub deterministic: bool,
    pub threads: usize,
    pub stream_walks: bool,
    pub precision: Precision,
}

impl Settings {
    pub fn config(&self) -> Vec2vecConfig {
        Vec2vecConfig {
            neighbor_rule: match self.neighbors {
                NeighborSetting::TopK(k) => NeighborRule::TopK(k),
                NeighborSetting::Epsilon(e) => NeighborRule::Epsilon(e),
            },
            walk: WalkConfig {
                walks_per_node: self.walks,
                walk_length: self.walk_length,
                window: self.window,
                seed: self.seed,
            },
            train: TrainConfig {
                dims: self.dims,
                negatives: self.negatives,
                lambda: self.lambda,
                initial_lr: self.lr,
                epochs: self.epochs,
                subsample_t: self.subsample,
                seed: self.seed,
                deterministic: self.deterministic,
                threads: self.threads,
            },
            mode: match self.mode {
                ModeArg::Sample => Mode::SampleSpace,
                ModeArg::Feature => Mode::FeatureSpace,
            },
            stream_walks: self.stream_walks,
        }
    }
}
