use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::settings::{NeighborSetting, Settings};

#[derive(Debug, Parser)]
#[command(
    name = "vec2vec",
    version,
    about = "Similarity-preserving dimensionality reduction"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Embed the rows of a CSV matrix and write the embedding.
    Reduce(ReduceArgs),
    /// Embed (or not) a labelled CSV and write an evaluation report.
    Evaluate(EvaluateArgs),
    /// Time every pipeline stage over a grid of synthetic dataset sizes.
    BenchScaling(BenchArgs),
    /// Write a synthetic dataset as CSV.
    Generate(GenerateArgs),
    /// Repeat the run recorded in a manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Input CSV, one row per data point.
    #[arg(long)]
    pub input: PathBuf,
    /// Skip the first CSV line.
    #[arg(long)]
    pub header: bool,
    /// Zero-based column holding integer class labels.
    #[arg(long = "labels-column", visible_alias = "label-column")]
    pub labels_column: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Sample,
    Feature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F64,
    F32,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Embedding width d.
    #[arg(long, default_value_t = 16, value_parser = positive)]
    pub dims: usize,
    /// Connect each row to its topk most cosine-similar rows.
    #[arg(long, value_parser = positive, conflicts_with = "epsilon")]
    pub topk: Option<usize>,
    /// Connect rows whose cosine similarity exceeds this threshold.
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: Option<f64>,
    /// Walks started from every node.
    #[arg(long, default_value_t = 10, value_parser = positive)]
    pub walks: usize,
    #[arg(long = "walk-length", default_value_t = 40, value_parser = positive)]
    pub walk_length: usize,
    /// Context half-width.
    #[arg(long, default_value_t = 5, value_parser = positive)]
    pub window: usize,
    /// Negative samples per positive pair.
    #[arg(long, default_value_t = 5, value_parser = positive)]
    pub negatives: usize,
    /// L2 coefficient.
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 5, value_parser = positive)]
    pub epochs: usize,
    /// Initial learning rate.
    #[arg(long, default_value_t = 0.025)]
    pub lr: f64,
    /// Frequency subsampling threshold; 0 disables.
    #[arg(long, default_value_t = 0.001)]
    pub subsample: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Sample)]
    pub mode: ModeArg,
    /// Sequential, bit-reproducible training on a single worker.
    #[arg(long)]
    pub deterministic: bool,
    /// Worker threads; more than one enables lock-free parallel training.
    #[arg(long, env = "VEC2VEC_THREADS")]
    pub threads: Option<usize>,
    /// Regenerate walks during training instead of storing them.
    #[arg(long = "stream-walks")]
    pub stream_walks: bool,
    #[arg(long, value_enum, default_value_t = Precision::F64)]
    pub precision: Precision,
}

impl ModelArgs {
    pub fn settings(&self) -> Settings {
        let threads = self.threads.unwrap_or(0);
        Settings {
            dims: self.dims,
            neighbors: match self.epsilon {
                Some(epsilon) => NeighborSetting::Epsilon(epsilon),
                None => NeighborSetting::TopK(self.topk.unwrap_or(vec2vec::graph::DEFAULT_TOPK)),
            },
            walks: self.walks,
            walk_length: self.walk_length,
            window: self.window,
            negatives: self.negatives,
            lambda: self.lambda,
            epochs: self.epochs,
            lr: self.lr,
            subsample: self.subsample,
            seed: self.seed,
            mode: self.mode,
            deterministic: self.deterministic || threads <= 1,
            threads,
            stream_walks: self.stream_walks,
            precision: self.precision,
        }
    }
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Embedding file to write.
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Also write the similarity graph as "u v weight" lines.
    #[arg(long = "dump-graph")]
    pub dump_graph: Option<PathBuf>,
    /// Also write the walk corpus, one walk per line.
    #[arg(long = "dump-corpus")]
    pub dump_corpus: Option<PathBuf>,
    /// Also write both weight matrices.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Vec2vec,
    Pca,
    Identity,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = Method::Vec2vec)]
    pub method: Method,
    /// Report file (key = value lines); a records file is written next to it.
    #[arg(long)]
    pub output: PathBuf,
    /// Machine-readable "metric<TAB>value" file; defaults to OUTPUT.tsv.
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// Dataset name recorded in the report; defaults to the input file stem.
    #[arg(long)]
    pub dataset: Option<String>,
    #[arg(long, default_value_t = 4, value_parser = at_least_two)]
    pub folds: usize,
    /// Neighbor counts tried by the inner grid search.
    #[arg(long = "k-grid", value_delimiter = ',', default_value = "1,3,5,7,9,11", value_parser = positive)]
    pub k_grid: Vec<usize>,
    /// k-means cluster count; defaults to the number of distinct labels.
    #[arg(long, value_parser = positive)]
    pub clusters: Option<usize>,
    #[arg(long, default_value_t = vec2vec::eval::DEFAULT_KMEANS_RESTARTS, value_parser = positive)]
    pub restarts: usize,
    /// Neighborhood size for the preservation rate.
    #[arg(long = "preservation-topk", default_value_t = vec2vec::graph::DEFAULT_TOPK, value_parser = positive)]
    pub preservation_topk: usize,
    /// Also write the evaluated embedding.
    #[arg(long = "embedding-output")]
    pub embedding_output: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated sample counts.
    #[arg(long = "n-list", value_delimiter = ',', default_value = "1000", value_parser = positive)]
    pub n_list: Vec<usize>,
    /// Comma-separated input dimensions.
    #[arg(long = "d-list", value_delimiter = ',', default_value = "100", value_parser = positive)]
    pub d_list: Vec<usize>,
    /// Seed of the synthetic blob generator.
    #[arg(long = "data-seed", default_value_t = 0)]
    pub data_seed: u64,
    #[arg(long, default_value_t = 3, value_parser = positive)]
    pub centers: usize,
    #[arg(long, default_value_t = 10.0)]
    pub separation: f64,
    /// Runs per grid point; each stage reports its fastest run.
    #[arg(long, default_value_t = 1, value_parser = positive)]
    pub repeats: usize,
    /// Write the table here as well as to stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Blobs,
    Line,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value_t = Shape::Blobs)]
    pub kind: Shape,
    #[arg(long, default_value_t = 300, value_parser = positive)]
    pub n: usize,
    #[arg(long, default_value_t = 100, value_parser = positive)]
    pub dim: usize,
    #[arg(long, default_value_t = 3, value_parser = positive)]
    pub centers: usize,
    #[arg(long, default_value_t = 10.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Omit the leading label column.
    #[arg(long = "no-labels")]
    pub no_labels: bool,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    /// Manifest written by an earlier run.
    pub manifest: PathBuf,
    /// Write outputs into this directory instead of their recorded paths.
    #[arg(long = "output-dir")]
    pub output_dir: Option<PathBuf>,
}

fn positive(s: &str) -> Result<usize, String> {
    match s.trim().parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn at_least_two(s: &str) -> Result<usize, String> {
    match positive(s)? {
        1 => Err("must be at least 2".into()),
        v => Ok(v),
    }
}
