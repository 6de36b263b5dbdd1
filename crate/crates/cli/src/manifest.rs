use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::args::{Method, Shape};
use crate::output::{with_suffix, write_text};
use crate::settings::Settings;

pub const MANIFEST_SUFFIX: &str = ".manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSpec {
    pub path: PathBuf,
    pub header: bool,
    pub labels_column: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSettings {
    pub folds: usize,
    pub k_grid: Vec<usize>,
    pub clusters: Option<usize>,
    pub restarts: usize,
    pub preservation_topk: usize,
}

/// A fully resolved invocation; enough to repeat it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Job {
    Reduce {
        input: InputSpec,
        settings: Settings,
        output: PathBuf,
        dump_graph: Option<PathBuf>,
        dump_corpus: Option<PathBuf>,
        checkpoint: Option<PathBuf>,
    },
    Evaluate {
        input: InputSpec,
        dataset: String,
        method: Method,
        settings: Settings,
        eval: EvalSettings,
        report: PathBuf,
        records: PathBuf,
        embedding: Option<PathBuf>,
    },
    BenchScaling {
        n_list: Vec<usize>,
        d_list: Vec<usize>,
        data_seed: u64,
        centers: usize,
        separation: f64,
        repeats: usize,
        settings: Settings,
        output: Option<PathBuf>,
    },
    Generate {
        kind: Shape,
        n: usize,
        dim: usize,
        centers: usize,
        separation: f64,
        seed: u64,
        labels: bool,
        output: PathBuf,
    },
}

impl Job {
    /// The file the manifest is named after, if the job writes one.
    pub fn primary_output(&self) -> Option<&Path> {
        match self {
            Job::Reduce { output, .. } | Job::Generate { output, .. } => Some(output),
            Job::Evaluate { report, .. } => Some(report),
            Job::BenchScaling { output, .. } => output.as_deref(),
        }
    }

    pub fn input(&self) -> Option<&InputSpec> {
        match self {
            Job::Reduce { input, .. } | Job::Evaluate { input, .. } => Some(input),
            _ => None,
        }
    }

    fn output_paths_mut(&mut self) -> Vec<&mut PathBuf> {
        match self {
            Job::Reduce {
                output,
                dump_graph,
                dump_corpus,
                checkpoint,
                ..
            } => {
                let mut v = vec![output];
                v.extend(dump_graph.as_mut());
                v.extend(dump_corpus.as_mut());
                v.extend(checkpoint.as_mut());
                v
            }
            Job::Evaluate {
                report,
                records,
                embedding,
                ..
            } => {
                let mut v = vec![report, records];
                v.extend(embedding.as_mut());
                v
            }
            Job::BenchScaling { output, .. } => output.as_mut().into_iter().collect(),
            Job::Generate { output, .. } => vec![output],
        }
    }

    /// Moves every output into `dir`, keeping file names.
    pub fn redirect_outputs(&mut self, dir: &Path) {
        for p in self.output_paths_mut() {
            if let Some(name) = p.file_name() {
                *p = dir.join(name);
            }
        }
    }

    pub fn seeds(&self) -> Seeds {
        match self {
            Job::Reduce { settings, .. } | Job::Evaluate { settings, .. } => Seeds {
                walk: Some(settings.seed),
                train: Some(settings.seed),
                data: None,
            },
            Job::BenchScaling {
                settings,
                data_seed,
                ..
            } => Seeds {
                walk: Some(settings.seed),
                train: Some(settings.seed),
                data: Some(*data_seed),
            },
            Job::Generate { seed, .. } => Seeds {
                walk: None,
                train: None,
                data: Some(*seed),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub walk: Option<u64>,
    pub train: Option<u64>,
    pub data: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub sha256: String,
    pub bytes: u64,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub job: Job,
    pub input_digest: Option<InputDigest>,
    pub seeds: Seeds,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(
        job: Job,
        input_digest: Option<InputDigest>,
        timings: BTreeMap<String, f64>,
        outputs: Vec<PathBuf>,
    ) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            seeds: job.seeds(),
            job,
            input_digest,
            timings,
            outputs,
        }
    }

    pub fn path_for(primary: &Path) -> PathBuf {
        with_suffix(primary, MANIFEST_SUFFIX)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_text(path, &text)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }
}
