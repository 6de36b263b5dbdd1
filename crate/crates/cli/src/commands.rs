use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Cursor, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use vec2vec::eval::{self, EvalOptions, KnnCvConfig};
use vec2vec::io::{format_real, read_csv, write_checkpoint, write_embedding};
use vec2vec::synth::{blobs, line, BlobSpec};
use vec2vec::walk::generate_corpus;
use vec2vec::{reduce_detailed, Matrix, Real};

use crate::args::{Method, Precision, Shape};
use crate::manifest::{EvalSettings, InputDigest, InputSpec, Job};
use crate::output::{sha256_hex, write_atomic, write_text};
use crate::settings::Settings;

/// What a finished job produced.
pub struct Outcome {
    pub timings: BTreeMap<String, f64>,
    pub outputs: Vec<PathBuf>,
    pub digest: Option<InputDigest>,
}

pub fn execute(job: &Job) -> Result<Outcome> {
    let precision = match job {
        Job::Reduce { settings, .. }
        | Job::Evaluate { settings, .. }
        | Job::BenchScaling { settings, .. } => settings.precision,
        Job::Generate { .. } => Precision::F64,
    };
    match precision {
        Precision::F64 => execute_as::<f64>(job),
        Precision::F32 => execute_as::<f32>(job),
    }
}

fn execute_as<T: Real>(job: &Job) -> Result<Outcome> {
    match job {
        Job::Reduce {
            input,
            settings,
            output,
            dump_graph,
            dump_corpus,
            checkpoint,
        } => run_reduce::<T>(input, settings, output, dump_graph, dump_corpus, checkpoint),
        Job::Evaluate {
            input,
            dataset,
            method,
            settings,
            eval,
            report,
            records,
            embedding,
        } => run_evaluate::<T>(
            input, dataset, *method, settings, eval, report, records, embedding,
        ),
        Job::BenchScaling {
            n_list,
            d_list,
            data_seed,
            centers,
            separation,
            repeats,
            settings,
            output,
        } => run_bench::<T>(
            n_list,
            d_list,
            *data_seed,
            *centers,
            *separation,
            *repeats,
            settings,
            output,
        ),
        Job::Generate {
            kind,
            n,
            dim,
            centers,
            separation,
            seed,
            labels,
            output,
        } => run_generate(
            *kind,
            *n,
            *dim,
            *centers,
            *separation,
            *seed,
            *labels,
            output,
        ),
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn load_input<T: Real>(spec: &InputSpec) -> Result<(Matrix<T>, InputDigest)> {
    let bytes =
        std::fs::read(&spec.path).with_context(|| format!("reading {}", spec.path.display()))?;
    let m = read_csv(
        Cursor::new(&bytes),
        &spec.path,
        spec.header,
        spec.labels_column,
    )?;
    let digest = InputDigest {
        sha256: sha256_hex(&bytes),
        bytes: bytes.len() as u64,
        rows: m.rows(),
        cols: m.cols(),
    };
    Ok((m, digest))
}

fn stage_map(t: &vec2vec::StageTimings) -> BTreeMap<String, f64> {
    eval::stage_timings(t).into_iter().collect()
}

fn run_reduce<T: Real>(
    input: &InputSpec,
    settings: &Settings,
    output: &Path,
    dump_graph: &Option<PathBuf>,
    dump_corpus: &Option<PathBuf>,
    checkpoint: &Option<PathBuf>,
) -> Result<Outcome> {
    let start = Instant::now();
    let (m, digest) = load_input::<T>(input)?;
    let load = start.elapsed();
    let cfg = settings.config();
    let r = reduce_detailed(&m, &cfg)?;

    let start = Instant::now();
    let mut outputs = vec![output.to_path_buf()];
    write_atomic(output, |w| write_embedding(&r.embedding, w))?;
    if let Some(path) = dump_graph {
        write_atomic(path, |w| r.graph.write_edges(w))?;
        outputs.push(path.clone());
    }
    if let Some(path) = dump_corpus {
        let regenerated;
        let corpus = match &r.corpus {
            Some(c) => c,
            None => {
                regenerated = generate_corpus(&r.graph, &cfg.walk)?;
                &regenerated
            }
        };
        write_atomic(path, |w| corpus.write_walks(w))?;
        outputs.push(path.clone());
    }
    if let Some(path) = checkpoint {
        write_atomic(path, |w| write_checkpoint(&r.model.w, &r.model.theta, w))?;
        outputs.push(path.clone());
    }
    let mut timings = stage_map(&r.timings);
    timings.insert("load".into(), secs(load));
    timings.insert("write".into(), secs(start.elapsed()));
    println!(
        "wrote {} ({} x {}) in {:.3}s",
        output.display(),
        r.embedding.rows(),
        r.embedding.cols(),
        secs(r.timings.total())
    );
    Ok(Outcome {
        timings,
        outputs,
        digest: Some(digest),
    })
}

#[allow(clippy::too_many_arguments)]
fn run_evaluate<T: Real>(
    input: &InputSpec,
    dataset: &str,
    method: Method,
    settings: &Settings,
    eval_settings: &EvalSettings,
    report_path: &Path,
    records_path: &Path,
    embedding_path: &Option<PathBuf>,
) -> Result<Outcome> {
    let (m, digest) = load_input::<T>(input)?;
    if m.labels().is_none() {
        bail!("evaluation needs labels; pass --labels-column");
    }
    let (z, timings, name) = match method {
        Method::Vec2vec => {
            let r = reduce_detailed(&m, &settings.config())?;
            (r.embedding, eval::stage_timings(&r.timings), "vec2vec")
        }
        Method::Pca => {
            let start = Instant::now();
            let z = eval::pca_baseline(&m, settings.dims)?;
            let t = secs(start.elapsed());
            (z, vec![("pca".into(), t), ("total".into(), t)], "pca")
        }
        Method::Identity => (
            m.clone(),
            vec![("identity".into(), 0.0), ("total".into(), 0.0)],
            "identity",
        ),
    };
    let opts = EvalOptions {
        knn: KnnCvConfig {
            folds: eval_settings.folds,
            k_grid: eval_settings.k_grid.clone(),
            seed: settings.seed,
        },
        clusters: eval_settings.clusters,
        kmeans_restarts: eval_settings.restarts,
        seed: settings.seed,
        preservation_topk: eval_settings.preservation_topk,
    };
    let report = eval::evaluate_embedding(name, dataset, &m, &z, &opts, timings)?;
    let mut outputs = vec![report_path.to_path_buf(), records_path.to_path_buf()];
    write_text(report_path, &report.to_key_value_text())?;
    write_text(records_path, &report.to_records_text())?;
    if let Some(path) = embedding_path {
        write_atomic(path, |w| write_embedding(&z, w))?;
        outputs.push(path.clone());
    }
    print!("{}", report.to_key_value_text());
    let timings = report.timings.iter().cloned().collect();
    Ok(Outcome {
        timings,
        outputs,
        digest: Some(digest),
    })
}

pub const BENCH_COLUMNS: [&str; 10] = [
    "n",
    "D",
    "d",
    "graph_s",
    "walks_s",
    "train_s",
    "project_s",
    "total_s",
    "tokens",
    "pairs",
];

#[allow(clippy::too_many_arguments)]
fn run_bench<T: Real>(
    n_list: &[usize],
    d_list: &[usize],
    data_seed: u64,
    centers: usize,
    separation: f64,
    repeats: usize,
    settings: &Settings,
    output: &Option<PathBuf>,
) -> Result<Outcome> {
    if n_list.is_empty() || d_list.is_empty() {
        bail!("empty benchmark grid");
    }
    let cfg = settings.config();
    let mut table = BENCH_COLUMNS.join("\t");
    table.push('\n');
    let mut timings = BTreeMap::new();
    let mut stdout = std::io::stdout();
    stdout.write_all(table.as_bytes())?;
    for &n in n_list {
        for &dim in d_list {
            let spec = BlobSpec {
                n,
                dim,
                centers: centers.min(dim),
                separation,
                seed: data_seed,
            };
            let m = blobs::<T>(&spec)?;
            let mut best = [f64::INFINITY; 5];
            let mut counts = (0, 0);
            for _ in 0..repeats {
                let r = reduce_detailed(&m, &cfg)?;
                let t = &r.timings;
                let run = [
                    secs(t.graph),
                    secs(t.walks),
                    secs(t.train),
                    secs(t.project),
                    secs(t.total()),
                ];
                for (b, v) in best.iter_mut().zip(run) {
                    *b = b.min(v);
                }
                counts = (r.stats.tokens_kept, r.stats.pairs);
            }
            let mut row = String::new();
            let _ = write!(row, "{n}\t{dim}\t{}", settings.dims);
            for v in best {
                let _ = write!(row, "\t{v:.6}");
            }
            let _ = writeln!(row, "\t{}\t{}", counts.0, counts.1);
            stdout.write_all(row.as_bytes())?;
            stdout.flush()?;
            table.push_str(&row);
            for (stage, v) in ["graph", "walks", "train", "project", "total"]
                .iter()
                .zip(best)
            {
                timings.insert(format!("n{n}_D{dim}_{stage}"), v);
            }
        }
    }
    let mut outputs = Vec::new();
    if let Some(path) = output {
        write_text(path, &table)?;
        outputs.push(path.clone());
    }
    Ok(Outcome {
        timings,
        outputs,
        digest: None,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_generate(
    kind: Shape,
    n: usize,
    dim: usize,
    centers: usize,
    separation: f64,
    seed: u64,
    labels: bool,
    output: &Path,
) -> Result<Outcome> {
    let start = Instant::now();
    let m: Matrix<f64> = match kind {
        Shape::Blobs => blobs(&BlobSpec {
            n,
            dim,
            centers,
            separation,
            seed,
        })?,
        Shape::Line => line(n, dim, seed)?,
    };
    write_atomic(output, |w| {
        for i in 0..m.rows() {
            let mut fields: Vec<String> = Vec::with_capacity(dim + 1);
            if labels {
                fields.push(m.labels().map_or(0, |l| l[i]).to_string());
            }
            fields.extend(m.row(i).iter().map(|&v| format_real(v)));
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    })?;
    println!("wrote {} ({n} x {dim})", output.display());
    let timings = BTreeMap::from([("generate".to_owned(), secs(start.elapsed()))]);
    Ok(Outcome {
        timings,
        outputs: vec![output.to_path_buf()],
        digest: None,
    })
}
