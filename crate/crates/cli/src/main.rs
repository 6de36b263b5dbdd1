mod args;
mod commands;
mod manifest;
mod output;
mod settings;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, InputArgs};
use manifest::{EvalSettings, InputSpec, Job, RunManifest};
use settings::Settings;

enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// Manifests record absolute paths so they can be replayed from anywhere.
fn abs(p: PathBuf) -> PathBuf {
    std::path::absolute(&p).unwrap_or(p)
}

fn abs_opt(p: Option<PathBuf>) -> Option<PathBuf> {
    p.map(abs)
}

fn input_spec(a: &InputArgs) -> InputSpec {
    InputSpec {
        path: abs(a.input.clone()),
        header: a.header,
        labels_column: a.labels_column,
    }
}

fn checked(settings: Settings) -> Result<Settings, Failure> {
    settings
        .config()
        .validate()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(settings)
}

fn job_from_cli(command: Command) -> Result<Job, Failure> {
    Ok(match command {
        Command::Reduce(a) => Job::Reduce {
            input: input_spec(&a.input),
            settings: checked(a.model.settings())?,
            output: abs(a.output),
            dump_graph: abs_opt(a.dump_graph),
            dump_corpus: abs_opt(a.dump_corpus),
            checkpoint: abs_opt(a.checkpoint),
        },
        Command::Evaluate(a) => {
            if a.input.labels_column.is_none() {
                return Err(Failure::Usage("evaluate needs --labels-column".into()));
            }
            let dataset = a.dataset.clone().unwrap_or_else(|| {
                a.input
                    .input
                    .file_stem()
                    .map_or("dataset".into(), |s| s.to_string_lossy().into_owned())
            });
            let records = a
                .records
                .clone()
                .unwrap_or_else(|| output::with_suffix(&a.output, ".tsv"));
            Job::Evaluate {
                input: input_spec(&a.input),
                dataset,
                method: a.method,
                settings: checked(a.model.settings())?,
                eval: EvalSettings {
                    folds: a.folds,
                    k_grid: a.k_grid,
                    clusters: a.clusters,
                    restarts: a.restarts,
                    preservation_topk: a.preservation_topk,
                },
                report: abs(a.output),
                records: abs(records),
                embedding: abs_opt(a.embedding_output),
            }
        }
        Command::BenchScaling(a) => {
            if a.n_list.is_empty() || a.d_list.is_empty() {
                return Err(Failure::Usage(
                    "--n-list and --d-list must be nonempty".into(),
                ));
            }
            Job::BenchScaling {
                n_list: a.n_list,
                d_list: a.d_list,
                data_seed: a.data_seed,
                centers: a.centers,
                separation: a.separation,
                repeats: a.repeats,
                settings: checked(a.model.settings())?,
                output: abs_opt(a.output),
            }
        }
        Command::Generate(a) => Job::Generate {
            kind: a.kind,
            n: a.n,
            dim: a.dim,
            centers: a.centers,
            separation: a.separation,
            seed: a.seed,
            labels: !a.no_labels,
            output: abs(a.output),
        },
        Command::Rerun(_) => unreachable!("handled by run"),
    })
}

/// Sizes the global worker pool: one thread in deterministic mode, the
/// requested count otherwise.
fn configure_pool(job: &Job) {
    let settings = match job {
        Job::Reduce { settings, .. }
        | Job::Evaluate { settings, .. }
        | Job::BenchScaling { settings, .. } => settings,
        Job::Generate { .. } => return,
    };
    let threads = if settings.deterministic {
        1
    } else {
        settings.threads
    };
    if threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            log::warn!("could not size the thread pool: {e}");
        }
    }
}

fn run_job(job: Job) -> Result<(), Failure> {
    configure_pool(&job);
    let outcome = commands::execute(&job)?;
    if let Some(primary) = job.primary_output() {
        let path = RunManifest::path_for(primary);
        let mut outputs = outcome.outputs;
        outputs.push(path.clone());
        RunManifest::new(job.clone(), outcome.digest, outcome.timings, outputs).write(&path)?;
    }
    Ok(())
}

fn rerun(manifest_path: &Path, output_dir: Option<&Path>) -> Result<(), Failure> {
    let manifest = RunManifest::read(manifest_path)?;
    let mut job = manifest.job;
    if let (Some(input), Some(recorded)) = (job.input(), &manifest.input_digest) {
        let bytes = std::fs::read(&input.path).map_err(|e| {
            Failure::Runtime(anyhow::anyhow!("reading {}: {e}", input.path.display()))
        })?;
        let digest = output::sha256_hex(&bytes);
        if digest != recorded.sha256 {
            return Err(Failure::Runtime(anyhow::anyhow!(
                "input {} changed since the manifest was written (sha256 {digest}, recorded {})",
                input.path.display(),
                recorded.sha256
            )));
        }
    }
    if let Some(dir) = output_dir {
        job.redirect_outputs(dir);
    }
    run_job(job)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Rerun(a) => rerun(&a.manifest, a.output_dir.as_deref()),
        other => run_job(job_from_cli(other)?),
    }
}
