use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    init_model, local_step, sgd_step_with, NoiseDistribution, SkipGramModel, StepScratch,
    Subsampler, TouchedRows, TrainConfig,
};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Real;
use crate::walk::{count_tokens, for_each_context_pair, WalkSource};

/// Pair stride at which the training loss is sampled.
pub const LOSS_SAMPLE_EVERY: u64 = 16;

/// Counters gathered while training.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainStats {
    /// Context pairs processed over all epochs.
    pub pairs: u64,
    /// Tokens surviving subsampling over all epochs.
    pub tokens_kept: u64,
    /// Mean unregularised pair loss per epoch, measured before the update on
    /// every `LOSS_SAMPLE_EVERY`-th pair.
    pub epoch_mean_loss: Vec<f64>,
}

/// Trains on every context pair of `source` (half-width `window`) for
/// `cfg.epochs` passes and returns the model; the embedding is `model.w`.
pub fn train<T: Real>(
    source: &dyn WalkSource,
    window: usize,
    cfg: &TrainConfig,
) -> Result<SkipGramModel<T>> {
    train_observed(source, window, cfg, &mut |_, _| {}).map(|(model, _)| model)
}

/// [`train`] with a callback after each epoch and the run statistics.
pub fn train_observed<T: Real>(
    source: &dyn WalkSource,
    window: usize,
    cfg: &TrainConfig,
    on_epoch: &mut dyn FnMut(usize, &SkipGramModel<T>),
) -> Result<(SkipGramModel<T>, TrainStats)> {
    cfg.validate()?;
    if window == 0 {
        return Err(Error::InvalidConfig("window must be at least 1".into()));
    }
    if source.token_count() == 0 {
        return Err(Error::EmptyCorpus);
    }
    let counts = count_tokens(source);
    let ctx = Context {
        source,
        window,
        cfg,
        noise: NoiseDistribution::from_counts(&counts)?,
        subsampler: Subsampler::new(&counts, cfg.subsample_t),
        total_tokens: (cfg.epochs * source.token_count()).max(1) as f64,
    };
    let model = init_model(source.node_count(), cfg.dims, cfg.seed)?;
    let threads = if cfg.threads == 0 {
        rayon::current_num_threads()
    } else {
        cfg.threads
    };
    if cfg.deterministic || threads <= 1 {
        ctx.run_sequential(model, on_epoch)
    } else {
        ctx.run_parallel(model, threads, on_epoch)
    }
}

struct Context<'a> {
    source: &'a dyn WalkSource,
    window: usize,
    cfg: &'a TrainConfig,
    noise: NoiseDistribution,
    subsampler: Subsampler,
    total_tokens: f64,
}

impl Context<'_> {
    fn lr_at(&self, processed_tokens: u64) -> f64 {
        let progress = (processed_tokens as f64 / self.total_tokens).min(1.0);
        let start = self.cfg.initial_lr;
        start + (self.cfg.min_lr() - start) * progress
    }

    fn rng(&self, epoch: usize, worker: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        // walk streams count up from zero; training streams count down
        rng.set_stream(u64::MAX - (epoch as u64) * 1024 - worker as u64);
        rng
    }

    fn run_sequential<T: Real>(
        &self,
        mut model: SkipGramModel<T>,
        on_epoch: &mut dyn FnMut(usize, &SkipGramModel<T>),
    ) -> Result<(SkipGramModel<T>, TrainStats)> {
        let mut stats = TrainStats::default();
        let lambda = T::lit(self.cfg.lambda);
        let mut scratch = StepScratch::default();
        let mut kept = Vec::new();
        let mut negatives = Vec::with_capacity(self.cfg.negatives);
        let mut processed = 0u64;
        let mut failure = None;

        for epoch in 0..self.cfg.epochs {
            let mut rng = self.rng(epoch, 0);
            let mut loss_sum = 0.0;
            let mut loss_pairs = 0u64;
            let mut epoch_pairs = 0u64;
            self.source.visit(0..self.source.walk_count(), &mut |walk| {
                if failure.is_some() {
                    return;
                }
                let lr_f = self.lr_at(processed);
                let lr = T::lit(lr_f);
                self.subsampler.filter_into(walk, &mut rng, &mut kept);
                stats.tokens_kept += kept.len() as u64;
                for_each_context_pair(&kept, self.window, |center, context| {
                    if failure.is_some() {
                        return;
                    }
                    self.noise.sample_negatives(
                        context,
                        self.cfg.negatives,
                        &mut rng,
                        &mut negatives,
                    );
                    let want_loss = epoch_pairs.is_multiple_of(LOSS_SAMPLE_EVERY);
                    match sgd_step_with(
                        &mut model,
                        center,
                        context,
                        &negatives,
                        lr,
                        lambda,
                        &mut scratch,
                        want_loss,
                    ) {
                        Some(loss) => {
                            if want_loss {
                                loss_sum += loss.as_f64();
                                loss_pairs += 1;
                            }
                            epoch_pairs += 1;
                        }
                        None => {
                            failure = Some(Error::NonFiniteTraining {
                                epoch,
                                center,
                                context,
                                lr: lr_f,
                            })
                        }
                    }
                });
                processed += walk.len() as u64;
            });
            if let Some(err) = failure.take() {
                return Err(err);
            }
            stats.pairs += epoch_pairs;
            stats.epoch_mean_loss.push(if loss_pairs > 0 {
                loss_sum / loss_pairs as f64
            } else {
                0.0
            });
            on_epoch(epoch, &model);
        }
        if !model.is_finite() {
            return Err(Error::NonFiniteTraining {
                epoch: self.cfg.epochs,
                center: 0,
                context: 0,
                lr: self.cfg.min_lr(),
            });
        }
        Ok((model, stats))
    }

    fn run_parallel<T: Real>(
        &self,
        model: SkipGramModel<T>,
        workers: usize,
        on_epoch: &mut dyn FnMut(usize, &SkipGramModel<T>),
    ) -> Result<(SkipGramModel<T>, TrainStats)> {
        let shared = SharedModel::new(&model);
        let d = model.dims();
        let walks = self.source.walk_count();
        let per_worker = walks.div_ceil(workers);
        let processed = AtomicU64::new(0);
        let abort = AtomicBool::new(false);
        let failure = Mutex::new(None);
        let mut stats = TrainStats::default();

        for epoch in 0..self.cfg.epochs {
            let totals: Vec<(u64, u64, f64, u64)> = (0..workers)
                .into_par_iter()
                .map(|worker| {
                    let range =
                        (worker * per_worker).min(walks)..((worker + 1) * per_worker).min(walks);
                    let mut rng = self.rng(epoch, worker);
                    let lambda = T::lit(self.cfg.lambda);
                    let mut touched = TouchedRows::default();
                    let mut kept = Vec::new();
                    let mut negatives = Vec::new();
                    let (mut w, mut outputs, mut grad_w) = (Vec::new(), Vec::new(), Vec::new());
                    let (mut pairs, mut tokens, mut loss_sum, mut loss_pairs) =
                        (0u64, 0u64, 0.0f64, 0u64);
                    self.source.visit(range, &mut |walk| {
                        if abort.load(Ordering::Relaxed) {
                            return;
                        }
                        let lr_f = self.lr_at(processed.load(Ordering::Relaxed));
                        let lr = T::lit(lr_f);
                        self.subsampler.filter_into(walk, &mut rng, &mut kept);
                        tokens += kept.len() as u64;
                        for_each_context_pair(&kept, self.window, |center, context| {
                            if abort.load(Ordering::Relaxed) {
                                return;
                            }
                            self.noise.sample_negatives(
                                context,
                                self.cfg.negatives,
                                &mut rng,
                                &mut negatives,
                            );
                            touched.collect(context, &negatives);
                            shared.w.gather(center, d, &mut w);
                            outputs.clear();
                            for &row in &touched.rows {
                                shared.theta.gather_append(row, d, &mut outputs);
                            }
                            let want_loss = pairs.is_multiple_of(LOSS_SAMPLE_EVERY);
                            match local_step(
                                &mut w,
                                &mut outputs,
                                &touched,
                                lr,
                                lambda,
                                &mut grad_w,
                                want_loss,
                            ) {
                                Some(loss) => {
                                    shared.w.scatter(center, &w);
                                    for (slot, &row) in touched.rows.iter().enumerate() {
                                        shared
                                            .theta
                                            .scatter(row, &outputs[slot * d..(slot + 1) * d]);
                                    }
                                    pairs += 1;
                                    if want_loss {
                                        loss_sum += loss.as_f64();
                                        loss_pairs += 1;
                                    }
                                }
                                None => {
                                    abort.store(true, Ordering::Relaxed);
                                    let mut slot = failure.lock().expect("failure lock");
                                    slot.get_or_insert(Error::NonFiniteTraining {
                                        epoch,
                                        center,
                                        context,
                                        lr: lr_f,
                                    });
                                }
                            }
                        });
                        processed.fetch_add(walk.len() as u64, Ordering::Relaxed);
                    });
                    (pairs, tokens, loss_sum, loss_pairs)
                })
                .collect();
            if let Some(err) = failure.lock().expect("failure lock").take() {
                return Err(err);
            }
            let (pairs, tokens, loss, loss_pairs) = totals.iter().fold((0, 0, 0.0, 0), |acc, t| {
                (acc.0 + t.0, acc.1 + t.1, acc.2 + t.2, acc.3 + t.3)
            });
            stats.pairs += pairs;
            stats.tokens_kept += tokens;
            stats.epoch_mean_loss.push(if loss_pairs > 0 {
                loss / loss_pairs as f64
            } else {
                0.0
            });
            on_epoch(epoch, &shared.snapshot(&model)?);
        }
        let out = shared.snapshot(&model)?;
        if !out.is_finite() {
            return Err(Error::NonFiniteTraining {
                epoch: self.cfg.epochs,
                center: 0,
                context: 0,
                lr: self.cfg.min_lr(),
            });
        }
        Ok((out, stats))
    }
}

/// Row storage shared by lock-free workers. Loads and stores are relaxed
/// atomics, so concurrent updates to one row may interleave and lose writes.
struct SharedRows {
    cells: Vec<AtomicU64>,
}

impl SharedRows {
    fn new<T: Real>(m: &Matrix<T>) -> Self {
        Self {
            cells: m
                .as_slice()
                .iter()
                .map(|v| AtomicU64::new(v.to_raw_bits()))
                .collect(),
        }
    }

    fn gather<T: Real>(&self, row: usize, d: usize, out: &mut Vec<T>) {
        out.clear();
        self.gather_append(row, d, out);
    }

    fn gather_append<T: Real>(&self, row: usize, d: usize, out: &mut Vec<T>) {
        out.extend(
            self.cells[row * d..(row + 1) * d]
                .iter()
                .map(|c| T::from_raw_bits(c.load(Ordering::Relaxed))),
        );
    }

    fn scatter<T: Real>(&self, row: usize, values: &[T]) {
        let d = values.len();
        for (cell, v) in self.cells[row * d..(row + 1) * d].iter().zip(values) {
            cell.store(v.to_raw_bits(), Ordering::Relaxed);
        }
    }

    fn to_matrix<T: Real>(&self, rows: usize, cols: usize) -> Result<Matrix<T>> {
        let data = self
            .cells
            .iter()
            .map(|c| T::from_raw_bits(c.load(Ordering::Relaxed)))
            .collect();
        Matrix::from_vec(rows, cols, data)
    }
}

struct SharedModel {
    w: SharedRows,
    theta: SharedRows,
}

impl SharedModel {
    fn new<T: Real>(model: &SkipGramModel<T>) -> Self {
        Self {
            w: SharedRows::new(&model.w),
            theta: SharedRows::new(&model.theta),
        }
    }

    fn snapshot<T: Real>(&self, shape: &SkipGramModel<T>) -> Result<SkipGramModel<T>> {
        let (n, d) = shape.w.shape();
        Ok(SkipGramModel {
            w: self.w.to_matrix(n, d)?,
            theta: self.theta.to_matrix(n, d)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::WalkCorpus;

    fn ring_corpus(n: usize, walks: usize, len: usize) -> WalkCorpus {
        let walks: Vec<Vec<usize>> = (0..walks)
            .map(|w| (0..len).map(|p| (w + p) % n).collect())
            .collect();
        WalkCorpus::from_walks(n, &walks).unwrap()
    }

    #[test]
    fn shape_and_determinism() {
        let corpus = ring_corpus(12, 24, 10);
        let cfg = TrainConfig {
            dims: 3,
            ..Default::default()
        };
        let a: SkipGramModel<f64> = train(&corpus, 2, &cfg).unwrap();
        let b: SkipGramModel<f64> = train(&corpus, 2, &cfg).unwrap();
        assert_eq!(a.w.shape(), (12, 3));
        assert_eq!(a, b);
        let c: SkipGramModel<f64> = train(&corpus, 2, &TrainConfig { seed: 2, ..cfg }).unwrap();
        assert_ne!(a.w, c.w);
    }

    #[test]
    fn parallel_mode_runs() {
        let corpus = ring_corpus(20, 40, 12);
        let cfg = TrainConfig {
            dims: 4,
            deterministic: false,
            threads: 3,
            ..Default::default()
        };
        let (model, stats) =
            train_observed::<f64>(&corpus, 2, &cfg, &mut |_, m| assert!(m.is_finite())).unwrap();
        assert_eq!(model.w.shape(), (20, 4));
        assert!(stats.pairs > 0);
        assert_eq!(stats.epoch_mean_loss.len(), cfg.epochs);
    }

    #[test]
    fn learning_rate_decays_linearly() {
        let corpus = ring_corpus(4, 4, 5);
        let cfg = TrainConfig::default();
        let ctx = Context {
            source: &corpus,
            window: 1,
            cfg: &cfg,
            noise: NoiseDistribution::from_counts(&[1, 1, 1, 1]).unwrap(),
            subsampler: Subsampler::new(&[1, 1, 1, 1], 0.0),
            total_tokens: 1000.0,
        };
        assert_eq!(ctx.lr_at(0), 0.025);
        assert!((ctx.lr_at(500) - (0.025 + 0.00025) / 2.0).abs() < 1e-15);
        assert!((ctx.lr_at(1000) - 0.00025).abs() < 1e-15);
        assert!((ctx.lr_at(5000) - 0.00025).abs() < 1e-15);
    }

    #[test]
    fn divergence_is_reported() {
        let corpus = ring_corpus(6, 12, 8);
        let cfg = TrainConfig {
            dims: 2,
            initial_lr: 1e200,
            ..Default::default()
        };
        let err = train::<f64>(&corpus, 2, &cfg).unwrap_err();
        assert!(matches!(err, Error::NonFiniteTraining { .. }), "{err}");
    }

    #[test]
    fn rejects_bad_inputs() {
        let corpus = ring_corpus(6, 12, 8);
        assert!(train::<f64>(&corpus, 0, &TrainConfig::default()).is_err());
        let empty = WalkCorpus::from_walks(3, &[]).unwrap();
        assert!(matches!(
            train::<f64>(&empty, 2, &TrainConfig::default()),
            Err(Error::EmptyCorpus)
        ));
    }
}
