//! One-hidden-layer skip-gram network trained with negative sampling.
//!
//! Node `i` enters as a one-hot vector, so its hidden activation is row `i`
//! of the input matrix `W`; that row is the embedding. Output row `θ_j`
//! scores context node `j`. For a pair `(i, j)` with negatives `N` the
//! per-pair objective is
//!
//! ```text
//! -log σ(θ_j·w_i) - Σ_{n∈N} log σ(-θ_n·w_i) + λ/2 (‖w_i‖² + ‖θ_j‖² + Σ_{n∈N} ‖θ_n‖²)
//! ```
//!
//! minimised by plain SGD over the stream of context pairs.

mod noise;
mod subsample;
mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{dot, log_sigmoid, sigmoid, sigmoid_with_logs, squared_norm, Real};

pub use noise::{build_noise_distribution, NoiseDistribution};
pub use subsample::{subsample_corpus, Subsampler};
pub use train::{train, train_observed, TrainStats};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Embedding width `d`.
    pub dims: usize,
    /// Negative samples per positive pair.
    pub negatives: usize,
    /// L2 coefficient.
    pub lambda: f64,
    /// Learning rate at the start; decays linearly to a hundredth of it.
    pub initial_lr: f64,
    pub epochs: usize,
    /// Frequency subsampling threshold; 0 disables.
    pub subsample_t: f64,
    pub seed: u64,
    /// Sequential, bit-reproducible training. When false, pairs are sharded
    /// across `threads` workers that update shared weights without locks.
    pub deterministic: bool,
    /// Worker count for the parallel mode; 0 uses the rayon pool size.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dims: 16,
            negatives: 5,
            lambda: 0.0,
            initial_lr: 0.025,
            epochs: 5,
            subsample_t: 0.001,
            seed: 1,
            deterministic: true,
            threads: 0,
        }
    }
}

impl TrainConfig {
    pub fn min_lr(&self) -> f64 {
        self.initial_lr / 100.0
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.dims == 0 {
            return fail("dims must be at least 1".into());
        }
        if self.negatives == 0 {
            return fail("negatives must be at least 1".into());
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return fail(format!(
                "lambda must be a finite value >= 0, got {}",
                self.lambda
            ));
        }
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return fail(format!(
                "learning rate must be positive, got {}",
                self.initial_lr
            ));
        }
        if !(self.subsample_t >= 0.0 && self.subsample_t.is_finite()) {
            return fail(format!(
                "subsample threshold must be >= 0, got {}",
                self.subsample_t
            ));
        }
        Ok(())
    }
}

/// Input weights `W` (the embedding) and output weights `θ`, both `n × d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkipGramModel<T> {
    pub w: Matrix<T>,
    pub theta: Matrix<T>,
}

impl<T: Real> SkipGramModel<T> {
    pub fn node_count(&self) -> usize {
        self.w.rows()
    }

    pub fn dims(&self) -> usize {
        self.w.cols()
    }

    pub fn embedding(&self) -> &Matrix<T> {
        &self.w
    }

    pub fn into_embedding(self) -> Matrix<T> {
        self.w
    }

    pub fn is_finite(&self) -> bool {
        self.w.find_non_finite().is_none() && self.theta.find_non_finite().is_none()
    }
}

/// `W ~ U(-0.5/d, 0.5/d)` entrywise, `θ = 0`.
pub fn init_model<T: Real>(n: usize, d: usize, seed: u64) -> Result<SkipGramModel<T>> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidConfig(format!(
            "model needs n >= 1 and d >= 1, got n = {n}, d = {d}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / d as f64;
    let data = (0..n * d)
        .map(|_| T::lit((rng.random::<f64>() - 0.5) * scale))
        .collect();
    Ok(SkipGramModel {
        w: Matrix::from_vec(n, d, data)?,
        theta: Matrix::zeros(n, d),
    })
}

/// Per-pair contribution to the regularised negative-sampling objective,
/// with the L2 term restricted to the rows the pair touches.
pub fn pair_loss<T: Real>(
    model: &SkipGramModel<T>,
    center: usize,
    context: usize,
    negatives: &[usize],
    lambda: f64,
) -> T {
    let w = model.w.row(center);
    let theta = &model.theta;
    let mut loss = -log_sigmoid(dot(theta.row(context), w));
    let mut reg = squared_norm(w) + squared_norm(theta.row(context));
    for &neg in negatives {
        loss -= log_sigmoid(-dot(theta.row(neg), w));
        reg += squared_norm(theta.row(neg));
    }
    loss + T::lit(lambda * 0.5) * reg
}

/// Output rows touched by one pair, deduplicated.
#[derive(Debug, Default, Clone)]
pub(crate) struct TouchedRows {
    pub rows: Vec<usize>,
    positive: Vec<u32>,
    negative: Vec<u32>,
}

impl TouchedRows {
    pub fn collect(&mut self, context: usize, negatives: &[usize]) {
        self.rows.clear();
        self.positive.clear();
        self.negative.clear();
        self.add(context, true);
        for &n in negatives {
            self.add(n, false);
        }
    }

    fn add(&mut self, row: usize, positive: bool) {
        let slot = match self.rows.iter().position(|&r| r == row) {
            Some(s) => s,
            None => {
                self.rows.push(row);
                self.positive.push(0);
                self.negative.push(0);
                self.rows.len() - 1
            }
        };
        if positive {
            self.positive[slot] += 1;
        } else {
            self.negative[slot] += 1;
        }
    }
}

/// Applies one SGD step to a gathered copy of the touched rows.
///
/// `outputs` holds the output rows listed in `touched`, back to back. All
/// gradients are taken at the incoming parameter values. Returns the
/// unregularised pair loss (zero unless `want_loss`), or `None` if a score
/// was not finite.
pub(crate) fn local_step<T: Real>(
    w: &mut [T],
    outputs: &mut [T],
    touched: &TouchedRows,
    lr: T,
    lambda: T,
    grad_w: &mut Vec<T>,
    want_loss: bool,
) -> Option<T> {
    let d = w.len();
    grad_w.clear();
    grad_w.extend(w.iter().map(|&v| lambda * v));
    let mut coeffs = [T::zero(); 64];
    let mut heap_coeffs = Vec::new();
    let coeffs: &mut [T] = if touched.rows.len() <= coeffs.len() {
        &mut coeffs[..touched.rows.len()]
    } else {
        heap_coeffs.resize(touched.rows.len(), T::zero());
        &mut heap_coeffs
    };

    let mut loss = T::zero();
    for (slot, coeff) in coeffs.iter_mut().enumerate() {
        let out = &outputs[slot * d..(slot + 1) * d];
        let score = dot(out, w);
        if !score.is_finite() {
            return None;
        }
        let pos = T::from_usize_lossy(touched.positive[slot] as usize);
        let neg = T::from_usize_lossy(touched.negative[slot] as usize);
        // d/dscore of -log σ(score) is σ - 1, of -log σ(-score) is σ
        let s = if want_loss {
            let (s, log_pos, log_neg) = sigmoid_with_logs(score);
            loss -= pos * log_pos + neg * log_neg;
            s
        } else {
            sigmoid(score)
        };
        *coeff = (pos + neg) * s - pos;
        crate::scalar::axpy(*coeff, out, grad_w);
    }
    for (slot, &coeff) in coeffs.iter().enumerate() {
        let mult = T::from_usize_lossy((touched.positive[slot] + touched.negative[slot]) as usize);
        let out = &mut outputs[slot * d..(slot + 1) * d];
        let decay = T::one() - lr * lambda * mult;
        for (o, &wi) in out.iter_mut().zip(w.iter()) {
            *o = decay * *o - lr * coeff * wi;
        }
    }
    for (wi, &g) in w.iter_mut().zip(grad_w.iter()) {
        *wi -= lr * g;
    }
    Some(loss)
}

/// Scratch buffers reused across steps.
#[derive(Debug, Default, Clone)]
pub struct StepScratch<T> {
    touched: TouchedRows,
    w: Vec<T>,
    outputs: Vec<T>,
    grad_w: Vec<T>,
}

/// One SGD step on `(center, context)` with the given negatives. Only
/// `w_center`, `θ_context` and the negative output rows change. Returns the
/// unregularised pair loss before the update.
pub fn sgd_step<T: Real>(
    model: &mut SkipGramModel<T>,
    center: usize,
    context: usize,
    negatives: &[usize],
    lr: f64,
    lambda: f64,
) -> Result<T> {
    let mut scratch = StepScratch::default();
    sgd_step_with(
        model,
        center,
        context,
        negatives,
        T::lit(lr),
        T::lit(lambda),
        &mut scratch,
        true,
    )
    .ok_or(Error::NonFiniteTraining {
        epoch: 0,
        center,
        context,
        lr,
    })
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn sgd_step_with<T: Real>(
    model: &mut SkipGramModel<T>,
    center: usize,
    context: usize,
    negatives: &[usize],
    lr: T,
    lambda: T,
    scratch: &mut StepScratch<T>,
    want_loss: bool,
) -> Option<T> {
    let StepScratch {
        touched,
        w,
        outputs,
        grad_w,
    } = scratch;
    touched.collect(context, negatives);
    w.clear();
    w.extend_from_slice(model.w.row(center));
    outputs.clear();
    for &row in &touched.rows {
        outputs.extend_from_slice(model.theta.row(row));
    }
    let loss = local_step(w, outputs, touched, lr, lambda, grad_w, want_loss)?;
    let d = w.len();
    model.w.row_mut(center).copy_from_slice(w);
    for (slot, &row) in touched.rows.iter().enumerate() {
        model
            .theta
            .row_mut(row)
            .copy_from_slice(&outputs[slot * d..(slot + 1) * d]);
    }
    Some(loss)
}
