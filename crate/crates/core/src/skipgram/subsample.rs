//! Frequency subsampling: an occurrence of node `x` is dropped with
//! probability `max(0, 1 - sqrt(t / freq(x)))`, where `freq` is the
//! relative token frequency over the corpus.

use rand::Rng;

use crate::walk::ContextPair;

#[derive(Debug, Clone)]
pub struct Subsampler {
    keep: Option<Vec<f64>>,
}

impl Subsampler {
    /// `threshold == 0` disables subsampling.
    pub fn new(counts: &[u64], threshold: f64) -> Self {
        let total: u64 = counts.iter().sum();
        if threshold <= 0.0 || total == 0 {
            return Self { keep: None };
        }
        let keep = counts
            .iter()
            .map(|&c| {
                if c == 0 {
                    1.0
                } else {
                    let freq = c as f64 / total as f64;
                    (threshold / freq).sqrt().min(1.0)
                }
            })
            .collect();
        Self { keep: Some(keep) }
    }

    pub fn is_enabled(&self) -> bool {
        self.keep.is_some()
    }

    pub fn keep_probability(&self, node: usize) -> f64 {
        self.keep.as_ref().map_or(1.0, |k| k[node])
    }

    /// Copies the surviving tokens of `walk` into `out`. Consumes one uniform
    /// draw per token whose keep probability is below one.
    pub fn filter_into<R: Rng + ?Sized>(&self, walk: &[u32], rng: &mut R, out: &mut Vec<u32>) {
        out.clear();
        match &self.keep {
            None => out.extend_from_slice(walk),
            Some(keep) => out.extend(walk.iter().copied().filter(|&v| {
                let p = keep[v as usize];
                p >= 1.0 || rng.random::<f64>() < p
            })),
        }
    }
}

/// Context pairs of the subsampled corpus, extracted after filtering each walk.
pub fn subsample_corpus<R: Rng + ?Sized>(
    corpus: &crate::walk::WalkCorpus,
    threshold: f64,
    window: usize,
    rng: &mut R,
) -> Vec<ContextPair> {
    let counts = crate::walk::count_tokens(corpus);
    let sampler = Subsampler::new(&counts, threshold);
    let mut kept = Vec::new();
    let mut pairs = Vec::new();
    for walk in corpus.walks() {
        sampler.filter_into(walk, rng, &mut kept);
        crate::walk::for_each_context_pair(&kept, window, |center, context| {
            pairs.push(ContextPair { center, context })
        });
    }
    pairs
}
