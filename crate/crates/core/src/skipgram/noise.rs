//! Noise distribution for negative sampling: token counts raised to 3/4.

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use crate::error::{Error, Result};
use crate::walk::{count_tokens, WalkSource};

const NOISE_POWER: f64 = 0.75;

/// `P(x) ∝ count(x)^(3/4)`, sampled in O(1) through an alias table.
#[derive(Debug, Clone)]
pub struct NoiseDistribution {
    probabilities: Vec<f64>,
    support: usize,
    sampler: WeightedAliasIndex<f64>,
}

impl NoiseDistribution {
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        if counts.iter().all(|&c| c == 0) {
            return Err(Error::EmptyCorpus);
        }
        let weights: Vec<f64> = counts
            .iter()
            .map(|&c| (c as f64).powf(NOISE_POWER))
            .collect();
        let total: f64 = weights.iter().sum();
        let probabilities = weights.iter().map(|w| w / total).collect();
        let support = counts.iter().filter(|&&c| c > 0).count();
        let sampler = WeightedAliasIndex::new(weights)
            .map_err(|e| Error::InvalidConfig(format!("noise distribution: {e}")))?;
        Ok(Self {
            probabilities,
            support,
            sampler,
        })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, node: usize) -> f64 {
        self.probabilities[node]
    }

    /// Number of nodes with nonzero probability.
    pub fn support(&self) -> usize {
        self.support
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.sampler.sample(rng)
    }

    /// Fills `out` with `k` draws, redrawing any that equal `exclude`.
    /// When `exclude` is the only node in the support it is kept.
    pub fn sample_negatives<R: Rng + ?Sized>(
        &self,
        exclude: usize,
        k: usize,
        rng: &mut R,
        out: &mut Vec<usize>,
    ) {
        out.clear();
        let can_avoid = self.support > 1 || self.probabilities[exclude] == 0.0;
        for _ in 0..k {
            let mut draw = self.sample(rng);
            while can_avoid && draw == exclude {
                draw = self.sample(rng);
            }
            out.push(draw);
        }
    }
}

/// Noise distribution over every token of the walks.
pub fn build_noise_distribution(source: &dyn WalkSource) -> Result<NoiseDistribution> {
    if source.token_count() == 0 {
        return Err(Error::EmptyCorpus);
    }
    NoiseDistribution::from_counts(&count_tokens(source))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::{walk_rng, WalkCorpus};

    #[test]
    fn three_quarter_power() {
        // counts {a: 1, b: 8}; 8^0.75 = 4.756828...
        let noise = NoiseDistribution::from_counts(&[1, 8]).unwrap();
        let expected_a = 1.0 / (1.0 + 8f64.powf(0.75));
        assert!((noise.probability(0) - expected_a).abs() < 1e-15);
        assert!((noise.probability(0) - 0.1737068).abs() < 1e-7);
        assert!((noise.probability(1) - 0.8262932).abs() < 1e-7);
    }

    #[test]
    fn uniform_and_single_node() {
        let noise = NoiseDistribution::from_counts(&[4, 4, 4, 4]).unwrap();
        assert!(noise
            .probabilities()
            .iter()
            .all(|&p| (p - 0.25).abs() < 1e-15));
        let noise = NoiseDistribution::from_counts(&[0, 7, 0]).unwrap();
        assert_eq!(noise.probabilities(), &[0.0, 1.0, 0.0]);
        let mut rng = walk_rng(1, 0);
        let mut out = Vec::new();
        noise.sample_negatives(1, 3, &mut rng, &mut out);
        assert_eq!(out, vec![1, 1, 1]);
    }

    #[test]
    fn from_corpus_and_errors() {
        let corpus = WalkCorpus::from_walks(3, &[vec![0, 1, 1], vec![1, 1, 1]]).unwrap();
        let noise = build_noise_distribution(&corpus).unwrap();
        let p0 = 1.0 / (1.0 + 5f64.powf(0.75));
        assert!((noise.probability(0) - p0).abs() < 1e-15);
        assert_eq!(noise.probability(2), 0.0);
        assert_eq!(noise.support(), 2);

        let empty = WalkCorpus::from_walks(3, &[]).unwrap();
        assert!(matches!(
            build_noise_distribution(&empty),
            Err(Error::EmptyCorpus)
        ));
        assert!(NoiseDistribution::from_counts(&[0, 0]).is_err());
    }

    #[test]
    fn negatives_skip_excluded_node() {
        let noise = NoiseDistribution::from_counts(&[1, 100, 1]).unwrap();
        let mut rng = walk_rng(2, 0);
        let mut out = Vec::new();
        for _ in 0..200 {
            noise.sample_negatives(1, 5, &mut rng, &mut out);
            assert_eq!(out.len(), 5);
            assert!(!out.contains(&1));
        }
    }
}
