//! Similarity-weighted random walks and their sliding-window contexts.
//!
//! From node `b`, a walk steps to neighbor `a` with probability
//! `w(a, b) / Σ_i w(b, i)`. Every node starts `walks_per_node` walks of a
//! fixed length; the nodes within `window` positions of a walk position form
//! its context.
//!
//! Each walk draws from its own ChaCha8 stream, keyed by the seed and the
//! walk's slot in the schedule (repetition-major, then node index). The
//! corpus is therefore identical no matter how many workers produce it, and
//! any walk can be regenerated on demand.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::SimilarityGraph;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkConfig {
    pub walks_per_node: usize,
    pub walk_length: usize,
    /// Context half-width.
    pub window: usize,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            walks_per_node: 10,
            walk_length: 40,
            window: 5,
            seed: 1,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.walks_per_node == 0 || self.walk_length == 0 || self.window == 0 {
            return Err(Error::InvalidConfig(format!(
                "walks per node ({}), walk length ({}) and window ({}) must all be at least 1",
                self.walks_per_node, self.walk_length, self.window
            )));
        }
        Ok(())
    }
}

/// A (center, context) training pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ContextPair {
    pub center: usize,
    pub context: usize,
}

/// Probability of stepping from `node` to each of its neighbors, in
/// neighbor-index order. Non-neighbors have probability zero.
pub fn transition_distribution<T: Real>(
    g: &SimilarityGraph<T>,
    node: usize,
) -> Result<Vec<(usize, T)>> {
    let neighbors = g.neighbors(node);
    if neighbors.is_empty() {
        return Err(Error::IsolatedNodes { nodes: vec![node] });
    }
    let total: T = neighbors.iter().map(|&(_, w)| w).sum();
    Ok(neighbors.iter().map(|&(j, w)| (j, w / total)).collect())
}

/// Precomputed cumulative weights for drawing walk steps.
pub struct Walker<'g, T> {
    graph: &'g SimilarityGraph<T>,
    cumulative: Vec<Vec<T>>,
}

impl<'g, T: Real> Walker<'g, T> {
    pub fn new(graph: &'g SimilarityGraph<T>) -> Self {
        let cumulative = (0..graph.node_count())
            .map(|u| {
                let mut acc = T::zero();
                graph
                    .neighbors(u)
                    .iter()
                    .map(|&(_, w)| {
                        acc += w;
                        acc
                    })
                    .collect()
            })
            .collect();
        Self { graph, cumulative }
    }

    pub fn graph(&self) -> &SimilarityGraph<T> {
        self.graph
    }

    #[inline]
    fn step<R: Rng + ?Sized>(&self, from: usize, rng: &mut R) -> usize {
        let cum = &self.cumulative[from];
        let total = *cum.last().expect("valid graphs have no isolated nodes");
        let target = T::lit(rng.random::<f64>()) * total;
        let pos = cum.partition_point(|&c| c <= target).min(cum.len() - 1);
        self.graph.neighbors(from)[pos].0
    }

    /// Appends a walk of `length` nodes starting at `start` to `out`.
    pub fn walk_into<R: Rng + ?Sized>(
        &self,
        start: usize,
        length: usize,
        rng: &mut R,
        out: &mut Vec<u32>,
    ) {
        if length == 0 {
            return;
        }
        let mut current = start;
        out.push(current as u32);
        for _ in 1..length {
            current = self.step(current, rng);
            out.push(current as u32);
        }
    }
}

/// A single walk of `length` nodes from `start`.
pub fn generate_walk<T: Real, R: Rng + ?Sized>(
    g: &SimilarityGraph<T>,
    start: usize,
    length: usize,
    rng: &mut R,
) -> Vec<usize> {
    let mut out = Vec::with_capacity(length);
    Walker::new(g).walk_into(start, length, rng, &mut out);
    out.into_iter().map(|v| v as usize).collect()
}

/// RNG for walk slot `slot` (= repetition × n + start node).
pub fn walk_rng(seed: u64, slot: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(slot as u64);
    rng
}

/// Materialised walks, stored back to back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkCorpus {
    node_count: usize,
    walk_length: usize,
    tokens: Vec<u32>,
}

impl WalkCorpus {
    /// Wraps externally produced walks; all must share one length.
    pub fn from_walks(node_count: usize, walks: &[Vec<usize>]) -> Result<Self> {
        let walk_length = walks.first().map_or(0, Vec::len);
        let mut tokens = Vec::with_capacity(walks.len() * walk_length);
        for walk in walks {
            if walk.len() != walk_length {
                return Err(Error::InvalidConfig("walks differ in length".into()));
            }
            for &v in walk {
                if v >= node_count {
                    return Err(Error::InvalidConfig(format!(
                        "node {v} outside {node_count} nodes"
                    )));
                }
                tokens.push(v as u32);
            }
        }
        Ok(Self {
            node_count,
            walk_length,
            tokens,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn walk_length(&self) -> usize {
        self.walk_length
    }

    pub fn len(&self) -> usize {
        self.tokens.len().checked_div(self.walk_length).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }

    pub fn walk(&self, i: usize) -> &[u32] {
        &self.tokens[i * self.walk_length..(i + 1) * self.walk_length]
    }

    pub fn walks(&self) -> impl ExactSizeIterator<Item = &[u32]> + '_ {
        (0..self.len()).map(move |i| self.walk(i))
    }

    /// One walk per line, space-separated node indices.
    pub fn write_walks<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        for walk in self.walks() {
            let line: Vec<String> = walk.iter().map(u32::to_string).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

fn check_graph_size<T: Real>(g: &SimilarityGraph<T>) -> Result<()> {
    if g.node_count() > u32::MAX as usize {
        return Err(Error::InvalidConfig(
            "graph too large for walk storage".into(),
        ));
    }
    Ok(())
}

/// `walks_per_node` walks from every node, repetition-major then node order.
pub fn generate_corpus<T: Real>(g: &SimilarityGraph<T>, cfg: &WalkConfig) -> Result<WalkCorpus> {
    cfg.validate()?;
    check_graph_size(g)?;
    let n = g.node_count();
    let l = cfg.walk_length;
    let walker = Walker::new(g);
    let mut tokens = vec![0u32; n * cfg.walks_per_node * l];
    tokens
        .par_chunks_mut(l)
        .enumerate()
        .for_each(|(slot, chunk)| {
            let mut rng = walk_rng(cfg.seed, slot);
            let mut buf = Vec::with_capacity(l);
            walker.walk_into(slot % n, l, &mut rng, &mut buf);
            chunk.copy_from_slice(&buf);
        });
    Ok(WalkCorpus {
        node_count: n,
        walk_length: l,
        tokens,
    })
}

/// Calls `f` for every context pair of one walk, position by position.
/// Window positions are clipped to the walk; revisits yield self-pairs.
#[inline]
pub fn for_each_context_pair<F: FnMut(usize, usize)>(walk: &[u32], window: usize, mut f: F) {
    let len = walk.len();
    for j in 0..len {
        let lo = j.saturating_sub(window);
        let hi = (j + window).min(len - 1);
        for m in (lo..=hi).filter(|&m| m != j) {
            f(walk[j] as usize, walk[m] as usize);
        }
    }
}

/// All context pairs of a corpus, walk by walk.
pub fn extract_context_pairs(
    corpus: &WalkCorpus,
    window: usize,
) -> impl Iterator<Item = ContextPair> + '_ {
    corpus.walks().flat_map(move |walk| {
        let mut pairs = Vec::new();
        for_each_context_pair(walk, window, |center, context| {
            pairs.push(ContextPair { center, context })
        });
        pairs.into_iter()
    })
}

/// Number of pairs a walk of `length` nodes yields with half-width `window`.
pub fn pair_count(length: usize, window: usize) -> usize {
    (0..length)
        .map(|j| j.min(window) + (length - 1 - j).min(window))
        .sum()
}

/// Anything that can replay walks in schedule order.
pub trait WalkSource: Sync {
    fn node_count(&self) -> usize;
    fn walk_count(&self) -> usize;
    fn walk_length(&self) -> usize;
    /// Visits walks `range` in order.
    fn visit(&self, range: Range<usize>, f: &mut dyn FnMut(&[u32]));

    fn token_count(&self) -> usize {
        self.walk_count() * self.walk_length()
    }
}

impl WalkSource for WalkCorpus {
    fn node_count(&self) -> usize {
        self.node_count
    }

    fn walk_count(&self) -> usize {
        self.len()
    }

    fn walk_length(&self) -> usize {
        self.walk_length
    }

    fn visit(&self, range: Range<usize>, f: &mut dyn FnMut(&[u32])) {
        for i in range {
            f(self.walk(i));
        }
    }
}

/// Walks regenerated on demand instead of stored. Replays are identical to
/// the corresponding [`generate_corpus`] output.
pub struct StreamedWalks<'g, T> {
    walker: Walker<'g, T>,
    cfg: WalkConfig,
}

impl<'g, T: Real> StreamedWalks<'g, T> {
    pub fn new(graph: &'g SimilarityGraph<T>, cfg: WalkConfig) -> Result<Self> {
        cfg.validate()?;
        check_graph_size(graph)?;
        Ok(Self {
            walker: Walker::new(graph),
            cfg,
        })
    }
}

impl<T: Real> WalkSource for StreamedWalks<'_, T> {
    fn node_count(&self) -> usize {
        self.walker.graph().node_count()
    }

    fn walk_count(&self) -> usize {
        self.node_count() * self.cfg.walks_per_node
    }

    fn walk_length(&self) -> usize {
        self.cfg.walk_length
    }

    fn visit(&self, range: Range<usize>, f: &mut dyn FnMut(&[u32])) {
        let n = self.node_count();
        let mut buf = Vec::with_capacity(self.cfg.walk_length);
        for slot in range {
            buf.clear();
            let mut rng = walk_rng(self.cfg.seed, slot);
            self.walker
                .walk_into(slot % n, self.cfg.walk_length, &mut rng, &mut buf);
            f(&buf);
        }
    }
}

/// Token frequency per node over a whole source.
pub fn count_tokens(source: &dyn WalkSource) -> Vec<u64> {
    let mut counts = vec![0u64; source.node_count()];
    source.visit(0..source.walk_count(), &mut |walk| {
        for &v in walk {
            counts[v as usize] += 1;
        }
    });
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_topk_graph;
    use crate::matrix::Matrix;

    fn star(weights: &[f64]) -> SimilarityGraph<f64> {
        let edges: Vec<_> = weights
            .iter()
            .enumerate()
            .map(|(i, &w)| (0, i + 1, w))
            .collect();
        SimilarityGraph::from_edges(weights.len() + 1, &edges).unwrap()
    }

    #[test]
    fn transition_examples() {
        let p = transition_distribution(&star(&[0.5, 0.5]), 0).unwrap();
        assert_eq!(p, vec![(1, 0.5), (2, 0.5)]);
        let p = transition_distribution(&star(&[1.0, 3.0]), 0).unwrap();
        assert_eq!(p, vec![(1, 0.25), (2, 0.75)]);
        let p = transition_distribution(&star(&[0.3]), 1).unwrap();
        assert_eq!(p, vec![(0, 1.0)]);
    }

    #[test]
    fn walk_basics() {
        let g = star(&[1.0]);
        let mut rng = walk_rng(3, 0);
        assert_eq!(generate_walk(&g, 1, 1, &mut rng), vec![1]);
        assert_eq!(generate_walk(&g, 0, 4, &mut rng), vec![0, 1, 0, 1]);
    }

    #[test]
    fn first_step_frequencies_follow_weights() {
        let g = star(&[1.0, 3.0]);
        let walker = Walker::new(&g);
        let mut rng = walk_rng(99, 0);
        let mut hits = [0usize; 3];
        let mut buf = Vec::new();
        for _ in 0..10_000 {
            buf.clear();
            walker.walk_into(0, 2, &mut rng, &mut buf);
            hits[buf[1] as usize] += 1;
        }
        let f1 = hits[1] as f64 / 10_000.0;
        let f2 = hits[2] as f64 / 10_000.0;
        assert_eq!(hits[0], 0);
        assert!((f1 - 0.25).abs() <= 0.02, "{f1}");
        assert!((f2 - 0.75).abs() <= 0.02, "{f2}");
    }

    fn small_graph() -> SimilarityGraph<f64> {
        let m = Matrix::from_rows(&[[1.0, 0.1], [0.2, 1.0], [1.0, 1.0]]).unwrap();
        build_topk_graph(&m, 1).unwrap()
    }

    #[test]
    fn corpus_shape_and_determinism() {
        let g = small_graph();
        let cfg = WalkConfig {
            walks_per_node: 2,
            walk_length: 5,
            window: 2,
            seed: 5,
        };
        let corpus = generate_corpus(&g, &cfg).unwrap();
        assert_eq!(corpus.len(), 6);
        assert!(corpus.walks().all(|w| w.len() == 5));
        let starts: Vec<u32> = corpus.walks().map(|w| w[0]).collect();
        assert_eq!(starts, vec![0, 1, 2, 0, 1, 2]);
        assert_eq!(corpus, generate_corpus(&g, &cfg).unwrap());
        let other = generate_corpus(&g, &WalkConfig { seed: 6, ..cfg }).unwrap();
        assert_ne!(corpus, other);
    }

    #[test]
    fn streamed_walks_replay_the_corpus() {
        let g = small_graph();
        let cfg = WalkConfig {
            walks_per_node: 3,
            walk_length: 7,
            window: 2,
            seed: 17,
        };
        let corpus = generate_corpus(&g, &cfg).unwrap();
        let streamed = StreamedWalks::new(&g, cfg).unwrap();
        let mut replay = Vec::new();
        streamed.visit(0..streamed.walk_count(), &mut |w| {
            replay.extend_from_slice(w)
        });
        assert_eq!(replay, corpus.tokens);
        assert_eq!(count_tokens(&streamed), count_tokens(&corpus));
    }

    #[test]
    fn context_window_examples() {
        let walk = [10u32, 20, 30, 40, 50];
        let mut ctx = Vec::new();
        for_each_context_pair(&walk, 2, |c, x| {
            if c == 30 {
                ctx.push(x)
            }
        });
        assert_eq!(ctx, vec![10, 20, 40, 50]);

        let mut n = 0;
        for_each_context_pair(&[4u32], 3, |_, _| n += 1);
        assert_eq!(n, 0);

        let corpus = WalkCorpus::from_walks(3, &[vec![1, 2]]).unwrap();
        let pairs: Vec<_> = extract_context_pairs(&corpus, 5).collect();
        assert_eq!(
            pairs,
            vec![
                ContextPair {
                    center: 1,
                    context: 2
                },
                ContextPair {
                    center: 2,
                    context: 1
                }
            ]
        );
    }

    #[test]
    fn revisits_yield_self_pairs() {
        let corpus = WalkCorpus::from_walks(2, &[vec![0, 1, 0]]).unwrap();
        let pairs: Vec<_> = extract_context_pairs(&corpus, 2).collect();
        assert!(pairs.contains(&ContextPair {
            center: 0,
            context: 0
        }));
    }

    #[test]
    fn pair_count_closed_form() {
        for len in 1..30 {
            for window in 1..8 {
                let mut n = 0;
                let walk: Vec<u32> = (0..len as u32).collect();
                for_each_context_pair(&walk, window, |_, _| n += 1);
                assert_eq!(n, pair_count(len, window));
                if len > 2 * window {
                    let mut interior = 0;
                    for_each_context_pair(&walk, window, |c, _| {
                        if c == window {
                            interior += 1
                        }
                    });
                    assert_eq!(interior, 2 * window);
                }
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(WalkConfig::default().validate().is_ok());
        for bad in [
            WalkConfig {
                walks_per_node: 0,
                ..Default::default()
            },
            WalkConfig {
                walk_length: 0,
                ..Default::default()
            },
            WalkConfig {
                window: 0,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
        assert!(WalkCorpus::from_walks(2, &[vec![0, 5]]).is_err());
    }
}
