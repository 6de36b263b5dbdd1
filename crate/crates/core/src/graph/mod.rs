//! Weighted undirected neighborhood graph over the rows of a matrix.
//!
//! Nodes are row indices; an edge joins two rows selected as neighbors and
//! carries their cosine similarity. Two selection rules exist: the symmetric
//! union of per-row top-k lists, and an epsilon threshold on similarity.

mod knn;

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{cosine_with_sq_norms, Matrix};
use crate::scalar::Real;

pub use knn::{knn_search, knn_search_brute, CosineIndex, Neighbor};

/// Floor applied to retained edge weights so the walk distribution stays a
/// proper probability distribution when similarities are negative.
pub const MIN_EDGE_WEIGHT: f64 = 1e-12;

pub const DEFAULT_TOPK: usize = 5;

/// How neighbors are selected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NeighborRule {
    /// Symmetric union of each row's `topk` most similar rows.
    TopK(usize),
    /// Every pair with cosine strictly above the threshold.
    Epsilon(f64),
}

impl Default for NeighborRule {
    fn default() -> Self {
        NeighborRule::TopK(DEFAULT_TOPK)
    }
}

impl NeighborRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NeighborRule::TopK(0) => Err(Error::InvalidConfig("topk must be at least 1".into())),
            NeighborRule::Epsilon(e) if !e.is_finite() => Err(Error::InvalidConfig(format!(
                "epsilon must be finite, got {e}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn build<T: Real>(&self, m: &Matrix<T>) -> Result<SimilarityGraph<T>> {
        self.validate()?;
        match *self {
            NeighborRule::TopK(k) => build_topk_graph(m, k),
            NeighborRule::Epsilon(e) => build_epsilon_graph(m, e),
        }
    }
}

/// Symmetric weighted adjacency without self-loops or isolated nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph<T> {
    adjacency: Vec<Vec<(usize, T)>>,
}

impl<T: Real> SimilarityGraph<T> {
    /// Builds a graph from undirected edges, checking every invariant.
    pub fn from_edges(node_count: usize, edges: &[(usize, usize, T)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); node_count];
        for &(u, v, w) in edges {
            if u >= node_count || v >= node_count {
                return Err(Error::InvalidConfig(format!(
                    "edge ({u}, {v}) outside {node_count} nodes"
                )));
            }
            if u == v {
                return Err(Error::InvalidConfig(format!("self-loop on node {u}")));
            }
            if !(w > T::zero() && w.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "edge ({u}, {v}) has non-positive weight {w}"
                )));
            }
            adjacency[u].push((v, w));
            adjacency[v].push((u, w));
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(j, _)| j);
            let before = list.len();
            list.dedup_by_key(|&mut (j, _)| j);
            if list.len() != before {
                return Err(Error::InvalidConfig("duplicate edge".into()));
            }
        }
        let graph = Self { adjacency };
        graph.ensure_connected_nodes()?;
        Ok(graph)
    }

    fn ensure_connected_nodes(&self) -> Result<()> {
        let isolated: Vec<usize> = (0..self.node_count())
            .filter(|&i| self.degree(i) == 0)
            .collect();
        if isolated.is_empty() {
            Ok(())
        } else {
            Err(Error::IsolatedNodes { nodes: isolated })
        }
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    /// Neighbors of `node` with edge weights, in ascending index order.
    #[inline]
    pub fn neighbors(&self, node: usize) -> &[(usize, T)] {
        &self.adjacency[node]
    }

    #[inline]
    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<T> {
        let list = &self.adjacency[u];
        list.binary_search_by_key(&v, |&(j, _)| j)
            .ok()
            .map(|p| list[p].1)
    }

    /// Undirected edges as `(u, v, weight)` with `u < v`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, list)| {
            list.iter()
                .filter(move |&&(v, _)| u < v)
                .map(move |&(v, w)| (u, v, w))
        })
    }

    /// Debug dump: one `"u v weight"` line per edge with `u < v`.
    pub fn write_edges<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        for (u, v, w) in self.edges() {
            writeln!(out, "{u} {v} {}", crate::io::format_real(w))?;
        }
        Ok(())
    }

    fn from_sorted_edges(node_count: usize, mut edges: Vec<(usize, usize, T)>) -> Self {
        edges.sort_by_key(|e| (e.0, e.1));
        edges.dedup_by_key(|e| (e.0, e.1));
        let mut adjacency = vec![Vec::new(); node_count];
        for (u, v, w) in edges {
            adjacency[u].push((v, w));
            adjacency[v].push((u, w));
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(j, _)| j);
        }
        Self { adjacency }
    }
}

fn edge_weight<T: Real>(sim: T) -> T {
    sim.max(T::lit(MIN_EDGE_WEIGHT))
}

fn check_min_rows<T: Real>(m: &Matrix<T>) -> Result<()> {
    if m.rows() < 2 {
        return Err(Error::InvalidConfig(format!(
            "a similarity graph needs at least 2 rows, got {}",
            m.rows()
        )));
    }
    Ok(())
}

/// Joins `i` and `j` when either is among the other's `topk` most
/// cosine-similar rows. A `topk` of `n` or more is clamped to `n - 1`.
pub fn build_topk_graph<T: Real>(m: &Matrix<T>, topk: usize) -> Result<SimilarityGraph<T>> {
    check_min_rows(m)?;
    if topk == 0 {
        return Err(Error::InvalidConfig("topk must be at least 1".into()));
    }
    let n = m.rows();
    let k = if topk >= n {
        log::warn!("topk = {topk} with only {n} rows; clamping to {}", n - 1);
        n - 1
    } else {
        topk
    };
    let index = CosineIndex::build(m)?;
    let lists: Vec<Vec<Neighbor<T>>> = (0..n)
        .into_par_iter()
        .map(|i| index.query(i, k))
        .collect::<Result<_>>()?;

    let mut edges = Vec::with_capacity(n * k);
    for (i, list) in lists.iter().enumerate() {
        for nb in list {
            let (u, v) = if i < nb.index {
                (i, nb.index)
            } else {
                (nb.index, i)
            };
            edges.push((u, v, edge_weight(nb.similarity)));
        }
    }
    Ok(SimilarityGraph::from_sorted_edges(n, edges))
}

/// Joins every pair whose cosine similarity exceeds `epsilon`. Nodes left
/// without neighbors are an error.
pub fn build_epsilon_graph<T: Real>(m: &Matrix<T>, epsilon: f64) -> Result<SimilarityGraph<T>> {
    check_min_rows(m)?;
    let norms = m.nonzero_row_sq_norms()?;
    let n = m.rows();
    let eps = T::lit(epsilon);
    let edges: Vec<(usize, usize, T)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let norms = &norms;
            (i + 1..n).filter_map(move |j| {
                let sim = cosine_with_sq_norms(m.row(i), m.row(j), norms[i], norms[j]);
                (sim > eps).then(|| (i, j, edge_weight(sim)))
            })
        })
        .collect();
    let graph = SimilarityGraph::from_sorted_edges(n, edges);
    graph.ensure_connected_nodes()?;
    Ok(graph)
}

/// Embeds the columns of `m` with `inner` (which sees `mᵀ`, shape `D × n`, and
/// must return `D × d`), then maps the rows through it: `m · Z`.
pub fn transpose_reduce<T, F>(m: &Matrix<T>, inner: F) -> Result<Matrix<T>>
where
    T: Real,
    F: FnOnce(&Matrix<T>) -> Result<Matrix<T>>,
{
    let feature_embedding = inner(&m.transpose())?;
    if feature_embedding.rows() != m.cols() {
        return Err(Error::DimensionMismatch(format!(
            "feature embedding has {} rows but the input has {} columns",
            feature_embedding.rows(),
            m.cols()
        )));
    }
    m.matmul(&feature_embedding)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn triangle() -> Matrix<f64> {
        Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap()
    }

    /// Brute-force oracle: all-pairs cosine, per-row top-k by (sim desc,
    /// index asc), symmetrised.
    fn oracle_topk_edges(rows: &[Vec<f64>], k: usize) -> Vec<(usize, usize)> {
        let cos = |a: &[f64], b: &[f64]| {
            let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let sa: f64 = a.iter().map(|x| x * x).sum();
            let sb: f64 = b.iter().map(|x| x * x).sum();
            (d / (sa * sb).sqrt()).clamp(-1.0, 1.0)
        };
        let mut edges = std::collections::BTreeSet::new();
        for i in 0..rows.len() {
            let mut others: Vec<(f64, usize)> = (0..rows.len())
                .filter(|&j| j != i)
                .map(|j| (cos(&rows[i], &rows[j]), j))
                .collect();
            others.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
            for &(_, j) in others.iter().take(k) {
                edges.insert((i.min(j), i.max(j)));
            }
        }
        edges.into_iter().collect()
    }

    #[test]
    fn topk_on_triangle() {
        let g = build_topk_graph(&triangle(), 1).unwrap();
        let edges: Vec<_> = g.edges().collect();
        assert_eq!(
            edges,
            vec![(0, 2, 0.7071067811865475), (1, 2, 0.7071067811865475)]
        );
        assert!((edges[0].2 - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(g.weight(0, 1).is_none());
        let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let oracle = oracle_topk_edges(&rows, 1);
        assert_eq!(edges.iter().map(|e| (e.0, e.1)).collect::<Vec<_>>(), oracle);
    }

    #[test]
    fn duplicate_rows_give_unit_edge() {
        let m = Matrix::from_rows(&[[2.0, 5.0], [2.0, 5.0]]).unwrap();
        let g = build_topk_graph(&m, 1).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1, 1.0)]);
    }

    #[test]
    fn topk_n_minus_one_is_complete_and_oversize_clamps() {
        let m = Matrix::from_rows(&[[1.0, 0.2], [0.1, 1.0], [1.0, 1.0], [-1.0, 0.3]]).unwrap();
        for k in [3, 10] {
            let g = build_topk_graph(&m, k).unwrap();
            assert_eq!(g.edge_count(), 6);
        }
    }

    #[test]
    fn negative_similarity_edges_are_floored() {
        let m = Matrix::from_rows(&[[1.0, 0.0], [-1.0, 0.1]]).unwrap();
        let g = build_topk_graph(&m, 1).unwrap();
        assert_eq!(g.weight(0, 1), Some(MIN_EDGE_WEIGHT));
    }

    #[test]
    fn topk_errors() {
        let single = Matrix::from_rows(&[[1.0, 2.0]]).unwrap();
        assert!(build_topk_graph(&single, 1).is_err());
        assert!(build_topk_graph(&triangle(), 0).is_err());
        let zero = Matrix::from_rows(&[[1.0, 2.0], [0.0, 0.0], [1.0, 1.0]]).unwrap();
        assert!(matches!(
            build_topk_graph(&zero, 1),
            Err(Error::ZeroNorm { row: 1 })
        ));
    }

    #[test]
    fn epsilon_examples() {
        let g = build_epsilon_graph(&triangle(), 0.5).unwrap();
        let edges: Vec<_> = g.edges().map(|(u, v, _)| (u, v)).collect();
        assert_eq!(edges, vec![(0, 2), (1, 2)]);

        let g = build_epsilon_graph(&triangle(), -1.0).unwrap();
        assert_eq!(g.edge_count(), 3);

        let pair = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        match build_epsilon_graph(&pair, 0.5) {
            Err(Error::IsolatedNodes { nodes }) => assert_eq!(nodes, vec![0, 1]),
            other => panic!("expected isolated-node error, got {other:?}"),
        }
    }

    #[test]
    fn neighbor_rule_dispatch() {
        assert!(NeighborRule::TopK(0).validate().is_err());
        assert!(NeighborRule::Epsilon(f64::NAN).validate().is_err());
        let g = NeighborRule::Epsilon(0.5).build(&triangle()).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(NeighborRule::default(), NeighborRule::TopK(5));
    }

    #[test]
    fn from_edges_validates() {
        assert!(SimilarityGraph::from_edges(2, &[(0, 1, 1.0)]).is_ok());
        assert!(SimilarityGraph::from_edges(2, &[(0, 0, 1.0)]).is_err());
        assert!(SimilarityGraph::from_edges(2, &[(0, 1, 0.0)]).is_err());
        assert!(SimilarityGraph::from_edges(3, &[(0, 1, 1.0)]).is_err());
        assert!(SimilarityGraph::from_edges(2, &[(0, 1, 1.0), (1, 0, 1.0)]).is_err());
    }

    #[test]
    fn edge_dump_format() {
        let g = build_topk_graph(&triangle(), 1).unwrap();
        let mut buf = Vec::new();
        g.write_edges(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "0 2 0.7071067811865475\n1 2 0.7071067811865475\n"
        );
    }

    #[test]
    fn transpose_reduce_examples() {
        let eye = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let out = transpose_reduce(&eye, |_| Ok(eye.clone())).unwrap();
        assert_eq!(out, eye);

        let m = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let out = transpose_reduce(&m, |mt| {
            assert_eq!(mt.as_slice(), &[1.0, 3.0, 2.0, 4.0]);
            Matrix::from_rows(&[[1.0], [1.0]])
        })
        .unwrap();
        assert_eq!(out.as_slice(), &[3.0, 7.0]);

        let big = Matrix::<f64>::zeros(100, 5);
        let out = transpose_reduce(&big, |mt| Ok(Matrix::zeros(mt.rows(), 3))).unwrap();
        assert_eq!(out.shape(), (100, 3));
        assert!(transpose_reduce(&big, |_| Ok(Matrix::zeros(4, 3))).is_err());
    }

    fn random_rows() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (2usize..30, 1usize..6).prop_flat_map(|(n, d)| {
            prop::collection::vec(
                prop::collection::vec(-5.0..5.0_f64, d)
                    .prop_filter("nonzero", |r| r.iter().any(|x| x.abs() > 1e-3)),
                n,
            )
        })
    }

    proptest! {
        #[test]
        fn topk_graph_invariants(rows in random_rows(), topk in 1usize..8) {
            let m = Matrix::from_rows(&rows).unwrap();
            let g = build_topk_graph(&m, topk).unwrap();
            let k_eff = topk.min(rows.len() - 1);
            for u in 0..g.node_count() {
                prop_assert!(g.degree(u) >= k_eff);
                for &(v, w) in g.neighbors(u) {
                    prop_assert!(u != v);
                    prop_assert!(w > 0.0);
                    prop_assert_eq!(g.weight(v, u), Some(w));
                }
            }
            let got: Vec<_> = g.edges().map(|(u, v, _)| (u, v)).collect();
            prop_assert_eq!(got, oracle_topk_edges(&rows, k_eff));
        }

        #[test]
        fn epsilon_graph_invariants(rows in random_rows(), eps in -1.0..0.9_f64) {
            let m = Matrix::from_rows(&rows).unwrap();
            if let Ok(g) = build_epsilon_graph(&m, eps) {
                for u in 0..g.node_count() {
                    prop_assert!(g.degree(u) >= 1);
                    for &(v, w) in g.neighbors(u) {
                        prop_assert!(w > 0.0);
                        prop_assert_eq!(g.weight(v, u), Some(w));
                        prop_assert!(m.row_cosine(u, v).unwrap() > eps);
                    }
                }
            }
        }
    }
}
