//! Exact cosine top-k search.
//!
//! [`CosineIndex`] answers top-k queries with a ball tree over the
//! unit-normalised rows. Tree distances only prune; every candidate that
//! survives is scored with the same cosine routine the brute-force path
//! uses, so both paths return identical neighbor lists.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::matrix::{cosine_with_sq_norms, Matrix};
use crate::scalar::{squared_euclidean, Real};

/// A neighbor of a query row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor<T> {
    pub index: usize,
    pub similarity: T,
}

/// Higher similarity first, then lower index.
fn rank<T: Real>(a: &Neighbor<T>, b: &Neighbor<T>) -> Ordering {
    b.similarity
        .partial_cmp(&a.similarity)
        .unwrap_or(Ordering::Equal)
        .then(a.index.cmp(&b.index))
}

/// Heap entry ordered so that the worst retained neighbor sits on top.
struct Worst<T>(Neighbor<T>);

impl<T: Real> PartialEq for Worst<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Real> Eq for Worst<T> {}
impl<T: Real> PartialOrd for Worst<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Worst<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        rank(&self.0, &other.0)
    }
}

struct TopK<T> {
    k: usize,
    heap: BinaryHeap<Worst<T>>,
}

impl<T: Real> TopK<T> {
    fn new(k: usize) -> Self {
        Self {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    fn offer(&mut self, candidate: Neighbor<T>) {
        if self.heap.len() < self.k {
            self.heap.push(Worst(candidate));
        } else if let Some(worst) = self.heap.peek() {
            if rank(&candidate, &worst.0) == Ordering::Less {
                self.heap.pop();
                self.heap.push(Worst(candidate));
            }
        }
    }

    fn threshold(&self) -> Option<T> {
        if self.heap.len() < self.k {
            return None;
        }
        self.heap.peek().map(|w| w.0.similarity)
    }

    fn into_sorted(self) -> Vec<Neighbor<T>> {
        let mut out: Vec<_> = self.heap.into_iter().map(|w| w.0).collect();
        out.sort_by(rank);
        out
    }
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k + 1 > n {
        return Err(Error::InvalidConfig(format!(
            "k = {k} neighbors requested but only {} other rows exist",
            n.saturating_sub(1)
        )));
    }
    Ok(())
}

/// Reference search: scores every other row.
pub fn knn_search_brute<T: Real>(
    m: &Matrix<T>,
    query_row: usize,
    k: usize,
) -> Result<Vec<Neighbor<T>>> {
    check_k(m.rows(), k)?;
    let norms = m.nonzero_row_sq_norms()?;
    Ok(brute_with_norms(m, &norms, query_row, k))
}

fn brute_with_norms<T: Real>(m: &Matrix<T>, norms: &[T], q: usize, k: usize) -> Vec<Neighbor<T>> {
    let mut top = TopK::new(k);
    let qrow = m.row(q);
    for j in (0..m.rows()).filter(|&j| j != q) {
        top.offer(Neighbor {
            index: j,
            similarity: cosine_with_sq_norms(qrow, m.row(j), norms[q], norms[j]),
        });
    }
    top.into_sorted()
}

/// Top-`k` rows most cosine-similar to `query_row`, excluding itself, sorted
/// by descending similarity with ties going to the lower index.
pub fn knn_search<T: Real>(m: &Matrix<T>, query_row: usize, k: usize) -> Result<Vec<Neighbor<T>>> {
    CosineIndex::build(m)?.query(query_row, k)
}

const LEAF_SIZE: usize = 16;

/// Slack on the pruning bound. Bounds are computed on normalised copies of
/// the rows, which differ from the scored cosine by a few ulps.
const PRUNE_SLACK: f64 = 1e-9;

struct Ball<T> {
    center: Vec<T>,
    radius: T,
    kind: BallKind,
}

enum BallKind {
    Leaf { start: usize, end: usize },
    Split { left: usize, right: usize },
}

/// Ball tree over unit-normalised rows of a matrix, for exact cosine top-k.
pub struct CosineIndex<'a, T> {
    matrix: &'a Matrix<T>,
    norms: Vec<T>,
    unit: Vec<T>,
    order: Vec<usize>,
    balls: Vec<Ball<T>>,
}

impl<'a, T: Real> CosineIndex<'a, T> {
    /// Fails with `ZeroNorm` on the first zero row.
    pub fn build(matrix: &'a Matrix<T>) -> Result<Self> {
        let norms = matrix.nonzero_row_sq_norms()?;
        let dim = matrix.cols();
        let mut unit = Vec::with_capacity(matrix.rows() * dim);
        for (row, &sq) in matrix.iter_rows().zip(&norms) {
            let norm = sq.sqrt();
            unit.extend(row.iter().map(|&v| v / norm));
        }
        let mut index = Self {
            matrix,
            norms,
            unit,
            order: (0..matrix.rows()).collect(),
            balls: Vec::new(),
        };
        if matrix.rows() > 0 {
            index.build_ball(0, matrix.rows());
        }
        Ok(index)
    }

    pub fn len(&self) -> usize {
        self.matrix.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Squared row norms.
    pub fn sq_norms(&self) -> &[T] {
        &self.norms
    }

    fn unit_row(&self, i: usize) -> &[T] {
        let d = self.matrix.cols();
        &self.unit[i * d..(i + 1) * d]
    }

    fn build_ball(&mut self, start: usize, end: usize) -> usize {
        let dim = self.matrix.cols();
        let members = &self.order[start..end];
        let mut center = vec![T::zero(); dim];
        for &i in members {
            crate::scalar::axpy(T::one(), self.unit_row(i), &mut center);
        }
        let inv = T::one() / T::from_usize_lossy(members.len());
        center.iter_mut().for_each(|c| *c *= inv);
        let radius = members
            .iter()
            .map(|&i| squared_euclidean(self.unit_row(i), &center).sqrt())
            .fold(T::zero(), T::max);

        let id = self.balls.len();
        self.balls.push(Ball {
            center,
            radius,
            kind: BallKind::Leaf { start, end },
        });
        if end - start <= LEAF_SIZE {
            return id;
        }

        // Split on the coordinate with the widest spread, at the median.
        let mut best = (0usize, T::neg_infinity());
        for c in 0..dim {
            let (lo, hi) = self.order[start..end]
                .iter()
                .map(|&i| self.unit[i * dim + c])
                .fold((T::infinity(), T::neg_infinity()), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                });
            if hi - lo > best.1 {
                best = (c, hi - lo);
            }
        }
        if best.1 <= T::zero() {
            return id;
        }
        let axis = best.0;
        let mid = start + (end - start) / 2;
        {
            let unit = &self.unit;
            self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
                unit[a * dim + axis]
                    .partial_cmp(&unit[b * dim + axis])
                    .unwrap_or(Ordering::Equal)
                    .then(a.cmp(&b))
            });
        }
        let left = self.build_ball(start, mid);
        let right = self.build_ball(mid, end);
        self.balls[id].kind = BallKind::Split { left, right };
        id
    }

    /// Top-`k` neighbors of row `query_row`, identical to the brute-force result.
    pub fn query(&self, query_row: usize, k: usize) -> Result<Vec<Neighbor<T>>> {
        check_k(self.len(), k)?;
        if query_row >= self.len() {
            return Err(Error::InvalidConfig(format!(
                "query row {query_row} out of range for {} rows",
                self.len()
            )));
        }
        let mut top = TopK::new(k);
        if k > 0 {
            self.descend(0, query_row, &mut top);
        }
        Ok(top.into_sorted())
    }

    /// Upper bound on the cosine between the query and any member of a ball.
    fn bound(&self, ball: &Ball<T>, q: &[T]) -> T {
        let gap = squared_euclidean(q, &ball.center).sqrt() - ball.radius;
        if gap <= T::zero() {
            T::one()
        } else {
            T::one() - gap * gap * T::lit(0.5)
        }
    }

    fn descend(&self, id: usize, q: usize, top: &mut TopK<T>) {
        let ball = &self.balls[id];
        match ball.kind {
            BallKind::Leaf { start, end } => {
                let qrow = self.matrix.row(q);
                for &j in &self.order[start..end] {
                    if j == q {
                        continue;
                    }
                    top.offer(Neighbor {
                        index: j,
                        similarity: cosine_with_sq_norms(
                            qrow,
                            self.matrix.row(j),
                            self.norms[q],
                            self.norms[j],
                        ),
                    });
                }
            }
            BallKind::Split { left, right } => {
                let qu = self.unit_row(q);
                let bl = self.bound(&self.balls[left], qu);
                let br = self.bound(&self.balls[right], qu);
                let order = if bl >= br {
                    [(left, bl), (right, br)]
                } else {
                    [(right, br), (left, bl)]
                };
                for (child, bound) in order {
                    if let Some(t) = top.threshold() {
                        if bound < t - T::lit(PRUNE_SLACK) {
                            continue;
                        }
                    }
                    self.descend(child, q, top);
                }
            }
        }
    }

    /// Brute-force query reusing the cached norms.
    pub fn query_brute(&self, query_row: usize, k: usize) -> Result<Vec<Neighbor<T>>> {
        check_k(self.len(), k)?;
        Ok(brute_with_norms(self.matrix, &self.norms, query_row, k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn triangle() -> Matrix<f64> {
        Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap()
    }

    #[test]
    fn query_e1() {
        let got = knn_search(&triangle(), 0, 2).unwrap();
        assert_eq!(got[0].index, 2);
        assert_eq!(got[0].similarity, 0.7071067811865475);
        assert_eq!(got[1].index, 1);
        assert_eq!(got[1].similarity, 0.0);
    }

    #[test]
    fn duplicate_pair() {
        let m = Matrix::from_rows(&[[3.0, 1.0], [3.0, 1.0]]).unwrap();
        let got = knn_search(&m, 1, 1).unwrap();
        assert_eq!(
            got,
            vec![Neighbor {
                index: 0,
                similarity: 1.0
            }]
        );
    }

    #[test]
    fn ties_go_to_lower_index() {
        let m = Matrix::from_rows(&[[1.0, 0.0], [2.0, 0.0], [0.0, 1.0], [5.0, 0.0], [3.0, 0.0]])
            .unwrap();
        let got = knn_search(&m, 1, 2).unwrap();
        assert_eq!(got.iter().map(|n| n.index).collect::<Vec<_>>(), vec![0, 3]);
    }

    #[test]
    fn rejects_oversized_k_and_zero_rows() {
        assert!(knn_search(&triangle(), 0, 3).is_err());
        let m = Matrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]]).unwrap();
        assert!(matches!(
            knn_search(&m, 0, 1),
            Err(Error::ZeroNorm { row: 1 })
        ));
    }

    #[test]
    fn accelerated_matches_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let (n, d) = (200, 12);
        let data: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>() - 0.3).collect();
        let m = Matrix::from_vec(n, d, data).unwrap();
        let index = CosineIndex::build(&m).unwrap();
        for q in 0..n {
            assert_eq!(
                index.query(q, 10).unwrap(),
                index.query_brute(q, 10).unwrap()
            );
        }
    }

    #[test]
    fn heavy_ties_agree() {
        // Many duplicated directions make every boundary a tie.
        let mut rows = Vec::new();
        for i in 0..120 {
            let base = [(i % 4) as f64 + 1.0, (i % 3) as f64, 1.0];
            rows.push(base.map(|v| v * ((i % 5) as f64 + 1.0)));
        }
        let m = Matrix::from_rows(&rows).unwrap();
        let index = CosineIndex::build(&m).unwrap();
        for q in 0..m.rows() {
            for k in [1, 7, 30] {
                assert_eq!(index.query(q, k).unwrap(), index.query_brute(q, k).unwrap());
            }
        }
    }
}
