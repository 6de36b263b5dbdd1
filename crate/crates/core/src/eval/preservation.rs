use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::CosineIndex;
use crate::matrix::Matrix;
use crate::scalar::Real;

/// Mean fraction of each row's `topk` cosine neighbors in `m` that are also
/// among its `topk` cosine neighbors in `z`. `topk` is capped at `n - 1`.
pub fn neighborhood_preservation<T: Real, U: Real>(
    m: &Matrix<T>,
    z: &Matrix<U>,
    topk: usize,
) -> Result<f64> {
    let n = m.rows();
    if z.rows() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: z.rows(),
        });
    }
    if n < 2 || topk == 0 {
        return Err(Error::Evaluation(format!(
            "neighborhood preservation needs n >= 2 and topk >= 1 (n = {n}, topk = {topk})"
        )));
    }
    let k = topk.min(n - 1);
    let input = CosineIndex::build(m)?;
    let embedded = CosineIndex::build(z)?;
    let overlaps = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut a: Vec<usize> = input.query(i, k)?.into_iter().map(|nb| nb.index).collect();
            let b = embedded.query(i, k)?;
            a.sort_unstable();
            Ok(b.iter()
                .filter(|nb| a.binary_search(&nb.index).is_ok())
                .count())
        })
        .collect::<Result<Vec<_>>>()?;
    let total: usize = overlaps.iter().sum();
    Ok(total as f64 / (n * k) as f64)
}
