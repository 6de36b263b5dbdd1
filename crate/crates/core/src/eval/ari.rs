use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};

fn comb2(x: u64) -> i128 {
    let x = x as i128;
    x * (x - 1) / 2
}

/// Adjusted Rand Index between two labelings, from their contingency table:
/// `(index - expected) / (max - expected)`.
///
/// Every pair count is an integer, so numerator and denominator are formed
/// exactly and divided once.
///
/// When both labelings are trivial in the same way (all singletons or one
/// cluster each) the denominator vanishes and the partitions are identical,
/// so the score is 1.
pub fn adjusted_rand_index<A, B>(labels_a: &[A], labels_b: &[B]) -> Result<f64>
where
    A: Eq + Hash,
    B: Eq + Hash,
{
    if labels_a.len() != labels_b.len() {
        return Err(Error::Evaluation(format!(
            "label length mismatch: {} vs {}",
            labels_a.len(),
            labels_b.len()
        )));
    }
    if labels_a.len() < 2 {
        return Err(Error::Evaluation("ARI needs at least 2 labels".into()));
    }
    let mut rows: HashMap<&A, u64> = HashMap::new();
    let mut cols: HashMap<&B, u64> = HashMap::new();
    let mut cells: HashMap<(&A, &B), u64> = HashMap::new();
    for (a, b) in labels_a.iter().zip(labels_b) {
        *rows.entry(a).or_default() += 1;
        *cols.entry(b).or_default() += 1;
        *cells.entry((a, b)).or_default() += 1;
    }
    let index: i128 = cells.values().map(|&c| comb2(c)).sum();
    let sum_rows: i128 = rows.values().map(|&c| comb2(c)).sum();
    let sum_cols: i128 = cols.values().map(|&c| comb2(c)).sum();
    let total = comb2(labels_a.len() as u64);
    // both scaled by 2 * total
    let numer = 2 * index * total - 2 * sum_rows * sum_cols;
    let denom = (sum_rows + sum_cols) * total - 2 * sum_rows * sum_cols;
    if denom == 0 {
        return Ok(1.0);
    }
    Ok(numer as f64 / denom as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(
            adjusted_rand_index(&[0, 0, 1, 1], &[0, 0, 1, 1]).unwrap(),
            1.0
        );
        assert_eq!(
            adjusted_rand_index(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(),
            1.0
        );
        assert_eq!(
            adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap(),
            -0.5
        );
    }

    #[test]
    fn errors_and_degenerate_cases() {
        assert!(adjusted_rand_index(&[0, 1], &[0]).is_err());
        assert!(adjusted_rand_index(&[0], &[0]).is_err());
        assert_eq!(adjusted_rand_index(&[3, 3, 3], &[1, 1, 1]).unwrap(), 1.0);
        assert_eq!(adjusted_rand_index(&[0, 1, 2], &[5, 6, 7]).unwrap(), 1.0);
    }
}
