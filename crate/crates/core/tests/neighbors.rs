//! Accelerated neighbor search and graph construction against brute force.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vec2vec::graph::{
    build_topk_graph, knn_search, knn_search_brute, transpose_reduce, CosineIndex,
};
use vec2vec::*;

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Matrix<f64> {
    let data = (0..n * d)
        .map(|_| {
            let v: f64 = rng.random_range(-1.0..1.0);
            // a coarse grid makes ties and duplicate rows common
            if d < 4 {
                (v * 4.0).round() / 4.0 + 1e-3
            } else {
                v
            }
        })
        .collect();
    Matrix::from_vec(n, d, data).unwrap()
}

/// All-pairs cosine, sorted by similarity descending then index.
fn oracle(m: &Matrix<f64>, q: usize, k: usize) -> Vec<usize> {
    let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();
    let mut all: Vec<(f64, usize)> = (0..m.rows())
        .filter(|&j| j != q)
        .map(|j| {
            let dotp: f64 = m.row(q).iter().zip(m.row(j)).map(|(a, b)| a * b).sum();
            let c = (dotp / (norm(m.row(q)) * norm(m.row(j))).sqrt()).clamp(-1.0, 1.0);
            (c, j)
        })
        .collect();
    all.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    all.truncate(k);
    all.into_iter().map(|(_, j)| j).collect()
}

#[test]
fn accelerated_search_equals_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for trial in 0..20 {
        let n = rng.random_range(20..=500);
        let d = if trial % 4 == 0 {
            rng.random_range(1..4)
        } else {
            rng.random_range(1..=64)
        };
        let m = random_matrix(&mut rng, n, d);
        let k = rng.random_range(1..n.min(30));
        let index = CosineIndex::build(&m).unwrap();
        for q in 0..n {
            let fast: Vec<usize> = index
                .query(q, k)
                .unwrap()
                .iter()
                .map(|nb| nb.index)
                .collect();
            let brute: Vec<usize> = knn_search_brute(&m, q, k)
                .unwrap()
                .iter()
                .map(|nb| nb.index)
                .collect();
            assert_eq!(fast, brute, "trial {trial}, n={n}, d={d}, q={q}");
            assert_eq!(fast, oracle(&m, q, k), "trial {trial}, n={n}, d={d}, q={q}");
        }
    }
}

#[test]
fn knn_examples() {
    let m = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
    let r = knn_search(&m, 0, 2).unwrap();
    assert_eq!((r[0].index, r[1].index), (2, 1));
    assert_eq!(r[0].similarity, 0.7071067811865475);
    assert_eq!(r[1].similarity, 0.0);
    let dup = Matrix::from_rows(&[[3.0, 1.0], [3.0, 1.0]]).unwrap();
    let r = knn_search(&dup, 1, 1).unwrap();
    assert_eq!((r[0].index, r[0].similarity), (0, 1.0));
}

#[test]
fn transpose_reduce_examples() {
    let m = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
    let z = transpose_reduce(&m, |mt| {
        assert_eq!(mt.shape(), (2, 2));
        Matrix::from_rows(&[[1.0], [1.0]])
    })
    .unwrap();
    assert_eq!(z.as_slice(), &[3.0, 7.0]);
    let wide = Matrix::<f64>::zeros(100, 5);
    let z = transpose_reduce(&wide, |_| Ok(Matrix::zeros(5, 3))).unwrap();
    assert_eq!(z.shape(), (100, 3));
    assert!(transpose_reduce(&wide, |_| Ok(Matrix::zeros(4, 3))).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn topk_graph_invariants(seed in any::<u64>(), n in 2usize..60, d in 1usize..8, topk in 1usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_matrix(&mut rng, n, d);
        let g = build_topk_graph(&m, topk).unwrap();
        let k = topk.min(n - 1);
        for u in 0..n {
            prop_assert!(g.degree(u) >= k);
            for &(v, w) in g.neighbors(u) {
                prop_assert!(v != u);
                prop_assert!(w > 0.0);
                prop_assert_eq!(g.weight(v, u), Some(w));
            }
            // union rule: an edge exists iff one endpoint selects the other
            let selected = oracle(&m, u, k);
            for &v in &selected {
                prop_assert!(g.weight(u, v).is_some());
            }
        }
        for (u, v, _) in g.edges() {
            prop_assert!(oracle(&m, u, k).contains(&v) || oracle(&m, v, k).contains(&u));
        }
    }

    #[test]
    fn cosine_scale_invariance(a in prop::collection::vec(-10.0f64..10.0, 1..12), c in 0.01f64..100.0, seed in any::<u64>()) {
        prop_assume!(a.iter().any(|v| v.abs() > 1e-3));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b: Vec<f64> = a.iter().map(|_| rng.random_range(-1.0..1.0) + 2.0).collect();
        let scaled: Vec<f64> = a.iter().map(|v| v * c).collect();
        let lhs = cosine_similarity(&a, &b).unwrap();
        prop_assert!((lhs - cosine_similarity(&scaled, &b).unwrap()).abs() <= 1e-12);
        prop_assert!((lhs - cosine_similarity(&b, &a).unwrap()).abs() <= 1e-15);
        prop_assert!((cosine_similarity(&a, &a).unwrap() - 1.0).abs() <= 1e-12);
    }
}
