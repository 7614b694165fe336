//! Averaging and overweighting-correction properties on random graphs.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rfusion_core::consensus::{compute_delta, consensus_rounds, metropolis_weights, NetworkGraph};
use rfusion_core::gauss::InformationPair;
use rfusion_core::linalg::min_eigenvalue;

/// Connected graph: a random spanning tree plus extra edges with probability `p`.
fn random_graph(seed: u64, nodes: usize, p: f64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for v in 1..nodes {
        edges.push((rng.random_range(0..v), v));
    }
    for i in 0..nodes {
        for j in (i + 1)..nodes {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    edges
}

fn random_info(rng: &mut ChaCha8Rng, n: usize) -> InformationPair {
    let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    InformationPair {
        info_matrix: &b * b.transpose(),
        info_vector: DVector::from_fn(n, |_, _| rng.random_range(-10.0..10.0)),
    }
}

fn average(slots: &[InformationPair]) -> InformationPair {
    let k = slots.len() as f64;
    let n = slots[0].dim();
    let mut m = DMatrix::zeros(n, n);
    let mut v = DVector::zeros(n);
    for s in slots {
        m += &s.info_matrix;
        v += &s.info_vector;
    }
    InformationPair {
        info_matrix: m / k,
        info_vector: v / k,
    }
}

fn distance(a: &InformationPair, b: &InformationPair) -> f64 {
    (&a.info_matrix - &b.info_matrix)
        .amax()
        .max((&a.info_vector - &b.info_vector).amax())
}

#[test]
fn dense_six_node_graph_reaches_average() {
    let g = NetworkGraph::new(6, &[0, 1], &random_graph(6, 6, 0.6)).unwrap();
    let w = metropolis_weights(&g).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(60);
    let slots: Vec<_> = (0..6).map(|_| random_info(&mut rng, 5)).collect();
    let target = average(&slots);
    let scale = target.info_matrix.amax().max(target.info_vector.amax());
    for s in consensus_rounds(&slots, &w, 50).unwrap() {
        assert!(
            distance(&s, &target) < 1e-8 * scale,
            "{}",
            distance(&s, &target)
        );
    }
}

#[test]
fn hand_computed_star_values() {
    // Star with center 0 and two leaves: |N_center| = 3, |N_leaf| = 2,
    // so every off-diagonal weight is 1/3.
    let g = NetworkGraph::new(3, &[0], &[(0, 1), (0, 2)]).unwrap();
    let w = metropolis_weights(&g).unwrap().weights;
    let third = 1.0 / 3.0;
    let expected = DMatrix::from_row_slice(
        3,
        3,
        &[
            third,
            third,
            third,
            third,
            2.0 * third,
            0.0,
            third,
            0.0,
            2.0 * third,
        ],
    );
    assert!((&w - &expected).amax() < 1e-15);
    // θ¹ = (1/3, 1/3, 1/3)
    for d in compute_delta(&g, &metropolis_weights(&g).unwrap(), 1).unwrap() {
        assert!((d - 3.0).abs() < 1e-12);
    }
    // θ² = (1/3, 1/3·1/3 + 2/3·1/3, ...) = (1/3, 1/3, 1/3): already at the average
    for d in compute_delta(&g, &metropolis_weights(&g).unwrap(), 2).unwrap() {
        assert!((d - 3.0).abs() < 1e-12);
    }

    // Path 0 - 1 - 2 with a sensor at one end: |N| = (2, 3, 2).
    let g = NetworkGraph::new(3, &[0], &[(0, 1), (1, 2)]).unwrap();
    let w = metropolis_weights(&g).unwrap();
    // θ¹ = (2/3, 1/3, 0), θ² = (2/3·2/3 + 1/3·1/3, 2/3·1/3 + 1/3·1/3, 1/3·1/3)
    let d1 = compute_delta(&g, &w, 1).unwrap();
    assert!((d1[0] - 1.5).abs() < 1e-12 && (d1[1] - 3.0).abs() < 1e-12 && d1[2] == 1.0);
    let d2 = compute_delta(&g, &w, 2).unwrap();
    let want = [9.0 / 5.0, 3.0, 9.0];
    for (d, w) in d2.iter().zip(want) {
        assert!((d - w).abs() < 1e-12, "{d2:?}");
    }
}

fn graph_strategy() -> impl Strategy<Value = (NetworkGraph, u64)> {
    (2usize..12, any::<u64>(), 0.0f64..0.7, 1usize..4).prop_map(|(nodes, seed, p, sensors)| {
        let sensors: Vec<usize> = (0..sensors.min(nodes)).collect();
        let g = NetworkGraph::new(nodes, &sensors, &random_graph(seed, nodes, p)).unwrap();
        (g, seed)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn metropolis_is_symmetric_doubly_stochastic((g, _) in graph_strategy()) {
        let w = metropolis_weights(&g).unwrap().weights;
        let n = g.node_count();
        prop_assert!((&w - w.transpose()).amax() < 1e-15);
        prop_assert!(w.iter().all(|&v| v >= 0.0));
        for i in 0..n {
            prop_assert!((w.row(i).sum() - 1.0).abs() < 1e-12);
            prop_assert!((w.column(i).sum() - 1.0).abs() < 1e-12);
            for j in 0..n {
                if i != j && !g.neighbors(i).contains(&j) {
                    prop_assert_eq!(w[(i, j)], 0.0);
                }
            }
        }
        let mut moduli: Vec<f64> = w.symmetric_eigen().eigenvalues.iter().map(|v| v.abs()).collect();
        moduli.sort_by(|a, b| b.partial_cmp(a).unwrap());
        prop_assert!((moduli[0] - 1.0).abs() < 1e-10);
        prop_assert!(moduli[1] < 1.0 - 1e-9, "second modulus {}", moduli[1]);
    }

    #[test]
    fn averaging_preserves_mean_and_psd((g, seed) in graph_strategy(), rounds in 0usize..20) {
        let w = metropolis_weights(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let slots: Vec<_> = (0..g.node_count()).map(|_| random_info(&mut rng, 3)).collect();
        let before = average(&slots);
        let mut current = slots;
        for _ in 0..rounds {
            current = consensus_rounds(&current, &w, 1).unwrap();
            for s in &current {
                prop_assert!(min_eigenvalue(&s.info_matrix) > -1e-10);
            }
        }
        prop_assert!(distance(&average(&current), &before) < 1e-10);
    }

    #[test]
    fn delta_bounds_and_limit((g, _) in graph_strategy(), rounds in 0usize..10) {
        let w = metropolis_weights(&g).unwrap();
        for d in compute_delta(&g, &w, rounds).unwrap() {
            prop_assert!(d >= 1.0 - 1e-12);
        }
        let limit = g.node_count() as f64 / g.sensor_ids().len() as f64;
        for d in compute_delta(&g, &w, 3000).unwrap() {
            prop_assert!((d - limit).abs() < 1e-6 * limit, "{} vs {}", d, limit);
        }
    }

    #[test]
    fn zero_rounds_is_identity((g, seed) in graph_strategy()) {
        let w = metropolis_weights(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let slots: Vec<_> = (0..g.node_count()).map(|_| random_info(&mut rng, 2)).collect();
        prop_assert_eq!(consensus_rounds(&slots, &w, 0).unwrap(), slots);
    }
}
