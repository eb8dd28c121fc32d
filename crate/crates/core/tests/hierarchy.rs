use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semno::semgraph::{recursive_cluster, HierarchyConfig, SemanticGraph};

/// 4 super-blocks x 3 blocks x 2 leaf blocks of 5 nodes. Returns the graph
/// and each node's leaf label.
fn planted(seed: u64) -> (SemanticGraph, Vec<usize>) {
    let leaf_size = 5;
    let n = 4 * 3 * 2 * leaf_size;
    let leaf = |i: usize| i / leaf_size;
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let (la, lb) = (leaf(a), leaf(b));
            let base = if la == lb {
                10.0
            } else if la / 2 == lb / 2 {
                1.0
            } else if la / 6 == lb / 6 {
                0.3
            } else {
                0.05
            };
            edges.push((a, b, base * r.random_range(0.9..1.1)));
        }
    }
    let graph = SemanticGraph {
        nodes: (0..n).map(|i| format!("w{i}")).collect(),
        edges,
        theta: 0.6,
    };
    (graph, (0..n).map(leaf).collect())
}

fn choose2(x: usize) -> f64 {
    (x * x.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index from the contingency table.
fn adjusted_rand(a: &[usize], b: &[usize]) -> f64 {
    let mut table: HashMap<(usize, usize), usize> = HashMap::new();
    let mut rows: HashMap<usize, usize> = HashMap::new();
    let mut cols: HashMap<usize, usize> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&v| choose2(v)).sum();
    let sa: f64 = rows.values().map(|&v| choose2(v)).sum();
    let sb: f64 = cols.values().map(|&v| choose2(v)).sum();
    let expected = sa * sb / choose2(a.len());
    (index - expected) / ((sa + sb) / 2.0 - expected)
}

#[test]
fn adjusted_rand_sanity() {
    assert_eq!(adjusted_rand(&[0, 0, 1, 1], &[5, 5, 7, 7]), 1.0);
    assert!(adjusted_rand(&[0, 0, 1, 1], &[0, 1, 0, 1]) < 0.0);
}

#[test]
fn planted_hierarchy_recovered_at_level_three() {
    for seed in 0..5 {
        let (graph, truth) = planted(seed);
        let h = recursive_cluster(&graph, seed, &HierarchyConfig::default()).unwrap();
        let mut found = vec![usize::MAX; truth.len()];
        for (i, c) in h.level(3).enumerate() {
            for &m in &c.members {
                found[m] = i;
            }
        }
        assert!(found.iter().all(|&f| f != usize::MAX), "level 3 covers every node");
        let ari = adjusted_rand(&truth, &found);
        assert!(ari >= 0.9, "seed {seed}: adjusted Rand {ari}");
    }
}

/// Weights 1/(1 - cos) of tightly clustered but structureless vectors: a
/// complete graph whose weights vary by a factor of several.
fn noisy_clique(n: usize, seed: u64) -> SemanticGraph {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let dim = 20;
    let points: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let mut v = vec![1.0; dim];
            for x in v.iter_mut().skip(1) {
                *x = 1.0 + 0.05 * (r.random::<f64>() - 0.5);
            }
            v
        })
        .collect();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let dot: f64 = points[a].iter().zip(&points[b]).map(|(x, y)| x * y).sum();
            let na: f64 = points[a].iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb: f64 = points[b].iter().map(|x| x * x).sum::<f64>().sqrt();
            edges.push((a, b, semno::semgraph::edge_weight(dot / (na * nb))));
        }
    }
    SemanticGraph {
        nodes: (0..n).map(|i| format!("w{i}")).collect(),
        edges,
        theta: 0.6,
    }
}

#[test]
fn structureless_cluster_is_not_fragmented() {
    // The top level is a plain Louvain pass; the floor governs the levels
    // below it.
    let g = noisy_clique(50, 9);
    let h = recursive_cluster(&g, 1, &HierarchyConfig::default()).unwrap();
    let top: Vec<_> = h.level(1).map(|c| c.members.clone()).collect();
    let bottom: Vec<_> = h.level(3).map(|c| c.members.clone()).collect();
    assert_eq!(top, bottom);

    // A near-zero floor keeps splitting on weight noise alone.
    let eager = HierarchyConfig {
        q_gain_floor: 1e-4,
        ..HierarchyConfig::default()
    };
    let h = recursive_cluster(&g, 1, &eager).unwrap();
    assert!(h.level(3).count() > h.level(1).count());
}
