// SPDX-License-Identifier: Apache-2.0

//! Louvain modularity maximization on weighted undirected graphs.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::seed::rng;

/// Symmetric weight matrix stored as adjacency lists. `self_loops[a]` is the
/// diagonal entry `W_aa`; off-diagonal entries appear once in each endpoint's
/// list.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightedGraph {
    adj: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
}

impl WeightedGraph {
    pub fn new(n: usize) -> Self {
        WeightedGraph {
            adj: vec![Vec::new(); n],
            self_loops: vec![0.0; n],
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut g = WeightedGraph::new(n);
        for &(a, b, w) in edges {
            g.add_edge(a, b, w);
        }
        g
    }

    pub fn add_edge(&mut self, a: usize, b: usize, w: f64) {
        if a == b {
            self.self_loops[a] += w;
        } else {
            self.adj[a].push((b, w));
            self.adj[b].push((a, w));
        }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn neighbors(&self, a: usize) -> &[(usize, f64)] {
        &self.adj[a]
    }

    pub fn self_loop(&self, a: usize) -> f64 {
        self.self_loops[a]
    }

    /// `k_a = Σ_b W_ab`, diagonal included.
    pub fn degree(&self, a: usize) -> f64 {
        self.self_loops[a] + self.adj[a].iter().map(|&(_, w)| w).sum::<f64>()
    }

    /// `2m = Σ_a k_a`.
    pub fn total_weight(&self) -> f64 {
        (0..self.len()).map(|a| self.degree(a)).sum()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Subgraph on `nodes`; node `nodes[i]` becomes node `i`.
    pub fn induced(&self, nodes: &[usize]) -> WeightedGraph {
        let mut local = vec![usize::MAX; self.len()];
        for (i, &v) in nodes.iter().enumerate() {
            local[v] = i;
        }
        let mut g = WeightedGraph::new(nodes.len());
        for (i, &v) in nodes.iter().enumerate() {
            g.self_loops[i] = self.self_loops[v];
            for &(u, w) in &self.adj[v] {
                let j = local[u];
                if j != usize::MAX {
                    g.adj[i].push((j, w));
                }
            }
        }
        g
    }
}

/// Modularity of a partition given as a community id per node.
pub fn modularity(g: &WeightedGraph, membership: &[usize]) -> f64 {
    assert_eq!(membership.len(), g.len(), "partition must cover every node");
    let two_m = g.total_weight();
    if two_m <= 0.0 {
        return 0.0;
    }
    let k = membership.iter().copied().max().map_or(0, |m| m + 1);
    let mut internal = vec![0.0; k];
    let mut total = vec![0.0; k];
    for a in 0..g.len() {
        let c = membership[a];
        total[c] += g.degree(a);
        internal[c] += g.self_loops[a];
        for &(b, w) in &g.adj[a] {
            if membership[b] == c {
                internal[c] += w;
            }
        }
    }
    internal
        .iter()
        .zip(&total)
        .map(|(&i, &t)| i / two_m - (t / two_m) * (t / two_m))
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LouvainResult {
    /// Community per node, numbered by first appearance.
    pub membership: Vec<usize>,
    pub communities: usize,
    pub modularity: f64,
    /// Modularity after each local-moving phase.
    pub phase_q: Vec<f64>,
}

impl LouvainResult {
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.communities];
        for (v, &c) in self.membership.iter().enumerate() {
            groups[c].push(v);
        }
        groups
    }
}

const MAX_SWEEPS: usize = 10_000;

/// Local moving plus aggregation until no node move improves modularity,
/// then repeated passes that restart local moving on the original nodes from
/// the converged partition, until a pass no longer raises modularity. Node
/// visit order is shuffled from `seed` once per level.
pub fn louvain(g: &WeightedGraph, seed: u64) -> LouvainResult {
    let n = g.len();
    let mut membership: Vec<usize> = (0..n).collect();
    let mut phase_q = Vec::new();
    if n > 0 && g.total_weight() > 0.0 {
        let mut rng = rng(seed);
        let mut q = modularity(g, &membership);
        for _ in 0..MAX_SWEEPS {
            let before = phase_q.len();
            let next = multilevel(g, &membership, &mut rng, &mut phase_q);
            let next_q = modularity(g, &next);
            if next_q <= q + 1e-12 * q.abs().max(1.0) {
                phase_q.truncate(before.max(1));
                break;
            }
            membership = next;
            q = next_q;
        }
    }
    let (membership, communities) = renumber(&membership);
    let q = modularity(g, &membership);
    if phase_q.is_empty() {
        phase_q.push(q);
    }
    LouvainResult {
        membership,
        communities,
        modularity: q,
        phase_q,
    }
}

/// One Louvain pass whose first local-moving phase starts from `start`.
fn multilevel(g: &WeightedGraph, start: &[usize], rng: &mut ChaCha8Rng, phase_q: &mut Vec<f64>) -> Vec<usize> {
    let mut membership = start.to_vec();
    let mut level = g.clone();
    let mut init = start.to_vec();
    loop {
        let mut order: Vec<usize> = (0..level.len()).collect();
        order.shuffle(rng);
        let Some(local) = local_moving(&level, &order, init) else {
            break;
        };
        let (local, k) = renumber(&local);
        if level.len() == g.len() {
            membership = local.clone();
        } else {
            for m in membership.iter_mut() {
                *m = local[*m];
            }
        }
        phase_q.push(modularity(g, &membership));
        if k == level.len() {
            break;
        }
        level = aggregate(&level, &local, k);
        init = (0..k).collect();
    }
    membership
}

/// Returns the improved assignment, or `None` when no node moved.
fn local_moving(g: &WeightedGraph, order: &[usize], start: Vec<usize>) -> Option<Vec<usize>> {
    let n = g.len();
    let two_m = g.total_weight();
    let k: Vec<f64> = (0..n).map(|a| g.degree(a)).collect();
    let mut comm = start;
    let mut tot = vec![0.0; n];
    for (a, &c) in comm.iter().enumerate() {
        tot[c] += k[a];
    }
    let mut link = vec![0.0f64; n];
    let mut seen = vec![false; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut moved_any = false;

    for _ in 0..MAX_SWEEPS {
        let mut moved = false;
        for &i in order {
            let ci = comm[i];
            for &c in &touched {
                link[c] = 0.0;
                seen[c] = false;
            }
            touched.clear();
            for &(j, w) in &g.adj[i] {
                let cj = comm[j];
                if !seen[cj] {
                    seen[cj] = true;
                    touched.push(cj);
                }
                link[cj] += w;
            }
            tot[ci] -= k[i];
            let gain = |c: usize| link[c] - tot[c] * k[i] / two_m;
            let mut best = ci;
            let mut best_gain = gain(ci);
            let eps = 1e-12 * k[i].max(f64::MIN_POSITIVE);
            for &c in &touched {
                let gc = gain(c);
                if gc > best_gain + eps {
                    best = c;
                    best_gain = gc;
                }
            }
            tot[best] += k[i];
            if best != ci {
                comm[i] = best;
                moved = true;
                moved_any = true;
            }
        }
        if !moved {
            break;
        }
    }
    moved_any.then_some(comm)
}

fn renumber(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map: Vec<usize> = vec![usize::MAX; labels.iter().copied().max().map_or(0, |m| m + 1)];
    let mut next = 0;
    let out = labels
        .iter()
        .map(|&l| {
            if map[l] == usize::MAX {
                map[l] = next;
                next += 1;
            }
            map[l]
        })
        .collect();
    (out, next)
}

fn aggregate(g: &WeightedGraph, membership: &[usize], k: usize) -> WeightedGraph {
    let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); k];
    let mut self_loops = vec![0.0; k];
    for a in 0..g.len() {
        let ca = membership[a];
        self_loops[ca] += g.self_loops[a];
        for &(b, w) in &g.adj[a] {
            let cb = membership[b];
            if ca == cb {
                self_loops[ca] += w;
            } else {
                *rows[ca].entry(cb).or_default() += w;
            }
        }
    }
    WeightedGraph {
        adj: rows.into_iter().map(|r| r.into_iter().collect()).collect(),
        self_loops,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cliques() -> WeightedGraph {
        let mut edges = Vec::new();
        for base in [0, 4] {
            for a in base..base + 4 {
                for b in a + 1..base + 4 {
                    edges.push((a, b, 3.0));
                }
            }
        }
        edges.push((3, 4, 3.0));
        WeightedGraph::from_edges(8, &edges)
    }

    #[test]
    fn one_community_has_zero_modularity() {
        let g = two_cliques();
        assert!(modularity(&g, &[0; 8]).abs() < 1e-15);
    }

    #[test]
    fn disconnected_triangles_by_hand() {
        // Two disjoint triangles of weight 1: each community has internal
        // ordered weight 6 of 2m = 12 and degree share 1/2.
        let g = WeightedGraph::from_edges(
            6,
            &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0)],
        );
        let q = modularity(&g, &[0, 0, 0, 1, 1, 1]);
        assert!((q - 0.5).abs() < 1e-15);
    }

    #[test]
    fn singletons_are_negative() {
        let g = two_cliques();
        assert!(modularity(&g, &(0..8).collect::<Vec<_>>()) < 0.0);
    }

    #[test]
    fn zero_weight_graph() {
        let g = WeightedGraph::new(3);
        assert_eq!(modularity(&g, &[0, 1, 2]), 0.0);
        let r = louvain(&g, 1);
        assert_eq!(r.membership, [0, 1, 2]);
        assert_eq!(r.modularity, 0.0);
    }

    #[test]
    fn cliques_are_found() {
        let g = two_cliques();
        for seed in 0..20 {
            let r = louvain(&g, seed);
            assert_eq!(r.membership, [0, 0, 0, 0, 1, 1, 1, 1], "seed {seed}");
            assert!(r.phase_q.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        }
    }

    #[test]
    fn triangle_is_one_community() {
        let g = WeightedGraph::from_edges(3, &[(0, 1, 2.0), (1, 2, 2.0), (0, 2, 2.0)]);
        let r = louvain(&g, 3);
        assert_eq!(r.communities, 1);
    }

    #[test]
    fn single_node() {
        let r = louvain(&WeightedGraph::new(1), 0);
        assert_eq!(r.membership, [0]);
        assert_eq!(r.modularity, 0.0);
    }

    #[test]
    fn induced_keeps_internal_edges_only() {
        let g = two_cliques();
        let sub = g.induced(&[2, 3, 4]);
        assert_eq!(sub.edge_count(), 2);
        assert_eq!(sub.degree(1), 6.0);
    }

    #[test]
    fn aggregation_preserves_modularity() {
        let g = two_cliques();
        let part = vec![0, 0, 1, 1, 2, 2, 2, 3];
        let agg = aggregate(&g, &part, 4);
        assert!((agg.total_weight() - g.total_weight()).abs() < 1e-12);
        let q_agg = modularity(&agg, &[0, 0, 1, 1]);
        let q = modularity(&g, &[0, 0, 0, 0, 1, 1, 1, 1]);
        assert!((q - q_agg).abs() < 1e-12);
    }

    #[test]
    fn no_single_node_move_improves_the_result() {
        use rand::Rng;
        let mut r = rng(11);
        for seed in 0..200 {
            let n = r.random_range(3..=9);
            let mut edges = Vec::new();
            for a in 0..n {
                for b in a + 1..n {
                    if r.random_bool(0.5) {
                        edges.push((a, b, r.random_range(0.1..2.0)));
                    }
                }
            }
            if edges.is_empty() {
                continue;
            }
            let g = WeightedGraph::from_edges(n, &edges);
            let res = louvain(&g, seed);
            for v in 0..n {
                for &(u, _) in &g.adj[v] {
                    let mut moved = res.membership.clone();
                    moved[v] = res.membership[u];
                    assert!(modularity(&g, &moved) <= res.modularity + 1e-9, "seed {seed}, node {v}");
                }
            }
        }
    }
}
