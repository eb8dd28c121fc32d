// SPDX-License-Identifier: Apache-2.0

//! Word-similarity graph, recursive Louvain clustering and anchored
//! community selection.

mod hierarchy;
mod louvain;

use std::io::{self, Write};
use std::path::Path;

use rayon::prelude::*;

pub use hierarchy::{
    recursive_cluster, select_anchored, AnchoredCommunity, AnchoredCommunitySet, Community,
    CommunityHierarchy, CommunityPath, HierarchyConfig, NamedCommunity, RetainedCommunities,
};
pub use louvain::{louvain, modularity, LouvainResult, WeightedGraph};

use crate::artifact::{self, escape, next_line, parse_field, unescape, Artifact, Header};
use crate::embed::EmbeddingModel;
use crate::error::{Error, Result};

/// Cosines are capped here so duplicate vectors still get a finite weight.
pub const COSINE_CAP: f64 = 1.0 - 1e-6;

/// `1 / (1 - cos)` with the cosine capped at [`COSINE_CAP`].
pub fn edge_weight(cosine: f64) -> f64 {
    1.0 / (1.0 - cosine.min(COSINE_CAP))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemanticGraph {
    pub nodes: Vec<String>,
    /// `(a, b, weight)` with `a < b`, sorted.
    pub edges: Vec<(usize, usize, f64)>,
    pub theta: f64,
}

impl SemanticGraph {
    pub fn weighted(&self) -> WeightedGraph {
        WeightedGraph::from_edges(self.nodes.len(), &self.edges)
    }
}

pub fn validate_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "graph.theta must lie in (0, 1), got {theta}"
        )))
    }
}

/// Links every pair of words whose cosine similarity exceeds `theta`.
/// All pairs are compared; zero vectors get no edges.
pub fn build_graph(model: &EmbeddingModel, theta: f64) -> Result<SemanticGraph> {
    validate_theta(theta)?;
    if model.is_empty() {
        return Err(Error::Empty("embedding model has no words".into()));
    }
    let n = model.len();
    let norms: Vec<f64> = (0..n)
        .map(|i| {
            model
                .vector(i)
                .iter()
                .map(|&x| x as f64 * x as f64)
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let edges: Vec<(usize, usize, f64)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|a| {
            let va = model.vector(a);
            let na = norms[a];
            let norms = &norms;
            (a + 1..n).filter_map(move |b| {
                let nb = norms[b];
                if na == 0.0 || nb == 0.0 {
                    return None;
                }
                let dot: f64 = va
                    .iter()
                    .zip(model.vector(b))
                    .map(|(&x, &y)| x as f64 * y as f64)
                    .sum();
                let cos = dot / (na * nb);
                (cos > theta).then(|| (a, b, edge_weight(cos)))
            })
        })
        .collect();
    Ok(SemanticGraph {
        nodes: model.words.clone(),
        edges,
        theta,
    })
}

impl Artifact for SemanticGraph {
    const KIND: &'static str = "graph";

    fn write_body(&self, w: &mut dyn Write) -> io::Result<()> {
        writeln!(w, "{} {} {}", self.nodes.len(), self.edges.len(), self.theta)?;
        for node in &self.nodes {
            writeln!(w, "{}", escape(node))?;
        }
        for &(a, b, weight) in &self.edges {
            writeln!(
                w,
                "{}\t{}\t{weight}",
                escape(&self.nodes[a]),
                escape(&self.nodes[b])
            )?;
        }
        Ok(())
    }

    fn read_body(lines: &mut dyn Iterator<Item = io::Result<String>>) -> Result<Self, String> {
        let first = next_line(lines)?.ok_or("missing size line")?;
        let parts: Vec<&str> = first.split(' ').collect();
        let [n, m, theta] = parts[..] else {
            return Err(format!("bad size line `{first}`"));
        };
        let n: usize = parse_field(n, "node count")?;
        let m: usize = parse_field(m, "edge count")?;
        let theta: f64 = parse_field(theta, "theta")?;
        let mut nodes = Vec::with_capacity(n);
        let mut index = std::collections::HashMap::with_capacity(n);
        for i in 0..n {
            let line = next_line(lines)?.ok_or("truncated node list")?;
            let word = unescape(&line);
            if index.insert(word.clone(), i).is_some() {
                return Err(format!("duplicate node `{word}`"));
            }
            nodes.push(word);
        }
        let mut edges = Vec::with_capacity(m);
        while let Some(line) = next_line(lines)? {
            let f: Vec<&str> = line.split('\t').collect();
            let [a, b, w] = f[..] else {
                return Err(format!("bad edge line `{line}`"));
            };
            let lookup = |s: &str| {
                index
                    .get(&unescape(s))
                    .copied()
                    .ok_or_else(|| format!("edge names unknown node `{s}`"))
            };
            let (a, b) = (lookup(a)?, lookup(b)?);
            let w: f64 = parse_field(w, "edge weight")?;
            edges.push((a.min(b), a.max(b), w));
        }
        if edges.len() != m {
            return Err(format!("expected {m} edges, found {}", edges.len()));
        }
        Ok(SemanticGraph { nodes, edges, theta })
    }
}

pub fn persist_graph(graph: &SemanticGraph, header: Header, path: &Path) -> Result<()> {
    artifact::persist(graph, &header.with("theta", graph.theta), path)
}
