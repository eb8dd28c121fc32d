// SPDX-License-Identifier: Apache-2.0

//! Recursive Louvain: each community is re-clustered on its induced
//! subgraph down to a fixed depth, and the deepest communities that are
//! large enough are kept.

use std::cmp::Ordering;
use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;

use super::louvain::{louvain, WeightedGraph};
use super::SemanticGraph;
use crate::artifact::{escape, next_line, parse_field, unescape, Artifact};
use crate::error::{Error, Result};
use crate::infuse::is_anchor;
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HierarchyConfig {
    pub max_depth: usize,
    pub min_members: usize,
    /// A branch stops splitting when re-clustering scores below this.
    pub q_gain_floor: f64,
}

impl Default for HierarchyConfig {
    fn default() -> Self {
        HierarchyConfig {
            max_depth: 3,
            min_members: 3,
            q_gain_floor: 0.3,
        }
    }
}

impl HierarchyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 {
            return Err(Error::InvalidParameter("graph.max_depth must be positive".into()));
        }
        if !self.q_gain_floor.is_finite() {
            return Err(Error::InvalidParameter("graph.q_gain_floor must be finite".into()));
        }
        Ok(())
    }
}

/// Hierarchy address, 1-based per level, printed as `1-24-3`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CommunityPath(pub Vec<usize>);

impl fmt::Display for CommunityPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("-")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for CommunityPath {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split('-')
            .map(|p| match p.parse::<usize>() {
                Ok(v) if v > 0 => Ok(v),
                _ => Err(format!("bad path `{s}`")),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(CommunityPath)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Community {
    pub path: CommunityPath,
    /// Graph node ids, ascending.
    pub members: Vec<usize>,
    /// Modularity of the split that produced this community's children;
    /// `None` when it was not split.
    pub split_q: Option<f64>,
}

impl Community {
    pub fn level(&self) -> usize {
        self.path.0.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommunityHierarchy {
    pub nodes: Vec<String>,
    pub config: HierarchyConfig,
    pub seed: u64,
    pub root_q: f64,
    /// Every community at every level, in path order.
    pub communities: Vec<Community>,
}

impl CommunityHierarchy {
    pub fn level(&self, level: usize) -> impl Iterator<Item = &Community> {
        self.communities.iter().filter(move |c| c.level() == level)
    }

    /// Deepest-level communities with at least `min_members` members.
    pub fn retained(&self) -> RetainedCommunities {
        let communities = self
            .level(self.config.max_depth)
            .filter(|c| c.members.len() >= self.config.min_members)
            .map(|c| NamedCommunity {
                path: c.path.clone(),
                members: c.members.iter().map(|&m| self.nodes[m].clone()).collect(),
            })
            .collect();
        RetainedCommunities { communities }
    }
}

fn order_groups(mut groups: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    for g in &mut groups {
        g.sort_unstable();
    }
    groups.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a[0].cmp(&b[0])));
    groups
}

pub fn recursive_cluster(
    graph: &SemanticGraph,
    seed: u64,
    config: &HierarchyConfig,
) -> Result<CommunityHierarchy> {
    config.validate()?;
    let wg = graph.weighted();
    let root = louvain(&wg, derive_seed(seed, &[b"louvain", b""]));
    let top = order_groups(root.groups());
    let communities: Vec<Community> = top
        .into_par_iter()
        .enumerate()
        .map(|(i, members)| descend(&wg, CommunityPath(vec![i + 1]), members, seed, config, true))
        .collect::<Vec<_>>()
        .concat();
    Ok(CommunityHierarchy {
        nodes: graph.nodes.clone(),
        config: *config,
        seed,
        root_q: root.modularity,
        communities,
    })
}

/// Returns `path`'s community followed by its whole subtree in path order.
fn descend(
    g: &WeightedGraph,
    path: CommunityPath,
    members: Vec<usize>,
    seed: u64,
    config: &HierarchyConfig,
    may_split: bool,
) -> Vec<Community> {
    let depth = path.0.len();
    if depth >= config.max_depth {
        return vec![Community { path, members, split_q: None }];
    }
    let split = if may_split && members.len() >= 2 {
        let sub = g.induced(&members);
        let r = louvain(&sub, derive_seed(seed, &[b"louvain", path.to_string().as_bytes()]));
        (r.communities > 1 && r.modularity >= config.q_gain_floor).then(|| {
            let groups = r
                .groups()
                .into_iter()
                .map(|grp| grp.into_iter().map(|i| members[i]).collect())
                .collect();
            (r.modularity, order_groups(groups))
        })
    } else {
        None
    };
    let (split_q, children, may_split) = match split {
        Some((q, groups)) => (Some(q), groups, true),
        None => (None, vec![members.clone()], false),
    };
    let subtree: Vec<Community> = children
        .into_par_iter()
        .enumerate()
        .map(|(i, m)| {
            let mut p = path.0.clone();
            p.push(i + 1);
            descend(g, CommunityPath(p), m, seed, config, may_split)
        })
        .collect::<Vec<_>>()
        .concat();
    let mut out = Vec::with_capacity(subtree.len() + 1);
    out.push(Community { path, members, split_q });
    out.extend(subtree);
    out
}

/// A retained community with member names, as persisted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedCommunity {
    pub path: CommunityPath,
    pub members: Vec<String>,
}

impl NamedCommunity {
    pub fn is_anchored(&self) -> bool {
        self.members.iter().any(|m| is_anchor(m))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RetainedCommunities {
    pub communities: Vec<NamedCommunity>,
}

impl Artifact for RetainedCommunities {
    const KIND: &'static str = "hierarchy";

    fn write_body(&self, w: &mut dyn Write) -> io::Result<()> {
        for c in &self.communities {
            let members: Vec<String> = c.members.iter().map(|m| escape(m)).collect();
            writeln!(
                w,
                "{}\t{}\t{}",
                c.path,
                u8::from(c.is_anchored()),
                members.join(",")
            )?;
        }
        Ok(())
    }

    fn read_body(lines: &mut dyn Iterator<Item = io::Result<String>>) -> Result<Self, String> {
        let mut communities = Vec::new();
        while let Some(line) = next_line(lines)? {
            let f: Vec<&str> = line.split('\t').collect();
            let [path, anchored, members] = f[..] else {
                return Err(format!("bad community line `{line}`"));
            };
            let c = NamedCommunity {
                path: path.parse()?,
                members: members.split(',').map(unescape).collect(),
            };
            let flag: u8 = parse_field(anchored, "anchored flag")?;
            if flag > 1 || (flag == 1) != c.is_anchored() {
                return Err(format!("anchored flag disagrees with members at {path}"));
            }
            communities.push(c);
        }
        Ok(RetainedCommunities { communities })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnchoredCommunity {
    pub path: CommunityPath,
    pub anchors: Vec<String>,
    /// Members that are not anchors.
    pub concepts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnchoredCommunitySet {
    pub communities: Vec<AnchoredCommunity>,
    /// Number of retained communities the set was selected from.
    pub retained: usize,
}

impl AnchoredCommunitySet {
    pub fn len(&self) -> usize {
        self.communities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.communities.is_empty()
    }
}

fn path_order(a: &CommunityPath, b: &CommunityPath) -> Ordering {
    a.0.cmp(&b.0)
}

/// Keeps the retained communities that contain at least one anchor.
pub fn select_anchored(retained: &RetainedCommunities) -> Result<AnchoredCommunitySet> {
    let mut communities: Vec<AnchoredCommunity> = retained
        .communities
        .iter()
        .filter(|c| c.is_anchored())
        .map(|c| {
            let (anchors, concepts): (Vec<String>, Vec<String>) =
                c.members.iter().cloned().partition(|m| is_anchor(m));
            AnchoredCommunity {
                path: c.path.clone(),
                anchors,
                concepts,
            }
        })
        .collect();
    communities.sort_by(|a, b| path_order(&a.path, &b.path));
    if communities.is_empty() {
        return Err(Error::NoAnchoredCommunities {
            retained: retained.communities.len(),
        });
    }
    Ok(AnchoredCommunitySet {
        communities,
        retained: retained.communities.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(names: &[&str], edges: &[(usize, usize, f64)]) -> SemanticGraph {
        SemanticGraph {
            nodes: names.iter().map(|s| s.to_string()).collect(),
            edges: edges.to_vec(),
            theta: 0.6,
        }
    }

    fn clique(base: usize, size: usize, w: f64) -> Vec<(usize, usize, f64)> {
        let mut e = Vec::new();
        for a in base..base + size {
            for b in a + 1..base + size {
                e.push((a, b, w));
            }
        }
        e
    }

    #[test]
    fn path_display_and_parse() {
        let p: CommunityPath = "1-24-3".parse().unwrap();
        assert_eq!(p.0, [1, 24, 3]);
        assert_eq!(p.to_string(), "1-24-3");
        assert!("1-0".parse::<CommunityPath>().is_err());
        assert!(CommunityPath(vec![1, 10]) > CommunityPath(vec![1, 9]));
    }

    #[test]
    fn single_clique_replicates_down() {
        let g = graph(&["a", "b", "c", "d"], &clique(0, 4, 2.0));
        let h = recursive_cluster(&g, 1, &HierarchyConfig::default()).unwrap();
        let paths: Vec<String> = h.communities.iter().map(|c| c.path.to_string()).collect();
        assert_eq!(paths, ["1", "1-1", "1-1-1"]);
        assert_eq!(h.retained().communities.len(), 1);
    }

    #[test]
    fn small_communities_dropped() {
        let mut e = clique(0, 4, 2.0);
        e.push((4, 5, 2.0));
        let g = graph(&["a", "b", "c", "d", "e", "f"], &e);
        let h = recursive_cluster(&g, 1, &HierarchyConfig::default()).unwrap();
        let r = h.retained();
        assert_eq!(r.communities.len(), 1);
        assert_eq!(r.communities[0].members, ["a", "b", "c", "d"]);
        assert_eq!(h.level(3).count(), 2);
    }

    #[test]
    fn children_partition_parents() {
        let mut e = Vec::new();
        for b in 0..6 {
            e.extend(clique(b * 4, 4, 5.0));
        }
        for b in 0..5 {
            e.push((b * 4, b * 4 + 4, 0.5));
        }
        let names: Vec<String> = (0..24).map(|i| format!("w{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let h = recursive_cluster(&graph(&refs, &e), 9, &HierarchyConfig::default()).unwrap();
        for parent in &h.communities {
            let mut union: Vec<usize> = h
                .communities
                .iter()
                .filter(|c| c.level() == parent.level() + 1 && c.path.0.starts_with(&parent.path.0))
                .flat_map(|c| c.members.iter().copied())
                .collect();
            if parent.level() < 3 {
                union.sort_unstable();
                assert_eq!(union, parent.members);
            }
        }
        let mut all: Vec<usize> = h.level(1).flat_map(|c| c.members.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..24).collect::<Vec<_>>());
    }

    #[test]
    fn anchored_selection() {
        let r = RetainedCommunities {
            communities: vec![
                NamedCommunity {
                    path: "1-24-4".parse().unwrap(),
                    members: vec![
                        "A_Fuel-System".into(),
                        "A_Fuel-Propulsion-System".into(),
                        "fuel".into(),
                        "tank".into(),
                    ],
                },
                NamedCommunity {
                    path: "1-24-3".parse().unwrap(),
                    members: vec!["blowing".into(), "cold".into(), "heater".into()],
                },
            ],
        };
        let a = select_anchored(&r).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a.retained, 2);
        assert_eq!(a.communities[0].anchors.len(), 2);
        assert_eq!(a.communities[0].concepts, ["fuel", "tank"]);
    }

    #[test]
    fn no_anchored_is_an_error() {
        let r = RetainedCommunities::default();
        assert!(matches!(
            select_anchored(&r),
            Err(Error::NoAnchoredCommunities { retained: 0 })
        ));
    }

    #[test]
    fn retained_round_trip() {
        let r = RetainedCommunities {
            communities: vec![NamedCommunity {
                path: CommunityPath(vec![1, 2, 3]),
                members: vec!["A_x".into(), "brake".into(), "pedal".into()],
            }],
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.tsv");
        crate::artifact::persist(&r, &crate::artifact::Header::new("l"), &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.ends_with("1-2-3\t1\tA_x,brake,pedal\n"));
        let (_, back) = crate::artifact::load::<RetainedCommunities>(&p).unwrap();
        assert_eq!(back, r);
    }
}
