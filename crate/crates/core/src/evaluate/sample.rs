// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};

use crate::artifact::{escape, next_line, parse_field, unescape, Artifact};
use crate::corpusio::ClassLabel;
use crate::filter::NoiseVerdict;
use crate::seed::{derive_seed, rng};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleEntry {
    pub class: ClassLabel,
    pub doc_id: String,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleManifest {
    pub entries: Vec<SampleEntry>,
    /// Classes that had fewer sentences than requested, or needed the
    /// uniform fallback.
    pub warnings: Vec<String>,
}

/// Draws at this many times `per_class` before topping up uniformly.
const MAX_DRAW_FACTOR: usize = 1000;

/// Picks `per_class` sentences per class by sampling a normal distribution
/// over the class's sentence positions (mean at the midpoint, standard
/// deviation a sixth of the range), rounding, clamping and rejecting
/// repeats.
pub fn sample_for_annotation(verdicts: &[NoiseVerdict], per_class: usize, seed: u64) -> SampleManifest {
    let mut by_class: BTreeMap<&ClassLabel, Vec<&NoiseVerdict>> = BTreeMap::new();
    for v in verdicts {
        by_class.entry(&v.class).or_default().push(v);
    }
    let mut entries = Vec::new();
    let mut warnings = Vec::new();
    for (class, sentences) in by_class {
        let n = sentences.len();
        let picked: BTreeSet<usize> = if n <= per_class {
            if n < per_class {
                warnings.push(format!("{class}: only {n} sentences, all sampled"));
            }
            (0..n).collect()
        } else {
            let mut r = rng(derive_seed(seed, &[b"sample", class.as_str().as_bytes()]));
            let normal = Normal::new((n - 1) as f64 / 2.0, n as f64 / 6.0).expect("positive std");
            let mut picked = BTreeSet::new();
            let mut draws = 0;
            while picked.len() < per_class && draws < MAX_DRAW_FACTOR * per_class {
                let x: f64 = normal.sample(&mut r);
                picked.insert(x.round().clamp(0.0, (n - 1) as f64) as usize);
                draws += 1;
            }
            if picked.len() < per_class {
                warnings.push(format!("{class}: topped up uniformly after {draws} draws"));
                let mut rest: Vec<usize> = (0..n).filter(|i| !picked.contains(i)).collect();
                rest.shuffle(&mut r);
                picked.extend(rest.into_iter().take(per_class - picked.len()));
            }
            picked
        };
        entries.extend(picked.into_iter().map(|i| SampleEntry {
            class: class.clone(),
            doc_id: sentences[i].doc_id.clone(),
            index: sentences[i].index,
        }));
    }
    SampleManifest { entries, warnings }
}

impl Artifact for SampleManifest {
    const KIND: &'static str = "sample";

    fn write_body(&self, w: &mut dyn Write) -> io::Result<()> {
        for e in &self.entries {
            writeln!(w, "{}\t{}\t{}", escape(&e.doc_id), e.index, e.class)?;
        }
        Ok(())
    }

    fn read_body(lines: &mut dyn Iterator<Item = io::Result<String>>) -> Result<Self, String> {
        let mut entries = Vec::new();
        while let Some(line) = next_line(lines)? {
            let f: Vec<&str> = line.split('\t').collect();
            let [doc, index, class] = f[..] else {
                return Err(format!("bad sample line `{line}`"));
            };
            entries.push(SampleEntry {
                class: ClassLabel::new(class).map_err(|e| e.to_string())?,
                doc_id: unescape(doc),
                index: parse_field(index, "sentence index")?,
            });
        }
        Ok(SampleManifest {
            entries,
            warnings: Vec::new(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::CommunityEncodedVector;
    use proptest::prelude::*;

    fn verdicts(class: &str, n: usize) -> Vec<NoiseVerdict> {
        (0..n)
            .map(|i| NoiseVerdict {
                doc_id: format!("d{}", i / 3),
                index: i % 3,
                class: ClassLabel::new(class).unwrap(),
                is_noise: false,
                vector: CommunityEncodedVector(vec![1]),
                matched_terms: Vec::new(),
            })
            .collect()
    }

    #[test]
    fn exact_size_takes_everything() {
        let m = sample_for_annotation(&verdicts("X", 100), 100, 1);
        assert_eq!(m.entries.len(), 100);
        assert!(m.warnings.is_empty());
    }

    #[test]
    fn small_class_warns() {
        let m = sample_for_annotation(&verdicts("X", 10), 100, 1);
        assert_eq!(m.entries.len(), 10);
        assert_eq!(m.warnings.len(), 1);
    }

    #[test]
    fn same_seed_same_manifest() {
        let v = [verdicts("X", 500), verdicts("Y", 300)].concat();
        assert_eq!(sample_for_annotation(&v, 50, 4), sample_for_annotation(&v, 50, 4));
        assert_ne!(sample_for_annotation(&v, 50, 4), sample_for_annotation(&v, 50, 5));
    }

    #[test]
    fn draws_concentrate_in_the_middle() {
        let v = verdicts("X", 10_000);
        let m = sample_for_annotation(&v, 100, 2);
        let positions: Vec<usize> = m.entries.iter().map(|e| e.index + 3 * e.doc_id[1..].parse::<usize>().unwrap()).collect();
        let middle = positions.iter().filter(|&&p| (3333..6667).contains(&p)).count();
        assert!(middle > 55, "{middle} of 100 in the middle third");
    }

    #[test]
    fn manifest_round_trip() {
        let m = sample_for_annotation(&verdicts("X", 20), 5, 1);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.tsv");
        crate::artifact::persist(&m, &crate::artifact::Header::new("l"), &p).unwrap();
        let (_, back) = crate::artifact::load::<SampleManifest>(&p).unwrap();
        assert_eq!(back.entries, m.entries);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn unique_and_in_range(n in 101usize..3000, per in 1usize..100, seed in 0u64..1000) {
            let v = verdicts("X", n);
            let m = sample_for_annotation(&v, per, seed);
            prop_assert_eq!(m.entries.len(), per);
            let mut keys: Vec<(String, usize)> = m.entries.iter().map(|e| (e.doc_id.clone(), e.index)).collect();
            keys.sort();
            keys.dedup();
            prop_assert_eq!(keys.len(), per);
        }
    }
}
