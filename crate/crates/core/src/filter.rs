// SPDX-License-Identifier: Apache-2.0

//! Sentence-level noise verdicts from anchored communities.
//!
//! Every sentence gets a count vector with one coordinate per anchored
//! community: each term adds one to every community whose concept set
//! contains it. A sentence whose vector is all zeros is noise.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::artifact::{escape, next_line, parse_field, unescape, write_atomic, Artifact};
use crate::cleanse::{CleanCorpus, CleanSentence};
use crate::corpusio::ClassLabel;
use crate::error::{Error, Result};
use crate::semgraph::{AnchoredCommunitySet, CommunityPath};

/// Term to community-coordinate lookup built once per anchored set.
#[derive(Debug, Clone)]
pub struct ConceptIndex {
    terms: HashMap<String, Vec<usize>>,
    paths: Vec<CommunityPath>,
}

impl ConceptIndex {
    pub fn new(set: &AnchoredCommunitySet) -> Self {
        let mut terms: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, c) in set.communities.iter().enumerate() {
            for t in &c.concepts {
                let slots = terms.entry(t.clone()).or_default();
                if slots.last() != Some(&i) {
                    slots.push(i);
                }
            }
        }
        ConceptIndex {
            terms,
            paths: set.communities.iter().map(|c| c.path.clone()).collect(),
        }
    }

    /// Number of coordinates.
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn communities_of(&self, term: &str) -> &[usize] {
        self.terms.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn path(&self, i: usize) -> &CommunityPath {
        &self.paths[i]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommunityEncodedVector(pub Vec<u32>);

impl CommunityEncodedVector {
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0)
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|&v| v as f64 * v as f64).sum::<f64>().sqrt()
    }
}

pub fn encode_sentence(tokens: &[String], index: &ConceptIndex) -> CommunityEncodedVector {
    encode_with_matches(tokens, index).0
}

/// Also reports which terms hit which communities.
pub fn encode_with_matches(
    tokens: &[String],
    index: &ConceptIndex,
) -> (CommunityEncodedVector, Vec<(String, CommunityPath)>) {
    let mut values = vec![0u32; index.len()];
    let mut matches = Vec::new();
    for t in tokens {
        for &i in index.communities_of(t) {
            values[i] += 1;
            matches.push((t.clone(), index.path(i).clone()));
        }
    }
    (CommunityEncodedVector(values), matches)
}

pub fn classify_sentence(v: &CommunityEncodedVector) -> bool {
    v.is_zero()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoiseVerdict {
    pub doc_id: String,
    pub index: usize,
    pub class: ClassLabel,
    pub is_noise: bool,
    pub vector: CommunityEncodedVector,
    /// Not persisted.
    pub matched_terms: Vec<(String, CommunityPath)>,
}

pub fn judge(sentence: &CleanSentence, index: &ConceptIndex) -> NoiseVerdict {
    let (vector, matched_terms) = encode_with_matches(&sentence.tokens, index);
    NoiseVerdict {
        doc_id: sentence.doc_id.clone(),
        index: sentence.index,
        class: sentence.class.clone(),
        is_noise: classify_sentence(&vector),
        vector,
        matched_terms,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Verdicts {
    pub verdicts: Vec<NoiseVerdict>,
}

impl Artifact for Verdicts {
    const KIND: &'static str = "verdicts";

    fn write_body(&self, w: &mut dyn Write) -> io::Result<()> {
        for v in &self.verdicts {
            let values: Vec<String> = v.vector.0.iter().map(u32::to_string).collect();
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}",
                escape(&v.doc_id),
                v.index,
                v.class,
                u8::from(v.is_noise),
                values.join(",")
            )?;
        }
        Ok(())
    }

    fn read_body(lines: &mut dyn Iterator<Item = io::Result<String>>) -> Result<Self, String> {
        let mut verdicts = Vec::new();
        while let Some(line) = next_line(lines)? {
            let f: Vec<&str> = line.split('\t').collect();
            let [doc_id, index, class, noise, values] = f[..] else {
                return Err(format!("bad verdict line `{line}`"));
            };
            let vector = CommunityEncodedVector(
                values
                    .split(',')
                    .filter(|s| !s.is_empty())
                    .map(|v| parse_field(v, "vector entry"))
                    .collect::<Result<_, _>>()?,
            );
            let is_noise = match noise {
                "1" => true,
                "0" => false,
                _ => return Err(format!("bad noise flag `{noise}`")),
            };
            if is_noise != vector.is_zero() {
                return Err(format!("noise flag disagrees with vector in `{line}`"));
            }
            verdicts.push(NoiseVerdict {
                doc_id: unescape(doc_id),
                index: parse_field(index, "sentence index")?,
                class: ClassLabel::new(class).map_err(|e| e.to_string())?,
                is_noise,
                vector,
                matched_terms: Vec::new(),
            });
        }
        Ok(Verdicts { verdicts })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassSummary {
    pub class: ClassLabel,
    pub sentences: usize,
    pub noise: usize,
    pub documents: usize,
    /// Documents left with no sentence after filtering.
    pub empty_documents: usize,
}

impl ClassSummary {
    pub fn noise_pct(&self) -> f64 {
        if self.sentences == 0 {
            0.0
        } else {
            100.0 * self.noise as f64 / self.sentences as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterSummary {
    /// Ordered by class name.
    pub classes: Vec<ClassSummary>,
}

impl FilterSummary {
    pub fn empty_documents(&self) -> usize {
        self.classes.iter().map(|c| c.empty_documents).sum()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, |w| {
            let mut out = csv::Writer::from_writer(w);
            let io_err = |e: csv::Error| io::Error::other(e.to_string());
            out.write_record(["class", "sentences", "noise", "noise_pct", "documents", "empty_documents"])
                .map_err(io_err)?;
            for c in &self.classes {
                out.write_record([
                    c.class.to_string(),
                    c.sentences.to_string(),
                    c.noise.to_string(),
                    format!("{:.2}", c.noise_pct()),
                    c.documents.to_string(),
                    c.empty_documents.to_string(),
                ])
                .map_err(io_err)?;
            }
            out.flush()
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput {
    pub verdicts: Verdicts,
    /// Non-noise sentences, corpus order preserved.
    pub filtered: CleanCorpus,
    pub summary: FilterSummary,
}

pub fn filter_corpus(corpus: &CleanCorpus, set: &AnchoredCommunitySet) -> Result<FilterOutput> {
    if set.is_empty() {
        return Err(Error::NoAnchoredCommunities {
            retained: set.retained,
        });
    }
    let index = ConceptIndex::new(set);
    let verdicts: Vec<NoiseVerdict> = corpus.sentences.par_iter().map(|s| judge(s, &index)).collect();
    let filtered = CleanCorpus {
        sentences: corpus
            .sentences
            .iter()
            .zip(&verdicts)
            .filter(|(_, v)| !v.is_noise)
            .map(|(s, _)| s.clone())
            .collect(),
    };
    Ok(FilterOutput {
        summary: summarize(&verdicts),
        verdicts: Verdicts { verdicts },
        filtered,
    })
}

pub fn summarize(verdicts: &[NoiseVerdict]) -> FilterSummary {
    // (class, doc) -> whether any sentence survived
    let mut docs: BTreeMap<(&ClassLabel, &str), bool> = BTreeMap::new();
    let mut classes: BTreeMap<&ClassLabel, ClassSummary> = BTreeMap::new();
    for v in verdicts {
        let c = classes.entry(&v.class).or_insert_with(|| ClassSummary {
            class: v.class.clone(),
            sentences: 0,
            noise: 0,
            documents: 0,
            empty_documents: 0,
        });
        c.sentences += 1;
        c.noise += usize::from(v.is_noise);
        *docs.entry((&v.class, v.doc_id.as_str())).or_default() |= !v.is_noise;
    }
    for ((class, _), kept) in docs {
        let c = classes.get_mut(class).expect("class seen");
        c.documents += 1;
        c.empty_documents += usize::from(!kept);
    }
    FilterSummary {
        classes: classes.into_values().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semgraph::AnchoredCommunity;

    fn set(communities: &[(&str, &[&str])]) -> AnchoredCommunitySet {
        AnchoredCommunitySet {
            communities: communities
                .iter()
                .map(|(p, words)| AnchoredCommunity {
                    path: p.parse().unwrap(),
                    anchors: vec!["A_Equipment".into()],
                    concepts: words.iter().map(|w| w.to_string()).collect(),
                })
                .collect(),
            retained: communities.len(),
        }
    }

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn sentence(doc: &str, index: usize, class: &str, text: &str) -> CleanSentence {
        CleanSentence {
            doc_id: doc.into(),
            index,
            class: ClassLabel::new(class).unwrap(),
            tokens: toks(text),
        }
    }

    #[test]
    fn heater_hits_its_community() {
        let idx = ConceptIndex::new(&set(&[
            ("1-24-3", &["blowing", "cold", "heater"]),
            ("1-24-4", &["fuel", "tank"]),
        ]));
        let v = encode_sentence(&toks("heater stopped blowing"), &idx);
        assert_eq!(v.0, [2, 0]);
        assert!(!classify_sentence(&v));
        let v = encode_sentence(&toks("colorado state police"), &idx);
        assert!(classify_sentence(&v));
        assert!(encode_sentence(&[], &idx).is_zero());
    }

    #[test]
    fn classify_examples() {
        assert!(classify_sentence(&CommunityEncodedVector(vec![0, 0, 0])));
        assert!(!classify_sentence(&CommunityEncodedVector(vec![0, 0, 1])));
        assert!(!classify_sentence(&CommunityEncodedVector(vec![3, 2, 0])));
    }

    #[test]
    fn shared_term_counts_in_every_community() {
        let idx = ConceptIndex::new(&set(&[("1-1-1", &["seat", "belt"]), ("1-1-2", &["belt"])]));
        assert_eq!(encode_sentence(&toks("belt belt"), &idx).0, [2, 2]);
    }

    #[test]
    fn all_noise_document_is_an_empty_shell() {
        let s = set(&[("1-1-1", &["brake"])]);
        let corpus = CleanCorpus {
            sentences: vec![
                sentence("1", 0, "Service-Brakes", "brake failed"),
                sentence("2", 0, "Service-Brakes", "police came"),
                sentence("2", 1, "Service-Brakes", ""),
            ],
        };
        let out = filter_corpus(&corpus, &s).unwrap();
        assert_eq!(out.filtered.sentences.len(), 1);
        let c = &out.summary.classes[0];
        assert_eq!((c.sentences, c.noise, c.documents, c.empty_documents), (3, 2, 2, 1));
        assert!((c.noise_pct() - 200.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn class_label_is_ignored() {
        let s = set(&[("1-1-1", &["heater"])]);
        let a = judge(&sentence("1", 0, "Service-Brakes", "heater"), &ConceptIndex::new(&s));
        assert!(!a.is_noise);
        assert_eq!(a.matched_terms, [("heater".to_string(), "1-1-1".parse().unwrap())]);
    }

    #[test]
    fn verdicts_round_trip_and_summary_csv() {
        let s = set(&[("1-1-1", &["brake"]), ("1-2-1", &["pedal"])]);
        let corpus = CleanCorpus {
            sentences: vec![
                sentence("a\tb", 0, "X", "brake pedal brake"),
                sentence("c", 3, "Y", "nothing"),
            ],
        };
        let out = filter_corpus(&corpus, &s).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.tsv");
        crate::artifact::persist(&out.verdicts, &crate::artifact::Header::new("l"), &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.contains("a\\tb\t0\tX\t0\t2,1\n"));
        let (_, mut back) = crate::artifact::load::<Verdicts>(&p).unwrap();
        for (b, o) in back.verdicts.iter_mut().zip(&out.verdicts.verdicts) {
            b.matched_terms = o.matched_terms.clone();
        }
        assert_eq!(back, out.verdicts);

        let csv_path = dir.path().join("summary.csv");
        out.summary.write_csv(&csv_path).unwrap();
        let csv_text = std::fs::read_to_string(&csv_path).unwrap();
        assert_eq!(
            csv_text,
            "class,sentences,noise,noise_pct,documents,empty_documents\nX,1,0,0.00,1,0\nY,1,1,100.00,1,1\n"
        );
    }
}
