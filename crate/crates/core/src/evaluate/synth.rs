// SPDX-License-Identifier: Apache-2.0

//! Labeled corpora with planted noise. Each class draws its content
//! sentences from its own topic vocabulary; noise sentences of every class
//! draw from one shared noise vocabulary.

use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::Annotation;
use crate::artifact::write_atomic;
use crate::corpusio::{ClassLabel, Corpus, Document};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub topic_vocab: usize,
    pub noise_vocab: usize,
    pub sentences_per_class: usize,
    /// Fraction of each class's sentences that are noise.
    pub noise_ratio: f64,
    pub min_len: usize,
    pub max_len: usize,
    pub sentences_per_doc: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            classes: 4,
            topic_vocab: 50,
            noise_vocab: 100,
            sentences_per_class: 2000,
            noise_ratio: 0.3,
            min_len: 6,
            max_len: 14,
            sentences_per_doc: 5,
            seed: 7,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("classes", self.classes),
            ("topic_vocab", self.topic_vocab),
            ("noise_vocab", self.noise_vocab),
            ("sentences_per_class", self.sentences_per_class),
            ("min_len", self.min_len),
            ("sentences_per_doc", self.sentences_per_doc),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidParameter(format!("synth.{name} must be positive")));
            }
        }
        if !(self.noise_ratio > 0.0 && self.noise_ratio < 1.0) {
            return Err(Error::InvalidParameter("synth.noise_ratio must lie in (0, 1)".into()));
        }
        if self.min_len > self.max_len {
            return Err(Error::InvalidParameter("synth.min_len exceeds synth.max_len".into()));
        }
        if self.max_len > self.topic_vocab || self.max_len > self.noise_vocab {
            return Err(Error::InvalidParameter(format!(
                "sentences of {} distinct words do not fit vocabularies of {} and {}",
                self.max_len, self.topic_vocab, self.noise_vocab
            )));
        }
        Ok(())
    }

    pub fn noise_per_class(&self) -> usize {
        (self.noise_ratio * self.sentences_per_class as f64).round() as usize
    }

    pub fn class_name(i: usize) -> String {
        format!("Class-{}", i + 1)
    }

    pub fn topic_word(class: usize, j: usize) -> String {
        format!("t{class}x{j}")
    }

    pub fn noise_word(j: usize) -> String {
        format!("nz{j}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDoc {
    pub id: String,
    pub class: String,
    pub sentences: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub spec: SyntheticSpec,
    pub documents: Vec<SyntheticDoc>,
    /// One tag per sentence, `true` for planted noise.
    pub truth: Vec<Annotation>,
    pub topic_words: Vec<Vec<String>>,
    pub noise_words: Vec<String>,
}

fn sentence(words: &[String], spec: &SyntheticSpec, r: &mut ChaCha8Rng) -> String {
    let len = r.random_range(spec.min_len..=spec.max_len);
    let picked: Vec<&str> = words.choose_multiple(r, len).map(String::as_str).collect();
    format!("{}.", picked.join(" "))
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let topic_words: Vec<Vec<String>> = (0..spec.classes)
        .map(|c| (0..spec.topic_vocab).map(|j| SyntheticSpec::topic_word(c, j)).collect())
        .collect();
    let noise_words: Vec<String> = (0..spec.noise_vocab).map(SyntheticSpec::noise_word).collect();
    let noise_count = spec.noise_per_class();

    let mut documents = Vec::new();
    let mut truth = Vec::new();
    for (c, topic) in topic_words.iter().enumerate() {
        let mut r = rng(derive_seed(spec.seed, &[b"synth", &(c as u64).to_le_bytes()]));
        let mut is_noise: Vec<bool> = (0..spec.sentences_per_class).map(|i| i < noise_count).collect();
        is_noise.shuffle(&mut r);
        let class = SyntheticSpec::class_name(c);
        for (d, chunk) in is_noise.chunks(spec.sentences_per_doc).enumerate() {
            let id = format!("c{}d{}", c + 1, d + 1);
            let sentences = chunk
                .iter()
                .map(|&noise| sentence(if noise { &noise_words } else { topic }, spec, &mut r))
                .collect();
            truth.extend(chunk.iter().enumerate().map(|(i, &tag)| Annotation {
                doc_id: id.clone(),
                index: i,
                tag,
            }));
            documents.push(SyntheticDoc {
                id,
                class: class.clone(),
                sentences,
            });
        }
    }
    Ok(SyntheticCorpus {
        spec: spec.clone(),
        documents,
        truth,
        topic_words,
        noise_words,
    })
}

impl SyntheticCorpus {
    pub fn corpus(&self) -> Corpus {
        Corpus {
            documents: self
                .documents
                .iter()
                .map(|d| {
                    let class = ClassLabel::new(&d.class).expect("generated labels are normalized");
                    Document::new(d.id.clone(), class, d.sentences.join(" "))
                })
                .collect(),
        }
    }

    /// Writes `id,Component,Ticket Text` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, |w| {
            let mut out = csv::Writer::from_writer(w);
            let io_err = |e: csv::Error| std::io::Error::other(e.to_string());
            out.write_record(["id", "Component", "Ticket Text"]).map_err(io_err)?;
            for d in &self.documents {
                out.write_record([d.id.as_str(), d.class.as_str(), d.sentences.join(" ").as_str()])
                    .map_err(io_err)?;
            }
            out.flush()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn small() -> SyntheticSpec {
        SyntheticSpec {
            classes: 2,
            sentences_per_class: 1000,
            ..SyntheticSpec::default()
        }
    }

    #[test]
    fn exact_noise_counts() {
        let s = generate_synthetic(&small()).unwrap();
        for c in 0..2 {
            let prefix = format!("c{}d", c + 1);
            let noise = s.truth.iter().filter(|a| a.doc_id.starts_with(&prefix) && a.tag).count();
            assert_eq!(noise, 300);
        }
        assert_eq!(s.truth.len(), 2000);
    }

    #[test]
    fn vocabularies_disjoint() {
        let s = generate_synthetic(&SyntheticSpec::default()).unwrap();
        let mut seen = HashSet::new();
        for w in s.topic_words.iter().flatten().chain(&s.noise_words) {
            assert!(seen.insert(w.clone()), "{w} repeated");
        }
    }

    #[test]
    fn sentences_use_their_vocabulary() {
        let s = generate_synthetic(&small()).unwrap();
        let corpus = s.corpus();
        let tags: std::collections::HashMap<(&str, usize), bool> =
            s.truth.iter().map(|a| ((a.doc_id.as_str(), a.index), a.tag)).collect();
        for doc in &corpus.documents {
            let c: usize = doc.class.as_str()["Class-".len()..].parse::<usize>().unwrap() - 1;
            for sent in &doc.sentences {
                let noise = tags[&(doc.id.as_str(), sent.index)];
                let words: Vec<&str> = sent.text.trim_end_matches('.').split(' ').collect();
                assert!(words.len() >= 6 && words.len() <= 14);
                for w in words {
                    if noise {
                        assert!(w.starts_with("nz"));
                    } else {
                        assert!(w.starts_with(&format!("t{c}x")));
                    }
                }
            }
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(generate_synthetic(&small()).unwrap(), generate_synthetic(&small()).unwrap());
    }

    #[test]
    fn overlap_forcing_sizes_rejected() {
        let spec = SyntheticSpec {
            topic_vocab: 5,
            ..small()
        };
        assert!(matches!(generate_synthetic(&spec), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn csv_reloads() {
        let s = generate_synthetic(&small()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("synth.csv");
        s.write_csv(&p).unwrap();
        let schema = crate::corpusio::CorpusSchema {
            id_col: Some("id".into()),
            ..Default::default()
        };
        let loaded = crate::corpusio::load_corpus(&p, &schema).unwrap();
        assert_eq!(loaded.corpus, s.corpus());
    }
}
