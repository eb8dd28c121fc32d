// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::infuse::is_anchor;

/// Word ids ordered by descending frequency, ties broken lexicographically.
/// Anchors are kept whatever their count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
    min_count: u64,
}

impl Vocabulary {
    pub fn build<'a, I>(sentences: I, min_count: u64) -> Result<Vocabulary>
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        let mut counts: HashMap<&str, u64> = HashMap::new();
        let mut total = 0u64;
        for sentence in sentences {
            for t in sentence {
                *counts.entry(t.as_str()).or_default() += 1;
                total += 1;
            }
        }
        if total == 0 {
            return Err(Error::Empty("corpus has no tokens".into()));
        }
        let mut kept: Vec<(&str, u64)> = counts
            .into_iter()
            .filter(|&(w, c)| c >= min_count || is_anchor(w))
            .collect();
        kept.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let words: Vec<String> = kept.iter().map(|(w, _)| w.to_string()).collect();
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Ok(Vocabulary {
            counts: kept.iter().map(|&(_, c)| c).collect(),
            words,
            index,
            min_count,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn count(&self, id: usize) -> u64 {
        self.counts[id]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sents(lines: &[&str]) -> Vec<Vec<String>> {
        lines
            .iter()
            .map(|l| l.split_whitespace().map(str::to_string).collect())
            .collect()
    }

    fn build(lines: &[&str], min_count: u64) -> Result<Vocabulary> {
        let s = sents(lines);
        Vocabulary::build(s.iter().map(Vec::as_slice), min_count)
    }

    #[test]
    fn repeated_sentence() {
        let v = build(&["A_x brake"; 6], 5).unwrap();
        assert_eq!(v.words(), ["A_x", "brake"]);
        assert_eq!(v.counts(), [6, 6]);
    }

    #[test]
    fn rare_anchor_survives_min_count() {
        let v = build(&["brake brake brake brake brake A_Tires rare"], 5).unwrap();
        assert_eq!(v.words(), ["brake", "A_Tires"]);
        assert_eq!(v.id("rare"), None);
    }

    #[test]
    fn ties_are_lexicographic() {
        let v = build(&["zeta alpha mid alpha zeta mid top top top"], 1).unwrap();
        assert_eq!(v.words(), ["top", "alpha", "mid", "zeta"]);
        assert_eq!(v.id("alpha"), Some(1));
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(build(&[""], 1).is_err());
        assert!(build(&[], 1).is_err());
    }
}
