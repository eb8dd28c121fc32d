// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Positive PMI over within-sentence co-occurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct PpmiMatrix {
    pub words: Vec<String>,
    pub values: DMatrix<f64>,
}

/// The `max_vocab` most frequent words, ties broken lexicographically.
pub fn top_vocabulary(sentences: &[&[String]], max_vocab: usize) -> Vec<String> {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for s in sentences {
        for t in s.iter() {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut words: Vec<(&str, u64)> = counts.into_iter().collect();
    words.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    words.truncate(max_vocab);
    words.into_iter().map(|(w, _)| w.to_string()).collect()
}

pub fn build_ppmi(sentences: &[&[String]], window: usize, max_vocab: usize) -> Result<PpmiMatrix> {
    let words = top_vocabulary(sentences, max_vocab);
    if words.len() < 2 {
        return Err(Error::Empty(format!(
            "PPMI needs at least 2 distinct words, corpus has {}",
            words.len()
        )));
    }
    let values = ppmi_over(sentences, window, &words)?;
    Ok(PpmiMatrix { words, values })
}

/// PPMI restricted to a fixed word list. Co-occurrence windows count
/// positions in the full sentence, including words outside the list.
pub fn ppmi_over(sentences: &[&[String]], window: usize, words: &[String]) -> Result<DMatrix<f64>> {
    if window == 0 {
        return Err(Error::InvalidParameter("pip.window must be positive".into()));
    }
    let index: HashMap<&str, usize> = words.iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect();
    let counts: HashMap<(usize, usize), f64> = sentences
        .par_iter()
        .fold(HashMap::new, |mut acc, s| {
            let ids: Vec<Option<usize>> = s.iter().map(|t| index.get(t.as_str()).copied()).collect();
            for i in 0..ids.len() {
                let Some(a) = ids[i] else { continue };
                for b in ids.iter().skip(i + 1).take(window).flatten() {
                    *acc.entry((a, *b)).or_insert(0.0) += 1.0;
                    *acc.entry((*b, a)).or_insert(0.0) += 1.0;
                }
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0.0) += v;
            }
            a
        });
    let d = words.len();
    let mut m = DMatrix::<f64>::zeros(d, d);
    for (&(a, b), &c) in &counts {
        m[(a, b)] = c;
    }
    let row: Vec<f64> = (0..d).map(|a| m.row(a).sum()).collect();
    let total: f64 = row.iter().sum();
    if total == 0.0 {
        return Ok(m);
    }
    for a in 0..d {
        for b in 0..d {
            let c = m[(a, b)];
            m[(a, b)] = if c > 0.0 {
                (c * total / (row[a] * row[b])).ln().max(0.0)
            } else {
                0.0
            };
        }
    }
    Ok(m)
}
