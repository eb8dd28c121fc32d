// SPDX-License-Identifier: Apache-2.0

//! Semantic infusion: each clean sentence receives `⌈log₂(len)/2⌉` copies of
//! its class anchor `A_<class>`, inserted before pairwise non-adjacent token
//! positions drawn uniformly at random.

use std::io::{self, Write};

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::artifact::{next_line, Artifact};
use crate::cleanse::{parse_token_line, write_token_line, CleanCorpus, CleanSentence};
use crate::corpusio::ClassLabel;
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng};

pub const ANCHOR_PREFIX: &str = "A_";

/// `A_<class>`. Cleaned corpus tokens never contain `_`, so anchors cannot
/// collide with corpus words.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AnchorToken {
    pub class: ClassLabel,
    pub surface: String,
}

impl AnchorToken {
    pub fn new(class: &ClassLabel) -> Self {
        AnchorToken {
            class: class.clone(),
            surface: format!("{ANCHOR_PREFIX}{class}"),
        }
    }
}

pub fn is_anchor(token: &str) -> bool {
    token.starts_with(ANCHOR_PREFIX)
}

/// `⌈log₂(len)/2⌉`, i.e. the smallest `q` with `4^q ≥ len`. Zero for
/// `len ≤ 1`; empty sentences are never infused.
pub fn infusion_frequency(len: usize) -> usize {
    let mut q = 0;
    let mut reach: u128 = 1;
    while reach < len as u128 {
        reach *= 4;
        q += 1;
    }
    q
}

/// Seeded source of anchor placements. Each sentence gets its own stream
/// keyed by `(seed, doc_id, index)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InfusionRng {
    pub seed: u64,
}

impl InfusionRng {
    pub const ALGORITHM: &'static str = "chacha8/sha256-subseed";

    pub fn new(seed: u64) -> Self {
        InfusionRng { seed }
    }

    pub fn for_sentence(&self, doc_id: &str, index: usize) -> ChaCha8Rng {
        rng(derive_seed(
            self.seed,
            &[doc_id.as_bytes(), &(index as u64).to_le_bytes()],
        ))
    }
}

/// Draws `count` pairwise non-adjacent indices from `[0, len)`, uniformly
/// over all such combinations.
///
/// Uses the bijection between non-adjacent `count`-subsets of `[0, len)`
/// and plain `count`-subsets of `[0, len - count + 1)`: sorted `b_i` maps to
/// `b_i + i`.
pub fn sample_non_adjacent<R: Rng + ?Sized>(
    len: usize,
    count: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let slots = (len + 1)
        .checked_sub(count)
        .filter(|&slots| slots >= count)
        .ok_or(Error::InfeasiblePlacement { len, count })?;
    let mut picks = index::sample(rng, slots, count).into_vec();
    picks.sort_unstable();
    Ok(picks.into_iter().enumerate().map(|(i, b)| b + i).collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfusedSentence {
    pub doc_id: String,
    pub index: usize,
    pub class: ClassLabel,
    /// Tokens including anchors.
    pub tokens: Vec<String>,
    /// Indices into the original clean sentence before which an anchor was
    /// inserted; sorted.
    pub anchor_positions: Vec<usize>,
}

impl InfusedSentence {
    pub fn anchor_count(&self) -> usize {
        self.anchor_positions.len()
    }

    pub fn strip_anchors(&self) -> Vec<String> {
        let mut slots = self.anchor_slots().into_iter().peekable();
        self.tokens
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                if slots.peek() == Some(i) {
                    slots.next();
                    false
                } else {
                    true
                }
            })
            .map(|(_, t)| t.clone())
            .collect()
    }

    /// Positions of the anchors inside `tokens`.
    pub fn anchor_slots(&self) -> Vec<usize> {
        self.anchor_positions
            .iter()
            .enumerate()
            .map(|(k, p)| p + k)
            .collect()
    }
}

pub fn infuse_sentence(s: &CleanSentence, rng: &InfusionRng) -> Result<InfusedSentence> {
    let count = infusion_frequency(s.len());
    let mut stream = rng.for_sentence(&s.doc_id, s.index);
    let positions = sample_non_adjacent(s.len(), count, &mut stream)?;
    let anchor = AnchorToken::new(&s.class);
    let mut tokens = s.tokens.clone();
    for &p in positions.iter().rev() {
        tokens.insert(p, anchor.surface.clone());
    }
    Ok(InfusedSentence {
        doc_id: s.doc_id.clone(),
        index: s.index,
        class: s.class.clone(),
        tokens,
        anchor_positions: positions,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InfusedCorpus {
    pub sentences: Vec<InfusedSentence>,
}

impl InfusedCorpus {
    pub fn token_lists(&self) -> Vec<&[String]> {
        self.sentences.iter().map(|s| s.tokens.as_slice()).collect()
    }
}

pub fn infuse_corpus(corpus: &CleanCorpus, rng: &InfusionRng) -> Result<InfusedCorpus> {
    let sentences = corpus
        .sentences
        .par_iter()
        .map(|s| infuse_sentence(s, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(InfusedCorpus { sentences })
}

impl Artifact for InfusedCorpus {
    const KIND: &'static str = "infused";

    fn write_body(&self, w: &mut dyn Write) -> io::Result<()> {
        for s in &self.sentences {
            write_token_line(w, &s.doc_id, s.index, &s.class, &s.tokens)?;
        }
        Ok(())
    }

    fn read_body(lines: &mut dyn Iterator<Item = io::Result<String>>) -> Result<Self, String> {
        let mut sentences = Vec::new();
        while let Some(line) = next_line(lines)? {
            let (doc_id, index, class, tokens) = parse_token_line(&line)?;
            let anchor_positions = tokens
                .iter()
                .enumerate()
                .filter(|(_, t)| is_anchor(t))
                .enumerate()
                .map(|(k, (slot, _))| slot - k)
                .collect();
            sentences.push(InfusedSentence {
                doc_id,
                index,
                class,
                tokens,
                anchor_positions,
            });
        }
        Ok(InfusedCorpus { sentences })
    }
}
