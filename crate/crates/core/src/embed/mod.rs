// SPDX-License-Identifier: Apache-2.0

//! Word vectors trained over the infused corpus.

mod sgns;
mod vocab;

use std::io::{self, Write};
use std::path::Path;

pub use sgns::{
    log_sigmoid, pair_loss, pair_loss_and_gradients, sigmoid, train, TrainConfig, TrainReport,
};
pub use vocab::Vocabulary;

use crate::artifact::{self, next_line, parse_field, Artifact, Header};
use crate::error::{Error, Result};

/// Cosine similarity, accumulated in `f64`.
pub fn cosine(a: &[f32], b: &[f32]) -> Result<f64> {
    let (mut ab, mut aa, mut bb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((ab / (aa.sqrt() * bb.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub words: Vec<String>,
    pub dim: usize,
    /// Row-major `words.len() × dim`.
    pub vectors: Vec<f32>,
    pub config: TrainConfig,
}

impl EmbeddingModel {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn vector(&self, id: usize) -> &[f32] {
        &self.vectors[id * self.dim..(id + 1) * self.dim]
    }

    pub fn position(&self, word: &str) -> Option<usize> {
        self.words.iter().position(|w| w == word)
    }

    pub fn vector_of(&self, word: &str) -> Option<&[f32]> {
        self.position(word).map(|i| self.vector(i))
    }

    pub fn similarity(&self, a: &str, b: &str) -> Result<Option<f64>> {
        match (self.vector_of(a), self.vector_of(b)) {
            (Some(x), Some(y)) => cosine(x, y).map(Some),
            _ => Ok(None),
        }
    }
}

impl Artifact for EmbeddingModel {
    const KIND: &'static str = "model";

    fn write_body(&self, w: &mut dyn Write) -> io::Result<()> {
        writeln!(w, "{} {}", self.words.len(), self.dim)?;
        for (i, word) in self.words.iter().enumerate() {
            write!(w, "{word}")?;
            for v in self.vector(i) {
                write!(w, " {v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// The training config lives in the header; [`load_model`] restores it.
    fn read_body(lines: &mut dyn Iterator<Item = io::Result<String>>) -> Result<Self, String> {
        let first = next_line(lines)?.ok_or("missing size line")?;
        let mut it = first.split(' ');
        let (n, dim) = match (it.next(), it.next(), it.next()) {
            (Some(n), Some(d), None) => (
                parse_field::<usize>(n, "vocabulary size")?,
                parse_field::<usize>(d, "dimension")?,
            ),
            _ => return Err(format!("bad size line `{first}`")),
        };
        if dim == 0 {
            return Err("dimension must be positive".into());
        }
        let mut words = Vec::with_capacity(n);
        let mut vectors = Vec::with_capacity(n * dim);
        while let Some(line) = next_line(lines)? {
            let mut fields = line.split(' ');
            let word = fields.next().unwrap_or_default();
            if word.is_empty() {
                return Err(format!("row {} has no word", words.len() + 1));
            }
            let before = vectors.len();
            for f in fields {
                let v: f32 = parse_field(f, "vector entry")?;
                if !v.is_finite() {
                    return Err(format!("non-finite entry for `{word}`"));
                }
                vectors.push(v);
            }
            if vectors.len() - before != dim {
                return Err(format!(
                    "`{word}` has {} entries, expected {dim}",
                    vectors.len() - before
                ));
            }
            words.push(word.to_string());
        }
        if words.len() != n {
            return Err(format!("expected {n} rows, found {}", words.len()));
        }
        Ok(EmbeddingModel {
            words,
            dim,
            vectors,
            config: TrainConfig::default(),
        })
    }
}

pub fn persist_model(model: &EmbeddingModel, header: Header, path: &Path) -> Result<()> {
    let header = header.extend(model.config.params());
    artifact::persist(model, &header, path)
}

pub fn load_model(path: &Path) -> Result<(Header, EmbeddingModel)> {
    let (header, mut model) = artifact::load::<EmbeddingModel>(path)?;
    model.config = TrainConfig::from_params(
        header.params.iter().map(|(k, v)| (k.as_str(), v.as_str())),
    )
    .map_err(|r| Error::format(path, r))?;
    if model.config.dim != model.dim {
        return Err(Error::format(path, "header dimension disagrees with body"));
    }
    Ok((header, model))
}
