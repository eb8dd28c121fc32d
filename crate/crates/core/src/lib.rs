// SPDX-License-Identifier: Apache-2.0

//! Unsupervised semantic-noise filtering for categorical text corpora.
//!
//! The pipeline tags every sentence of a labeled corpus as either carrying
//! domain content or being "semantic noise":
//!
//! 1. [`cleanse`] tokenizes sentences and drops stop words.
//! 2. [`infuse`] inserts class anchor tokens (`A_<class>`) into each sentence.
//! 3. [`embed`] trains skip-gram word vectors over the infused corpus.
//! 4. [`semgraph`] links similar words, clusters the graph recursively with
//!    Louvain and keeps the third-level communities that contain an anchor.
//! 5. [`filter`] marks a sentence as noise when it touches none of those
//!    anchored communities.
//!
//! [`pipdim`] measures how much infusion perturbs the corpus (PIP loss and
//! the optimal embedding dimensionality), [`evaluate`] scores verdicts
//! against annotations and generates synthetic corpora, and [`pipeline`]
//! wires the stages together behind the `semno` binary.

pub mod artifact;
pub mod cleanse;
pub mod config;
pub mod corpusio;
pub mod embed;
pub mod error;
pub mod evaluate;
pub mod filter;
pub mod infuse;
pub mod pipdim;
pub mod pipeline;
pub mod seed;
pub mod semgraph;

pub use error::{Error, Result};
