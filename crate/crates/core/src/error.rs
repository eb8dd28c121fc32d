// SPDX-License-Identifier: Apache-2.0

use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("input file {0} does not exist")]
    MissingInput(PathBuf),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("column `{0}` not found in corpus header")]
    MissingColumn(String),

    #[error("unknown stopword list `{0}` (not a builtin tag or readable file)")]
    UnknownStopwords(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}: malformed artifact: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("{path}: unsupported artifact header `{found}` (expected format v{expected})")]
    VersionMismatch {
        path: PathBuf,
        found: String,
        expected: u32,
    },

    #[error("{path}: artifact holds `{found}` data, expected `{expected}`")]
    StageMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("missing artifact {path}; run the `{producer}` stage first")]
    MissingArtifact { path: PathBuf, producer: String },

    #[error("{path} was built from a different configuration (use --force to override):\n  {}", diff.join("\n  "))]
    LineageMismatch { path: PathBuf, diff: Vec<String> },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("cosine similarity is undefined for a zero vector")]
    ZeroVector,

    #[error("cannot place {count} non-consecutive anchors in a sentence of {len} tokens")]
    InfeasiblePlacement { len: usize, count: usize },

    #[error("training diverged in epoch {epoch} (non-finite loss); lower the learning rate")]
    Diverged { epoch: usize },

    #[error("no anchored communities among {retained} retained communities; check the corpus size, embedding quality or theta")]
    NoAnchoredCommunities { retained: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("annotations reference unknown sentences: {}", .0.join(", "))]
    UnknownSentences(Vec<String>),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// Process exit status for the CLI: 2 config, 3 artifact, 4 runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MissingInput(_)
            | Error::Config(_)
            | Error::MissingColumn(_)
            | Error::UnknownStopwords(_)
            | Error::InvalidParameter(_) => 2,
            Error::Format { .. }
            | Error::VersionMismatch { .. }
            | Error::StageMismatch { .. }
            | Error::MissingArtifact { .. }
            | Error::LineageMismatch { .. } => 3,
            _ => 4,
        }
    }
}
