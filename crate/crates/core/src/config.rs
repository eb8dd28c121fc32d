// SPDX-License-Identifier: Apache-2.0

//! Flat `key = value` pipeline configuration.
//!
//! ```text
//! # comments start with '#'
//! input = complaints.csv
//! workdir = out
//! graph.theta = 0.6
//! pip.alpha = 0.5, 1.0
//! ```
//!
//! Relative paths are resolved against the config file's directory; paths
//! given as command-line overrides are resolved against the working
//! directory.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::corpusio::CorpusSchema;
use crate::embed::TrainConfig;
use crate::error::{Error, Result};
use crate::evaluate::SyntheticSpec;
use crate::pipdim::PipConfig;
use crate::semgraph::HierarchyConfig;

/// Every accepted key with its default and a one-line description.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("input", "", "corpus file (delimited text with a header row)"),
    ("workdir", "semno-out", "directory for artifacts"),
    ("stopwords", "english", "builtin list (english, none) or a file with one word per line"),
    ("annotations", "", "annotation file for `score`: doc_id, index, tag"),
    ("seed", "1", "master seed; every stage seed derives from it"),
    ("corpus.class_col", "Component", "class column name"),
    ("corpus.text_col", "Ticket Text", "text column name"),
    ("corpus.id_col", "", "document id column; row numbers when empty"),
    ("corpus.delimiter", ",", "field delimiter, a single character or `tab`"),
    ("embed.dim", "100", "vector dimensionality"),
    ("embed.window", "5", "maximum context window"),
    ("embed.negatives", "5", "noise samples per context word"),
    ("embed.epochs", "5", "passes over the corpus"),
    ("embed.learning_rate", "0.025", "initial learning rate, decays linearly"),
    ("embed.subsample", "0.001", "frequent-word subsampling threshold"),
    ("embed.min_count", "5", "minimum word frequency (anchors exempt)"),
    ("graph.theta", "0.6", "cosine threshold for an edge"),
    ("graph.max_depth", "3", "clustering levels"),
    ("graph.min_members", "3", "smallest retained community"),
    ("graph.q_gain_floor", "0.3", "minimum modularity for splitting a community"),
    ("pip.alpha", "0.5,1.0", "comma-separated exponents of the embedding family"),
    ("pip.window", "5", "co-occurrence window of the signal matrix"),
    ("pip.max_vocab", "2000", "signal matrix side (most frequent words)"),
    ("pip.enabled", "false", "run the pip stage as part of `all`"),
    ("sample.per_class", "100", "sentences sampled per class for annotation"),
    ("synth.classes", "4", "synthetic classes"),
    ("synth.topic_vocab", "50", "topic words per class"),
    ("synth.noise_vocab", "100", "shared noise words"),
    ("synth.sentences_per_class", "2000", "sentences per class"),
    ("synth.noise_ratio", "0.3", "fraction of planted noise sentences"),
    ("synth.min_len", "6", "shortest sentence"),
    ("synth.max_len", "14", "longest sentence"),
    ("synth.sentences_per_doc", "5", "sentences per document"),
    ("synth.output", "", "synthetic corpus file (default <workdir>/synthetic.csv)"),
    ("synth.truth", "", "planted noise tags (default <workdir>/synthetic_truth.tsv)"),
    ("path.corpus", "", "segmented corpus artifact"),
    ("path.cleaned", "", "cleaned corpus artifact"),
    ("path.infused", "", "infused corpus artifact"),
    ("path.model", "", "embedding model artifact"),
    ("path.graph", "", "similarity graph artifact"),
    ("path.hierarchy", "", "retained communities artifact"),
    ("path.verdicts", "", "noise verdicts artifact"),
    ("path.filtered", "", "filtered corpus artifact"),
    ("path.summary", "", "per-class noise summary"),
    ("path.pip", "", "PIP comparison table"),
    ("path.sample", "", "annotation sample manifest"),
    ("path.report", "", "score report"),
];

/// Keys whose values are file system paths.
fn is_path_key(key: &str) -> bool {
    matches!(key, "input" | "workdir" | "annotations" | "synth.output" | "synth.truth")
        || key.starts_with("path.")
}

/// Override spellings that do not follow from the key names.
const ALIASES: &[(&str, &str)] = &[("basic", "path.cleaned")];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigMap {
    values: BTreeMap<String, String>,
}

impl Default for ConfigMap {
    fn default() -> Self {
        ConfigMap {
            values: KEYS
                .iter()
                .map(|&(k, v, _)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }
}

impl ConfigMap {
    pub fn load(path: &Path) -> Result<ConfigMap> {
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            io::ErrorKind::NotFound => Error::MissingInput(path.to_path_buf()),
            _ => Error::io(path, e),
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        ConfigMap::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<ConfigMap> {
        let mut map = ConfigMap::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            map.set(k.trim(), v.trim(), base)
                .map_err(|e| Error::Config(format!("line {}: {}", n + 1, strip_prefix(&e))))?;
        }
        Ok(map)
    }

    /// Sets a known key; relative paths are resolved against `base`.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        let slot = self
            .values
            .get_mut(key)
            .ok_or_else(|| Error::Config(format!("unknown key `{key}`")))?;
        *slot = if !value.is_empty() && (is_path_key(key) || is_stopword_file(key, value)) {
            base.join(value).to_string_lossy().into_owned()
        } else {
            value.to_string()
        };
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("`{key}` is not a config key"))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Maps a command-line flag name to a config key. Tried in order: the
    /// key itself, `<subcommand>.<key>`, an alias, then a unique key ending
    /// in `.<key>`. Dashes count as underscores.
    pub fn resolve_key(&self, subcommand: &str, flag: &str) -> Result<String> {
        let flag = flag.trim_start_matches('-').replace('-', "_");
        if self.values.contains_key(&flag) {
            return Ok(flag);
        }
        let scoped = format!("{subcommand}.{flag}");
        if self.values.contains_key(&scoped) {
            return Ok(scoped);
        }
        if let Some(&(_, key)) = ALIASES.iter().find(|(a, _)| *a == flag) {
            return Ok(key.to_string());
        }
        let suffix = format!(".{flag}");
        let hits: Vec<&String> = self.values.keys().filter(|k| k.ends_with(&suffix)).collect();
        match hits[..] {
            [one] => Ok(one.clone()),
            [] => Err(Error::Config(format!("unknown option `--{}`", flag.replace('_', "-")))),
            _ => Err(Error::Config(format!(
                "option `--{}` is ambiguous: {}",
                flag.replace('_', "-"),
                hits.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
            ))),
        }
    }
}

fn is_stopword_file(key: &str, value: &str) -> bool {
    key == "stopwords" && crate::cleanse::StopwordList::builtin(value).is_err()
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}

/// Artifact locations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Paths {
    pub corpus: PathBuf,
    pub cleaned: PathBuf,
    pub infused: PathBuf,
    pub model: PathBuf,
    pub graph: PathBuf,
    pub hierarchy: PathBuf,
    pub verdicts: PathBuf,
    pub filtered: PathBuf,
    pub summary: PathBuf,
    pub pip: PathBuf,
    pub sample: PathBuf,
    pub report: PathBuf,
    pub synth_output: PathBuf,
    pub synth_truth: PathBuf,
}

/// Typed view of a [`ConfigMap`].
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub workdir: PathBuf,
    pub stopwords: String,
    pub annotations: Option<PathBuf>,
    pub seed: u64,
    pub schema: CorpusSchema,
    /// `seed` is filled in per run from the master seed.
    pub embed: TrainConfig,
    pub theta: f64,
    pub hierarchy: HierarchyConfig,
    pub pip: PipConfig,
    pub pip_enabled: bool,
    pub sample_per_class: usize,
    pub synth: SyntheticSpec,
    pub paths: Paths,
}

fn parse<T: FromStr>(map: &ConfigMap, key: &str) -> Result<T> {
    let v = map.get(key);
    v.parse()
        .map_err(|_| Error::Config(format!("`{key}` has invalid value `{v}`")))
}

fn parse_bool(map: &ConfigMap, key: &str) -> Result<bool> {
    match map.get(key).to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" | "" => Ok(false),
        v => Err(Error::Config(format!("`{key}` has invalid value `{v}`"))),
    }
}

fn optional_path(map: &ConfigMap, key: &str) -> Option<PathBuf> {
    let v = map.get(key);
    (!v.is_empty()).then(|| PathBuf::from(v))
}

impl PipelineConfig {
    pub fn from_map(map: &ConfigMap) -> Result<PipelineConfig> {
        let workdir = PathBuf::from(map.get("workdir"));
        let artifact = |key: &str, name: &str| {
            optional_path(map, key).unwrap_or_else(|| workdir.join(name))
        };
        let paths = Paths {
            corpus: artifact("path.corpus", "corpus.tsv"),
            cleaned: artifact("path.cleaned", "cleaned.tsv"),
            infused: artifact("path.infused", "infused.tsv"),
            model: artifact("path.model", "model.txt"),
            graph: artifact("path.graph", "graph.tsv"),
            hierarchy: artifact("path.hierarchy", "hierarchy.tsv"),
            verdicts: artifact("path.verdicts", "verdicts.tsv"),
            filtered: artifact("path.filtered", "filtered.tsv"),
            summary: artifact("path.summary", "summary.csv"),
            pip: artifact("path.pip", "pip.csv"),
            sample: artifact("path.sample", "sample.tsv"),
            report: artifact("path.report", "report.csv"),
            synth_output: artifact("synth.output", "synthetic.csv"),
            synth_truth: artifact("synth.truth", "synthetic_truth.tsv"),
        };
        let delimiter = match map.get("corpus.delimiter") {
            "tab" | "\\t" | "\t" => b'\t',
            d if d.len() == 1 && d.is_ascii() => d.as_bytes()[0],
            d => {
                return Err(Error::Config(format!(
                    "`corpus.delimiter` must be one ASCII character, got `{d}`"
                )))
            }
        };
        let schema = CorpusSchema {
            class_col: map.get("corpus.class_col").to_string(),
            text_col: map.get("corpus.text_col").to_string(),
            id_col: Some(map.get("corpus.id_col").to_string()).filter(|s| !s.is_empty()),
            delimiter,
        };
        let seed: u64 = parse(map, "seed")?;
        let embed = TrainConfig {
            dim: parse(map, "embed.dim")?,
            window: parse(map, "embed.window")?,
            negatives: parse(map, "embed.negatives")?,
            epochs: parse(map, "embed.epochs")?,
            learning_rate: parse(map, "embed.learning_rate")?,
            subsample: parse(map, "embed.subsample")?,
            min_count: parse(map, "embed.min_count")?,
            seed: 0,
        };
        embed.validate()?;
        let hierarchy = HierarchyConfig {
            max_depth: parse(map, "graph.max_depth")?,
            min_members: parse(map, "graph.min_members")?,
            q_gain_floor: parse(map, "graph.q_gain_floor")?,
        };
        hierarchy.validate()?;
        let theta: f64 = parse(map, "graph.theta")?;
        crate::semgraph::validate_theta(theta)?;
        let alphas = map
            .get("pip.alpha")
            .split(',')
            .map(|a| {
                a.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("`pip.alpha` has invalid value `{a}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let pip = PipConfig {
            alphas,
            window: parse(map, "pip.window")?,
            max_vocab: parse(map, "pip.max_vocab")?,
            seed: 0,
        };
        pip.validate()?;
        let synth = SyntheticSpec {
            classes: parse(map, "synth.classes")?,
            topic_vocab: parse(map, "synth.topic_vocab")?,
            noise_vocab: parse(map, "synth.noise_vocab")?,
            sentences_per_class: parse(map, "synth.sentences_per_class")?,
            noise_ratio: parse(map, "synth.noise_ratio")?,
            min_len: parse(map, "synth.min_len")?,
            max_len: parse(map, "synth.max_len")?,
            sentences_per_doc: parse(map, "synth.sentences_per_doc")?,
            seed: 0,
        };
        Ok(PipelineConfig {
            input: optional_path(map, "input"),
            workdir,
            stopwords: map.get("stopwords").to_string(),
            annotations: optional_path(map, "annotations"),
            seed,
            schema,
            embed,
            theta,
            hierarchy,
            pip,
            pip_enabled: parse_bool(map, "pip.enabled")?,
            sample_per_class: parse(map, "sample.per_class")?,
            synth,
            paths,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse() {
        let c = PipelineConfig::from_map(&ConfigMap::default()).unwrap();
        assert_eq!(c.theta, 0.6);
        assert_eq!(c.pip.alphas, [0.5, 1.0]);
        assert_eq!(c.paths.model, Path::new("semno-out/model.txt"));
        assert_eq!(c.schema, CorpusSchema::default());
    }

    #[test]
    fn file_values_and_relative_paths() {
        let text = "# run\ninput = data/c.csv\n\nworkdir=out\ngraph.theta = 0.7\ncorpus.delimiter = tab\nstopwords = english\n";
        let m = ConfigMap::parse(text, Path::new("/cfg")).unwrap();
        let c = PipelineConfig::from_map(&m).unwrap();
        assert_eq!(c.input.as_deref(), Some(Path::new("/cfg/data/c.csv")));
        assert_eq!(c.paths.cleaned, Path::new("/cfg/out/cleaned.tsv"));
        assert_eq!(c.theta, 0.7);
        assert_eq!(c.schema.delimiter, b'\t');
        assert_eq!(c.stopwords, "english");
    }

    #[test]
    fn stopword_files_resolve() {
        let m = ConfigMap::parse("stopwords = my-stops.txt\n", Path::new("/cfg")).unwrap();
        assert_eq!(m.get("stopwords"), "/cfg/my-stops.txt");
    }

    #[test]
    fn errors_name_the_line() {
        let e = ConfigMap::parse("seed = 1\nbogus = 2\n", Path::new("")).unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        assert_eq!(e.exit_code(), 2);
        assert!(ConfigMap::parse("no equals sign\n", Path::new("")).is_err());
        let m = ConfigMap::parse("graph.theta = 1.5\n", Path::new("")).unwrap();
        assert!(PipelineConfig::from_map(&m).is_err());
    }

    #[test]
    fn override_resolution() {
        let m = ConfigMap::default();
        assert_eq!(m.resolve_key("all", "--input").unwrap(), "input");
        assert_eq!(m.resolve_key("all", "theta").unwrap(), "graph.theta");
        assert_eq!(m.resolve_key("cleanse", "class-col").unwrap(), "corpus.class_col");
        assert_eq!(m.resolve_key("pip", "window").unwrap(), "pip.window");
        assert_eq!(m.resolve_key("pip", "max-vocab").unwrap(), "pip.max_vocab");
        assert_eq!(m.resolve_key("pip", "basic").unwrap(), "path.cleaned");
        assert_eq!(m.resolve_key("pip", "infused").unwrap(), "path.infused");
        assert_eq!(m.resolve_key("all", "embed.window").unwrap(), "embed.window");
        assert!(m.resolve_key("all", "window").unwrap_err().to_string().contains("ambiguous"));
        assert!(m.resolve_key("all", "nonsense").is_err());
    }
}
