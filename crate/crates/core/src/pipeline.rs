// SPDX-License-Identifier: Apache-2.0

//! Stage orchestration. Each stage reads its upstream artifacts, checks that
//! they were built from the same configuration, and writes its outputs
//! atomically.
//!
//! Every artifact header carries a lineage hash over the configuration that
//! produced it, cumulatively from the first stage. A stage refuses inputs
//! whose lineage differs from what the current configuration would produce
//! unless forced.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use log::{info, warn};

use crate::artifact::{self, Artifact, Header};
use crate::cleanse::{clean_corpus, CleanCorpus, StopwordList};
use crate::config::PipelineConfig;
use crate::corpusio::{load_corpus, persist_corpus};
use crate::embed::{self, TrainConfig};
use crate::error::{Error, Result};
use crate::evaluate::{self, generate_synthetic, sample_for_annotation, SampleManifest};
use crate::filter::{filter_corpus, Verdicts};
use crate::infuse::{infuse_corpus, InfusedCorpus, InfusionRng};
use crate::pipdim::{compare_corpora, PipConfig};
use crate::seed::{fingerprint, stage_seed};
use crate::semgraph::{self, recursive_cluster, select_anchored, RetainedCommunities};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Cleanse,
    Infuse,
    Embed,
    Graph,
    Filter,
    Pip,
    Sample,
    Score,
    Synth,
}

impl Stage {
    pub const EVERY: [Stage; 9] = [
        Stage::Cleanse,
        Stage::Infuse,
        Stage::Embed,
        Stage::Graph,
        Stage::Filter,
        Stage::Pip,
        Stage::Sample,
        Stage::Score,
        Stage::Synth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Cleanse => "cleanse",
            Stage::Infuse => "infuse",
            Stage::Embed => "embed",
            Stage::Graph => "graph",
            Stage::Filter => "filter",
            Stage::Pip => "pip",
            Stage::Sample => "sample",
            Stage::Score => "score",
            Stage::Synth => "synth",
        }
    }

    /// The stage whose configuration this stage's outputs inherit.
    fn parent(self) -> Option<Stage> {
        match self {
            Stage::Cleanse | Stage::Synth => None,
            Stage::Infuse => Some(Stage::Cleanse),
            Stage::Embed | Stage::Pip => Some(Stage::Infuse),
            Stage::Graph => Some(Stage::Embed),
            Stage::Filter => Some(Stage::Graph),
            Stage::Sample | Stage::Score => Some(Stage::Filter),
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Stage> {
        Stage::EVERY
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    pub threads: usize,
    /// Accept upstream artifacts from a different configuration.
    pub force: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
            force: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StageReport {
    pub stage: Stage,
    pub elapsed: Duration,
    /// Input and output counts, human readable.
    pub counts: String,
    pub outputs: Vec<PathBuf>,
}

pub struct Pipeline {
    config: PipelineConfig,
    options: RunOptions,
    stopwords: StopwordList,
}

fn delimiter_name(d: u8) -> String {
    match d {
        b'\t' => "tab".into(),
        d => (d as char).to_string(),
    }
}

impl Pipeline {
    pub fn new(config: PipelineConfig, options: RunOptions) -> Result<Pipeline> {
        if options.threads == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        let stopwords = StopwordList::load(&config.stopwords)?;
        Ok(Pipeline {
            config,
            options,
            stopwords,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// The configuration values behind `stage`'s outputs, upstream stages
    /// included. Paths and thread counts are excluded.
    pub fn lineage_params(&self, stage: Stage) -> Vec<(String, String)> {
        let c = &self.config;
        let mut p: Vec<(String, String)> = match stage.parent() {
            Some(parent) => self.lineage_params(parent),
            None => Vec::new(),
        };
        let mut add = |k: &str, v: String| p.push((k.to_string(), v));
        match stage {
            Stage::Cleanse => {
                add("corpus.class_col", c.schema.class_col.clone());
                add("corpus.text_col", c.schema.text_col.clone());
                add("corpus.id_col", c.schema.id_col.clone().unwrap_or_default());
                add("corpus.delimiter", delimiter_name(c.schema.delimiter));
                add("stopwords", self.stopwords.fingerprint());
            }
            Stage::Infuse => add("seed", c.seed.to_string()),
            Stage::Embed => {
                for (k, v) in c.embed.params() {
                    if k != "embed.seed" {
                        add(&k, v);
                    }
                }
            }
            Stage::Graph => {
                add("graph.theta", c.theta.to_string());
                add("graph.max_depth", c.hierarchy.max_depth.to_string());
                add("graph.min_members", c.hierarchy.min_members.to_string());
                add("graph.q_gain_floor", c.hierarchy.q_gain_floor.to_string());
            }
            Stage::Filter | Stage::Score => {}
            Stage::Pip => {
                let alphas: Vec<String> = c.pip.alphas.iter().map(f64::to_string).collect();
                add("pip.alpha", alphas.join(","));
                add("pip.window", c.pip.window.to_string());
                add("pip.max_vocab", c.pip.max_vocab.to_string());
            }
            Stage::Sample => add("sample.per_class", c.sample_per_class.to_string()),
            Stage::Synth => {
                let s = &c.synth;
                add("seed", c.seed.to_string());
                add("synth.classes", s.classes.to_string());
                add("synth.topic_vocab", s.topic_vocab.to_string());
                add("synth.noise_vocab", s.noise_vocab.to_string());
                add("synth.sentences_per_class", s.sentences_per_class.to_string());
                add("synth.noise_ratio", s.noise_ratio.to_string());
                add("synth.min_len", s.min_len.to_string());
                add("synth.max_len", s.max_len.to_string());
                add("synth.sentences_per_doc", s.sentences_per_doc.to_string());
            }
        }
        p
    }

    pub fn lineage(&self, stage: Stage) -> String {
        let canonical: String = self
            .lineage_params(stage)
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect();
        fingerprint(canonical.as_bytes())
    }

    fn header(&self, stage: Stage) -> Header {
        Header::new(self.lineage(stage)).extend(self.lineage_params(stage))
    }

    /// Loads an artifact produced by `producer`, checking its lineage.
    pub fn load_checked<A: Artifact>(&self, path: &Path, producer: Stage) -> Result<(Header, A)> {
        if !path.exists() {
            return Err(Error::MissingArtifact {
                path: path.to_path_buf(),
                producer: producer.name().to_string(),
            });
        }
        let (header, body) = artifact::load::<A>(path)?;
        self.check_lineage(&header, path, producer)?;
        Ok((header, body))
    }

    /// `(inputs, outputs)` of a stage.
    pub fn io(&self, stage: Stage) -> (Vec<PathBuf>, Vec<PathBuf>) {
        let p = &self.config.paths;
        let input = self.config.input.clone().unwrap_or_else(|| PathBuf::from("<input unset>"));
        match stage {
            Stage::Cleanse => (vec![input], vec![p.corpus.clone(), p.cleaned.clone()]),
            Stage::Infuse => (vec![p.cleaned.clone()], vec![p.infused.clone()]),
            Stage::Embed => (vec![p.infused.clone()], vec![p.model.clone()]),
            Stage::Graph => (vec![p.model.clone()], vec![p.graph.clone(), p.hierarchy.clone()]),
            Stage::Filter => (
                vec![p.cleaned.clone(), p.hierarchy.clone()],
                vec![p.verdicts.clone(), p.filtered.clone(), p.summary.clone()],
            ),
            Stage::Pip => {
                let mut out = vec![p.pip.clone()];
                for a in &self.config.pip.alphas {
                    out.push(curve_path(&p.pip, "basic", *a));
                    out.push(curve_path(&p.pip, "infused", *a));
                }
                (vec![p.cleaned.clone(), p.infused.clone()], out)
            }
            Stage::Sample => (vec![p.verdicts.clone()], vec![p.sample.clone()]),
            Stage::Score => {
                let ann = self
                    .config
                    .annotations
                    .clone()
                    .unwrap_or_else(|| PathBuf::from("<annotations unset>"));
                (vec![p.verdicts.clone(), ann], vec![p.report.clone()])
            }
            Stage::Synth => (vec![], vec![p.synth_output.clone(), p.synth_truth.clone()]),
        }
    }

    /// Stages executed by `all`.
    pub fn all_stages(&self) -> Vec<Stage> {
        let mut s = vec![Stage::Cleanse, Stage::Infuse, Stage::Embed, Stage::Graph, Stage::Filter];
        if self.config.pip_enabled {
            s.push(Stage::Pip);
        }
        s
    }

    pub fn plan(&self, stages: &[Stage]) -> Vec<String> {
        let show = |v: &[PathBuf]| {
            if v.is_empty() {
                "-".to_string()
            } else {
                v.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", ")
            }
        };
        stages
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let (inputs, outputs) = self.io(s);
                format!(
                    "{}. {s} [seed {}, lineage {}]: {} -> {}",
                    i + 1,
                    stage_seed(self.config.seed, s.name()),
                    self.lineage(s),
                    show(&inputs),
                    show(&outputs)
                )
            })
            .collect()
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.options.threads)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {} threads: {e}", self.options.threads)))
    }

    /// Runs stages in order, stopping at the first failure.
    pub fn run(&self, stages: &[Stage]) -> Result<Vec<StageReport>> {
        let pool = self.pool()?;
        pool.install(|| {
            stages
                .iter()
                .map(|&s| {
                    let start = Instant::now();
                    let counts = self.execute(s)?;
                    let report = StageReport {
                        stage: s,
                        elapsed: start.elapsed(),
                        counts,
                        outputs: self.io(s).1,
                    };
                    info!("{}: {} in {:.2?}", s, report.counts, report.elapsed);
                    Ok(report)
                })
                .collect()
        })
    }

    pub fn run_stage(&self, stage: Stage) -> Result<StageReport> {
        Ok(self.run(&[stage])?.remove(0))
    }

    pub fn run_all(&self) -> Result<Vec<StageReport>> {
        self.run(&self.all_stages())
    }

    fn ensure_dirs(&self, stage: Stage) -> Result<()> {
        for out in self.io(stage).1 {
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
        }
        Ok(())
    }

    fn execute(&self, stage: Stage) -> Result<String> {
        self.ensure_dirs(stage)?;
        let c = &self.config;
        let p = &c.paths;
        let seed = stage_seed(c.seed, stage.name());
        match stage {
            Stage::Cleanse => {
                let input = c
                    .input
                    .as_deref()
                    .ok_or_else(|| Error::Config("`input` is not set".into()))?;
                let report = load_corpus(input, &c.schema)?;
                for w in &report.warnings {
                    warn!("{w}");
                }
                let bytes = fs::read(input).map_err(|e| Error::io(input, e))?;
                let header = self.header(stage).with("input.sha256", fingerprint(&bytes));
                persist_corpus(&report.corpus, &header, &p.corpus)?;
                let cleaned = clean_corpus(&report.corpus, &self.stopwords);
                artifact::persist(&cleaned, &header, &p.cleaned)?;
                Ok(format!(
                    "{} rows ({} skipped) -> {} documents, {} sentences, {} tokens",
                    report.data_rows,
                    report.skipped(),
                    report.corpus.documents.len(),
                    cleaned.sentences.len(),
                    cleaned.token_count()
                ))
            }
            Stage::Infuse => {
                let (_, cleaned) = self.load_checked::<CleanCorpus>(&p.cleaned, Stage::Cleanse)?;
                let infused = infuse_corpus(&cleaned, &InfusionRng::new(seed))?;
                artifact::persist(&infused, &self.header(stage), &p.infused)?;
                let anchors: usize = infused.sentences.iter().map(|s| s.anchor_count()).sum();
                Ok(format!("{} sentences -> {anchors} anchors inserted", infused.sentences.len()))
            }
            Stage::Embed => {
                let (_, infused) = self.load_checked::<InfusedCorpus>(&p.infused, Stage::Infuse)?;
                let config = TrainConfig {
                    seed,
                    ..c.embed.clone()
                };
                let (model, report) = embed::train(&infused.token_lists(), &config, self.options.threads)?;
                embed::persist_model(&model, self.header(stage), &p.model)?;
                Ok(format!(
                    "{} sentences -> {} words x {} dims, {} pairs, final loss {:.4}",
                    infused.sentences.len(),
                    model.len(),
                    model.dim,
                    report.pairs,
                    report.epoch_losses.last().copied().unwrap_or(f64::NAN)
                ))
            }
            Stage::Graph => {
                if !p.model.exists() {
                    return Err(Error::MissingArtifact {
                        path: p.model.clone(),
                        producer: Stage::Embed.name().into(),
                    });
                }
                let (header, model) = embed::load_model(&p.model)?;
                self.check_lineage(&header, &p.model, Stage::Embed)?;
                let graph = semgraph::build_graph(&model, c.theta)?;
                let hierarchy = recursive_cluster(&graph, seed, &c.hierarchy)?;
                let retained = hierarchy.retained();
                let anchored = retained.communities.iter().filter(|r| r.is_anchored()).count();
                let header = self.header(stage);
                semgraph::persist_graph(&graph, header.clone(), &p.graph)?;
                artifact::persist(&retained, &header.with("root_q", hierarchy.root_q), &p.hierarchy)?;
                Ok(format!(
                    "{} words -> {} edges, {} retained communities ({anchored} anchored)",
                    graph.nodes.len(),
                    graph.edges.len(),
                    retained.communities.len()
                ))
            }
            Stage::Filter => {
                let (_, cleaned) = self.load_checked::<CleanCorpus>(&p.cleaned, Stage::Cleanse)?;
                let (_, retained) = self.load_checked::<RetainedCommunities>(&p.hierarchy, Stage::Graph)?;
                let set = select_anchored(&retained)?;
                let out = filter_corpus(&cleaned, &set)?;
                let header = self.header(stage);
                artifact::persist(&out.verdicts, &header, &p.verdicts)?;
                artifact::persist(&out.filtered, &header, &p.filtered)?;
                out.summary.write_csv(&p.summary)?;
                let noise = out.verdicts.verdicts.iter().filter(|v| v.is_noise).count();
                Ok(format!(
                    "{} sentences, {} anchored communities -> {noise} noise, {} kept, {} emptied documents",
                    cleaned.sentences.len(),
                    set.len(),
                    out.filtered.sentences.len(),
                    out.summary.empty_documents()
                ))
            }
            Stage::Pip => {
                let (_, cleaned) = self.load_checked::<CleanCorpus>(&p.cleaned, Stage::Cleanse)?;
                let (_, infused) = self.load_checked::<InfusedCorpus>(&p.infused, Stage::Infuse)?;
                let config = PipConfig {
                    seed,
                    ..c.pip.clone()
                };
                let cmp = compare_corpora(&cleaned.token_lists(), &infused.token_lists(), &config)?;
                cmp.write_csv(&p.pip)?;
                for (i, &a) in config.alphas.iter().enumerate() {
                    cmp.basic.curves[i].write_csv(&curve_path(&p.pip, "basic", a))?;
                    cmp.infused.curves[i].write_csv(&curve_path(&p.pip, "infused", a))?;
                }
                let ks: Vec<String> = cmp
                    .rows
                    .iter()
                    .map(|r| format!("alpha {}: k* {} -> {}", r.alpha, r.k_star_basic, r.k_star_infused))
                    .collect();
                Ok(format!("n {} / {}; {}", cmp.basic.n, cmp.infused.n, ks.join(", ")))
            }
            Stage::Sample => {
                let (_, verdicts) = self.load_checked::<Verdicts>(&p.verdicts, Stage::Filter)?;
                let manifest: SampleManifest = sample_for_annotation(&verdicts.verdicts, c.sample_per_class, seed);
                for w in &manifest.warnings {
                    warn!("{w}");
                }
                artifact::persist(&manifest, &self.header(stage), &p.sample)?;
                Ok(format!("{} verdicts -> {} sampled", verdicts.verdicts.len(), manifest.entries.len()))
            }
            Stage::Score => {
                let ann_path = c
                    .annotations
                    .as_deref()
                    .ok_or_else(|| Error::Config("`annotations` is not set".into()))?;
                let (_, verdicts) = self.load_checked::<Verdicts>(&p.verdicts, Stage::Filter)?;
                let annotations = evaluate::load_annotations(ann_path)?;
                let report = evaluate::score(&verdicts.verdicts, &annotations)?;
                report.write_csv(&p.report)?;
                let f = |v: Option<f64>| v.map_or_else(|| "undefined".into(), |x| format!("{x:.3}"));
                Ok(format!(
                    "{} annotations -> macro P {} R {} F1 {}",
                    annotations.len(),
                    f(report.macro_precision()),
                    f(report.macro_recall()),
                    f(report.macro_f1())
                ))
            }
            Stage::Synth => {
                let spec = evaluate::SyntheticSpec {
                    seed,
                    ..c.synth.clone()
                };
                let synth = generate_synthetic(&spec)?;
                synth.write_csv(&p.synth_output)?;
                evaluate::write_annotations(&synth.truth, &p.synth_truth)?;
                Ok(format!(
                    "{} documents, {} sentences ({} planted noise)",
                    synth.documents.len(),
                    synth.truth.len(),
                    synth.truth.iter().filter(|a| a.tag).count()
                ))
            }
        }
    }

    fn check_lineage(&self, header: &Header, path: &Path, producer: Stage) -> Result<()> {
        let expected = self.lineage(producer);
        if header.lineage == expected {
            return Ok(());
        }
        let diff: Vec<String> = self
            .lineage_params(producer)
            .into_iter()
            .filter(|(k, v)| header.get(k) != Some(v.as_str()))
            .map(|(k, v)| format!("{k}: artifact has `{}`, config has `{v}`", header.get(&k).unwrap_or("<unset>")))
            .collect();
        if self.options.force {
            warn!("{}: lineage differs, continuing because of --force: {}", path.display(), diff.join("; "));
            return Ok(());
        }
        Err(Error::LineageMismatch {
            path: path.to_path_buf(),
            diff: if diff.is_empty() {
                vec![format!("lineage: artifact has `{}`, config has `{expected}`", header.lineage)]
            } else {
                diff
            },
        })
    }
}

/// `<dir>/<stem>.<corpus>.alpha-<a>.csv` next to the comparison table.
pub fn curve_path(pip: &Path, corpus: &str, alpha: f64) -> PathBuf {
    let stem = pip.file_stem().map_or_else(|| "pip".into(), |s| s.to_string_lossy().into_owned());
    pip.with_file_name(format!("{stem}.{corpus}.alpha-{alpha}.csv"))
}
