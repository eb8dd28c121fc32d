// SPDX-License-Identifier: Apache-2.0

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use semno::config::{ConfigMap, PipelineConfig, KEYS};
use semno::pipeline::{Pipeline, RunOptions, Stage};
use semno::{Error, Result};

/// Unsupervised semantic-noise filtering for categorical text corpora.
///
/// Any config key can be overridden as `--key=value` or `--key value`, e.g.
/// `--theta 0.7`, `--class-col Category`, `--embed.dim=50`.
#[derive(Parser, Debug)]
#[command(name = "semno", version)]
struct Cli {
    /// cleanse, infuse, embed, graph, filter, pip, sample, score, synth,
    /// `all` for the full pipeline, or `keys` to list config keys
    subcommand: String,

    /// Flat `key = value` config file
    #[arg(long, short)]
    config: Option<PathBuf>,

    /// Worker threads (1 makes every stage deterministic)
    #[arg(long)]
    threads: Option<usize>,

    /// Master seed
    #[arg(long)]
    seed: Option<u64>,

    /// Accept upstream artifacts built from a different configuration
    #[arg(long)]
    force: bool,

    /// Print the stage plan without running it
    #[arg(long)]
    dry_run: bool,
}

const OWN_FLAGS: &[&str] = &["config", "threads", "seed", "force", "dry-run", "help", "version"];
const OWN_SWITCHES: &[&str] = &["force", "dry-run", "help", "version"];

type Split = (Vec<String>, Vec<(String, String)>);

/// Splits arguments into those clap knows and `--key value` overrides.
fn split_overrides(args: Vec<String>) -> Result<Split> {
    let mut own = Vec::new();
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    own.extend(it.next());
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--").filter(|f| !f.is_empty()) else {
            own.push(arg);
            continue;
        };
        let (name, inline) = match flag.split_once('=') {
            Some((n, v)) => (n.to_string(), Some(v.to_string())),
            None => (flag.to_string(), None),
        };
        if OWN_FLAGS.contains(&name.as_str()) {
            own.push(arg.clone());
            if inline.is_none() && !OWN_SWITCHES.contains(&name.as_str()) {
                own.extend(it.next());
            }
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => it
                .next()
                .ok_or_else(|| Error::Config(format!("option `--{name}` needs a value")))?,
        };
        overrides.push((name, value));
    }
    Ok((own, overrides))
}

fn run() -> Result<()> {
    let (own, overrides) = split_overrides(std::env::args().collect())?;
    let cli = match Cli::try_parse_from(own) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            e.print().ok();
            return Ok(());
        }
        Err(e) => return Err(Error::Config(e.to_string().trim_end().to_string())),
    };

    if cli.subcommand == "keys" {
        let mut out = std::io::stdout().lock();
        for (k, default, help) in KEYS {
            writeln!(out, "{k:<26} {:<12} {help}", format!("[{default}]")).ok();
        }
        return Ok(());
    }

    let mut map = match &cli.config {
        Some(path) => ConfigMap::load(path)?,
        None => ConfigMap::default(),
    };
    for (flag, value) in &overrides {
        let key = map.resolve_key(&cli.subcommand, flag)?;
        map.set(&key, value, Path::new(""))?;
    }
    if let Some(seed) = cli.seed {
        map.set("seed", &seed.to_string(), Path::new(""))?;
    }
    let config = PipelineConfig::from_map(&map)?;
    let mut options = RunOptions {
        force: cli.force,
        ..RunOptions::default()
    };
    if let Some(t) = cli.threads {
        options.threads = t;
    }
    let pipeline = Pipeline::new(config, options)?;
    let stages = match cli.subcommand.as_str() {
        "all" => pipeline.all_stages(),
        name => vec![name.parse::<Stage>()?],
    };
    if cli.dry_run {
        let mut out = std::io::stdout().lock();
        for line in pipeline.plan(&stages) {
            writeln!(out, "{line}").ok();
        }
        return Ok(());
    }
    pipeline.run(&stages)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
