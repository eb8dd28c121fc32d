// SPDX-License-Identifier: Apache-2.0

//! Skip-gram with negative sampling.
//!
//! For a center word with input vector `v`, an observed context word with
//! output vector `u⁺` and sampled noise words `u⁻ⱼ`, the per-pair loss is
//!
//! ```text
//! L = -ln σ(v·u⁺) - Σⱼ ln σ(-v·u⁻ⱼ)
//! ```
//!
//! Noise words are drawn from the unigram distribution raised to 0.75.
//! Windows never cross sentence boundaries.

use std::sync::atomic::{AtomicBool, AtomicU32, AtomicU64, Ordering};

use num_traits::Float;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use super::vocab::Vocabulary;
use super::EmbeddingModel;
use crate::error::{Error, Result};
use crate::infuse::is_anchor;
use crate::seed::{derive_seed, rng};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f32,
    /// Frequency subsampling threshold; anchors are never subsampled.
    pub subsample: f64,
    pub min_count: u64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 100,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            subsample: 1e-3,
            min_count: 5,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dim", self.dim),
            ("window", self.window),
            ("negatives", self.negatives),
            ("epochs", self.epochs),
            ("min_count", self.min_count as usize),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidParameter(format!("embed.{name} must be positive")));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter("embed.learning_rate must be positive".into()));
        }
        if !(self.subsample > 0.0 && self.subsample.is_finite()) {
            return Err(Error::InvalidParameter("embed.subsample must be positive".into()));
        }
        Ok(())
    }

    pub fn params(&self) -> Vec<(String, String)> {
        vec![
            ("embed.dim".into(), self.dim.to_string()),
            ("embed.window".into(), self.window.to_string()),
            ("embed.negatives".into(), self.negatives.to_string()),
            ("embed.epochs".into(), self.epochs.to_string()),
            ("embed.learning_rate".into(), self.learning_rate.to_string()),
            ("embed.subsample".into(), self.subsample.to_string()),
            ("embed.min_count".into(), self.min_count.to_string()),
            ("embed.seed".into(), self.seed.to_string()),
        ]
    }

    /// Reads back what [`TrainConfig::params`] wrote; missing keys keep defaults.
    pub fn from_params<'a, I>(params: I) -> Result<TrainConfig, String>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        fn p<T: std::str::FromStr>(k: &str, v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("bad value `{v}` for {k}"))
        }
        let mut c = TrainConfig::default();
        for (k, v) in params {
            match k {
                "embed.dim" => c.dim = p(k, v)?,
                "embed.window" => c.window = p(k, v)?,
                "embed.negatives" => c.negatives = p(k, v)?,
                "embed.epochs" => c.epochs = p(k, v)?,
                "embed.learning_rate" => c.learning_rate = p(k, v)?,
                "embed.subsample" => c.subsample = p(k, v)?,
                "embed.min_count" => c.min_count = p(k, v)?,
                "embed.seed" => c.seed = p(k, v)?,
                _ => {}
            }
        }
        Ok(c)
    }
}

pub fn sigmoid<F: Float>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

/// `ln σ(x)` without overflow for large `|x|`.
pub fn log_sigmoid<F: Float>(x: F) -> F {
    if x >= F::zero() {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn dot<F: Float>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Loss of one (center, context, negatives) sample. `negatives` holds the
/// noise vectors back to back.
pub fn pair_loss<F: Float>(center: &[F], context: &[F], negatives: &[F]) -> F {
    let mut loss = -log_sigmoid(dot(center, context));
    for neg in negatives.chunks_exact(center.len()) {
        loss = loss - log_sigmoid(-dot(center, neg));
    }
    loss
}

/// Loss and its gradient with respect to every vector involved. Gradient
/// buffers are overwritten; `g_negatives` mirrors the layout of `negatives`.
pub fn pair_loss_and_gradients<F: Float>(
    center: &[F],
    context: &[F],
    negatives: &[F],
    g_center: &mut [F],
    g_context: &mut [F],
    g_negatives: &mut [F],
) -> F {
    let dim = center.len();
    let z = dot(center, context);
    let mut loss = -log_sigmoid(z);
    let coeff = sigmoid(z) - F::one();
    for i in 0..dim {
        g_center[i] = coeff * context[i];
        g_context[i] = coeff * center[i];
    }
    for (neg, g_neg) in negatives
        .chunks_exact(dim)
        .zip(g_negatives.chunks_exact_mut(dim))
    {
        let z = dot(center, neg);
        loss = loss - log_sigmoid(-z);
        let c = sigmoid(z);
        for i in 0..dim {
            g_center[i] = g_center[i] + c * neg[i];
            g_neg[i] = c * center[i];
        }
    }
    loss
}

/// Row-major `f32` matrix that several workers may update without locks.
/// Updates are relaxed load/store pairs: concurrent writers can lose each
/// other's updates, which SGD tolerates.
struct SharedMatrix {
    data: Vec<AtomicU32>,
    dim: usize,
}

impl SharedMatrix {
    fn from_values(values: Vec<f32>, dim: usize) -> Self {
        SharedMatrix {
            data: values.into_iter().map(|v| AtomicU32::new(v.to_bits())).collect(),
            dim,
        }
    }

    fn read_row(&self, row: usize, out: &mut [f32]) {
        let base = row * self.dim;
        for (o, cell) in out.iter_mut().zip(&self.data[base..base + self.dim]) {
            *o = f32::from_bits(cell.load(Ordering::Relaxed));
        }
    }

    fn add_scaled(&self, row: usize, delta: &[f32], scale: f32) {
        let base = row * self.dim;
        for (d, cell) in delta.iter().zip(&self.data[base..base + self.dim]) {
            let v = f32::from_bits(cell.load(Ordering::Relaxed)) + scale * d;
            cell.store(v.to_bits(), Ordering::Relaxed);
        }
    }

    fn into_values(self) -> Vec<f32> {
        self.data
            .into_iter()
            .map(|c| f32::from_bits(c.into_inner()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean per-pair loss of each epoch.
    pub epoch_losses: Vec<f64>,
    pub pairs: u64,
    pub workers: usize,
}

struct Shared<'a> {
    config: &'a TrainConfig,
    input: SharedMatrix,
    output: SharedMatrix,
    keep_prob: Vec<f64>,
    noise: Option<WeightedAliasIndex<f64>>,
    processed: AtomicU64,
    total_words: u64,
    diverged: AtomicBool,
}

impl Shared<'_> {
    fn learning_rate(&self) -> f32 {
        let done = self.processed.load(Ordering::Relaxed) as f64;
        let planned = (self.total_words * self.config.epochs as u64).max(1) as f64;
        let frac = (1.0 - done / planned).max(1e-4);
        self.config.learning_rate * frac as f32
    }
}

struct Scratch {
    center: Vec<f32>,
    context: Vec<f32>,
    negatives: Vec<f32>,
    g_center: Vec<f32>,
    g_context: Vec<f32>,
    g_negatives: Vec<f32>,
    neg_ids: Vec<usize>,
    kept: Vec<usize>,
}

impl Scratch {
    fn new(dim: usize, negatives: usize) -> Self {
        Scratch {
            center: vec![0.0; dim],
            context: vec![0.0; dim],
            negatives: vec![0.0; dim * negatives],
            g_center: vec![0.0; dim],
            g_context: vec![0.0; dim],
            g_negatives: vec![0.0; dim * negatives],
            neg_ids: Vec::with_capacity(negatives),
            kept: Vec::new(),
        }
    }
}

/// Trains on `sentences` with `workers` threads. One worker gives bitwise
/// reproducible output for a fixed seed.
pub fn train(
    sentences: &[&[String]],
    config: &TrainConfig,
    workers: usize,
) -> Result<(EmbeddingModel, TrainReport)> {
    config.validate()?;
    let vocab = Vocabulary::build(sentences.iter().copied(), config.min_count)?;
    if vocab.is_empty() {
        return Err(Error::Empty(format!(
            "no word reaches min_count {}",
            config.min_count
        )));
    }
    let encoded: Vec<Vec<usize>> = sentences
        .iter()
        .map(|s| s.iter().filter_map(|t| vocab.id(t)).collect())
        .filter(|s: &Vec<usize>| !s.is_empty())
        .collect();
    let total_words: u64 = encoded.iter().map(|s| s.len() as u64).sum();

    let dim = config.dim;
    let mut init_rng = rng(derive_seed(config.seed, &[b"init"]));
    let half = 0.5 / dim as f32;
    let input: Vec<f32> = (0..vocab.len() * dim)
        .map(|_| init_rng.random_range(-half..half))
        .collect();

    let shared = Shared {
        config,
        input: SharedMatrix::from_values(input, dim),
        output: SharedMatrix::from_values(vec![0.0; vocab.len() * dim], dim),
        keep_prob: keep_probabilities(&vocab, config.subsample),
        noise: noise_distribution(&vocab),
        processed: AtomicU64::new(0),
        total_words,
        diverged: AtomicBool::new(false),
    };

    let workers = workers.max(1).min(encoded.len().max(1));
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut pairs_total = 0u64;
    let mut order: Vec<&[usize]> = encoded.iter().map(Vec::as_slice).collect();
    for epoch in 0..config.epochs {
        // Corpora often arrive sorted by class; a fixed order would leave the
        // last classes' words with the freshest updates.
        order.shuffle(&mut rng(derive_seed(config.seed, &[b"order", &(epoch as u64).to_le_bytes()])));
        let chunk = order.len().div_ceil(workers).max(1);
        let results: Vec<(f64, u64)> = if workers == 1 {
            vec![run_worker(&shared, &order, epoch, 0)]
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> = order
                    .chunks(chunk)
                    .enumerate()
                    .map(|(w, part)| {
                        let shared = &shared;
                        scope.spawn(move || run_worker(shared, part, epoch, w))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("training worker panicked"))
                    .collect()
            })
        };
        if shared.diverged.load(Ordering::Relaxed) {
            return Err(Error::Diverged { epoch: epoch + 1 });
        }
        let (loss, pairs) = results
            .iter()
            .fold((0.0, 0u64), |(l, p), &(wl, wp)| (l + wl, p + wp));
        pairs_total += pairs;
        epoch_losses.push(if pairs > 0 { loss / pairs as f64 } else { 0.0 });
    }

    let vectors = shared.input.into_values();
    if vectors.iter().any(|v| !v.is_finite()) {
        return Err(Error::Diverged {
            epoch: config.epochs,
        });
    }
    let model = EmbeddingModel {
        words: vocab.words().to_vec(),
        dim,
        vectors,
        config: config.clone(),
    };
    Ok((
        model,
        TrainReport {
            epoch_losses,
            pairs: pairs_total,
            workers,
        },
    ))
}

fn keep_probabilities(vocab: &Vocabulary, threshold: f64) -> Vec<f64> {
    let total = vocab.total() as f64;
    vocab
        .words()
        .iter()
        .zip(vocab.counts())
        .map(|(w, &c)| {
            if is_anchor(w) {
                return 1.0;
            }
            let ratio = c as f64 / (threshold * total);
            ((ratio.sqrt() + 1.0) / ratio).min(1.0)
        })
        .collect()
}

fn noise_distribution(vocab: &Vocabulary) -> Option<WeightedAliasIndex<f64>> {
    let weights: Vec<f64> = vocab.counts().iter().map(|&c| (c as f64).powf(0.75)).collect();
    WeightedAliasIndex::new(weights).ok()
}

fn run_worker(shared: &Shared<'_>, sentences: &[&[usize]], epoch: usize, worker: usize) -> (f64, u64) {
    let config = shared.config;
    let mut rng: ChaCha8Rng = rng(derive_seed(
        config.seed,
        &[b"train", &(epoch as u64).to_le_bytes(), &(worker as u64).to_le_bytes()],
    ));
    let mut s = Scratch::new(config.dim, config.negatives);
    let (mut loss_sum, mut pairs) = (0.0f64, 0u64);
    for sentence in sentences {
        if shared.diverged.load(Ordering::Relaxed) {
            break;
        }
        let lr = shared.learning_rate();
        s.kept.clear();
        for &w in sentence.iter() {
            let p = shared.keep_prob[w];
            if p >= 1.0 || rng.random::<f64>() < p {
                s.kept.push(w);
            }
        }
        for pos in 0..s.kept.len() {
            let center = s.kept[pos];
            let reach = rng.random_range(1..=config.window);
            let lo = pos.saturating_sub(reach);
            let hi = (pos + reach).min(s.kept.len() - 1);
            for ctx_pos in lo..=hi {
                if ctx_pos == pos {
                    continue;
                }
                let context = s.kept[ctx_pos];
                s.neg_ids.clear();
                if let Some(noise) = &shared.noise {
                    for _ in 0..config.negatives {
                        let n = noise.sample(&mut rng);
                        if n != context {
                            s.neg_ids.push(n);
                        }
                    }
                }
                let loss = sgd_step(shared, &mut s, center, context, lr);
                if !loss.is_finite() {
                    shared.diverged.store(true, Ordering::Relaxed);
                    return (loss_sum, pairs);
                }
                loss_sum += loss as f64;
                pairs += 1;
            }
        }
        shared
            .processed
            .fetch_add(sentence.len() as u64, Ordering::Relaxed);
    }
    (loss_sum, pairs)
}

fn sgd_step(shared: &Shared<'_>, s: &mut Scratch, center: usize, context: usize, lr: f32) -> f32 {
    let dim = shared.config.dim;
    let k = s.neg_ids.len();
    shared.input.read_row(center, &mut s.center);
    shared.output.read_row(context, &mut s.context);
    for (j, &n) in s.neg_ids.iter().enumerate() {
        shared.output.read_row(n, &mut s.negatives[j * dim..(j + 1) * dim]);
    }
    let loss = pair_loss_and_gradients(
        &s.center,
        &s.context,
        &s.negatives[..k * dim],
        &mut s.g_center,
        &mut s.g_context,
        &mut s.g_negatives[..k * dim],
    );
    shared.output.add_scaled(context, &s.g_context, -lr);
    for (j, &n) in s.neg_ids.iter().enumerate() {
        shared
            .output
            .add_scaled(n, &s.g_negatives[j * dim..(j + 1) * dim], -lr);
    }
    shared.input.add_scaled(center, &s.g_center, -lr);
    loss
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(lines: &[&str]) -> Vec<Vec<String>> {
        lines
            .iter()
            .map(|l| l.split_whitespace().map(str::to_string).collect())
            .collect()
    }

    fn small_config() -> TrainConfig {
        TrainConfig {
            dim: 16,
            epochs: 3,
            min_count: 1,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn log_sigmoid_is_stable() {
        assert!((log_sigmoid(0.0f64) - 0.5f64.ln()).abs() < 1e-15);
        assert!(log_sigmoid(-800.0f64).is_finite());
        assert!((log_sigmoid(-800.0f64) + 800.0).abs() < 1e-9);
        assert_eq!(log_sigmoid(800.0f64), 0.0);
        assert!((sigmoid(3.0f64) + sigmoid(-3.0f64) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_word_corpus_trains() {
        let c = corpus(&["brakes", "brakes brakes"]);
        let refs: Vec<&[String]> = c.iter().map(Vec::as_slice).collect();
        let (m, _) = train(&refs, &small_config(), 1).unwrap();
        assert_eq!(m.words, ["brakes"]);
        assert!(m.vectors.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn single_worker_is_bitwise_deterministic() {
        let c = corpus(&["a b c d e f", "b c d a", "e f a b c", "f e d c b a"]);
        let refs: Vec<&[String]> = c.iter().map(Vec::as_slice).collect();
        let (m1, r1) = train(&refs, &small_config(), 1).unwrap();
        let (m2, r2) = train(&refs, &small_config(), 1).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(r1, r2);
    }

    #[test]
    fn runaway_learning_rate_is_reported() {
        let c = corpus(&["a b c d e f g h"; 50]);
        let refs: Vec<&[String]> = c.iter().map(Vec::as_slice).collect();
        let cfg = TrainConfig {
            learning_rate: 1e30,
            ..small_config()
        };
        assert!(matches!(train(&refs, &cfg, 1), Err(Error::Diverged { .. })));
    }

    #[test]
    fn invalid_config_rejected() {
        let c = corpus(&["a b"]);
        let refs: Vec<&[String]> = c.iter().map(Vec::as_slice).collect();
        for cfg in [
            TrainConfig { dim: 0, ..small_config() },
            TrainConfig { learning_rate: -1.0, ..small_config() },
            TrainConfig { window: 0, ..small_config() },
        ] {
            assert!(matches!(train(&refs, &cfg, 1), Err(Error::InvalidParameter(_))));
        }
    }

    #[test]
    fn params_round_trip() {
        let cfg = TrainConfig {
            dim: 7,
            learning_rate: 0.0125,
            subsample: 1e-4,
            seed: 99,
            ..TrainConfig::default()
        };
        let params = cfg.params();
        let back = TrainConfig::from_params(params.iter().map(|(k, v)| (k.as_str(), v.as_str()))).unwrap();
        assert_eq!(back, cfg);
    }
}
