// SPDX-License-Identifier: Apache-2.0

//! Optimal embedding dimensionality by PIP loss, used to check that anchor
//! infusion barely moves a corpus's optimal dimensionality.

mod curve;
mod ppmi;
mod spectrum;

use std::io;
use std::path::Path;

pub use curve::{pip_loss_curve, PipLossCurve, PipLossPoint, DEGENERATE_GAP};
pub use ppmi::{build_ppmi, ppmi_over, top_vocabulary, PpmiMatrix};
pub use spectrum::{
    estimate_sigma, estimate_spectrum, half_difference_sigma, NoiseEstimate, SignalSpectrum,
};

use crate::artifact::write_atomic;
use crate::error::{Error, Result};
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct PipConfig {
    /// 0.5 for skip-gram style embeddings, 1.0 for LSA style.
    pub alphas: Vec<f64>,
    pub window: usize,
    pub max_vocab: usize,
    pub seed: u64,
}

impl Default for PipConfig {
    fn default() -> Self {
        PipConfig {
            alphas: vec![0.5, 1.0],
            window: 5,
            max_vocab: 2000,
            seed: 1,
        }
    }
}

impl PipConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() {
            return Err(Error::InvalidParameter("pip.alpha needs at least one value".into()));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::InvalidParameter(format!("pip.alpha must lie in [0, 1], got {a}")));
        }
        if self.window == 0 || self.max_vocab < 2 {
            return Err(Error::InvalidParameter(
                "pip.window must be positive and pip.max_vocab at least 2".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusPip {
    /// Side of the truncated signal matrix.
    pub n: usize,
    pub sigma: NoiseEstimate,
    pub spectrum: SignalSpectrum,
    /// One curve per configured alpha, same order.
    pub curves: Vec<PipLossCurve>,
}

pub fn analyze_corpus(sentences: &[&[String]], config: &PipConfig) -> Result<CorpusPip> {
    config.validate()?;
    let m = build_ppmi(sentences, config.window, config.max_vocab)?;
    let spectrum = estimate_spectrum(&m.values)?;
    let sigma = estimate_sigma(
        sentences,
        config.window,
        &m.words,
        derive_seed(config.seed, &[b"sigma-split"]),
    )?;
    let n = m.words.len();
    let curves = config
        .alphas
        .iter()
        .map(|&a| pip_loss_curve(&spectrum.values, sigma.sigma, a, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(CorpusPip {
        n,
        sigma,
        spectrum,
        curves,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaComparison {
    pub alpha: f64,
    pub k_star_basic: usize,
    pub k_star_infused: usize,
    pub loss_basic: f64,
    pub loss_infused: f64,
}

impl AlphaComparison {
    pub fn delta_k(&self) -> i64 {
        self.k_star_infused as i64 - self.k_star_basic as i64
    }

    /// `|loss_infused − loss_basic| / loss_basic`.
    pub fn relative_loss_change(&self) -> f64 {
        (self.loss_infused - self.loss_basic).abs() / self.loss_basic
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub basic: CorpusPip,
    pub infused: CorpusPip,
    pub rows: Vec<AlphaComparison>,
}

impl Comparison {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, |w| {
            let mut out = csv::Writer::from_writer(w);
            let io_err = |e: csv::Error| io::Error::other(e.to_string());
            out.write_record([
                "alpha",
                "k_star_basic",
                "k_star_infused",
                "delta_k",
                "loss_basic",
                "loss_infused",
                "relative_change",
                "sigma_basic",
                "sigma_infused",
                "n_basic",
                "n_infused",
            ])
            .map_err(io_err)?;
            for r in &self.rows {
                out.write_record([
                    r.alpha.to_string(),
                    r.k_star_basic.to_string(),
                    r.k_star_infused.to_string(),
                    r.delta_k().to_string(),
                    r.loss_basic.to_string(),
                    r.loss_infused.to_string(),
                    r.relative_loss_change().to_string(),
                    self.basic.sigma.sigma.to_string(),
                    self.infused.sigma.sigma.to_string(),
                    self.basic.n.to_string(),
                    self.infused.n.to_string(),
                ])
                .map_err(io_err)?;
            }
            out.flush()
        })
    }
}

/// Runs the estimator independently on both corpora.
pub fn compare_corpora(
    basic: &[&[String]],
    infused: &[&[String]],
    config: &PipConfig,
) -> Result<Comparison> {
    let (b, i) = rayon::join(|| analyze_corpus(basic, config), || analyze_corpus(infused, config));
    let (basic, infused) = (b?, i?);
    let rows = config
        .alphas
        .iter()
        .zip(basic.curves.iter().zip(&infused.curves))
        .map(|(&alpha, (cb, ci))| AlphaComparison {
            alpha,
            k_star_basic: cb.k_star,
            k_star_infused: ci.k_star,
            loss_basic: cb.loss_at_k_star(),
            loss_infused: ci.loss_at_k_star(),
        })
        .collect();
    Ok(Comparison {
        basic,
        infused,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus() -> Vec<Vec<String>> {
        let mut out = Vec::new();
        for i in 0..60 {
            let topic = if i % 2 == 0 { ["brake", "pedal", "stop", "abs"] } else { ["fuel", "tank", "leak", "pump"] };
            out.push(
                (0..6)
                    .map(|j| topic[(i * 7 + j * 3) % 4].to_string())
                    .chain([format!("n{}", i % 5)])
                    .collect(),
            );
        }
        out
    }

    #[test]
    fn identical_corpora_have_zero_shift() {
        let c = corpus();
        let refs: Vec<&[String]> = c.iter().map(Vec::as_slice).collect();
        let cmp = compare_corpora(&refs, &refs, &PipConfig::default()).unwrap();
        for r in &cmp.rows {
            assert_eq!(r.delta_k(), 0);
            assert_eq!(r.relative_loss_change(), 0.0);
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let c = corpus();
        let refs: Vec<&[String]> = c.iter().map(Vec::as_slice).collect();
        let a = analyze_corpus(&refs, &PipConfig::default()).unwrap();
        let b = analyze_corpus(&refs, &PipConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        let bad = PipConfig {
            alphas: vec![0.5, 2.0],
            ..PipConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
