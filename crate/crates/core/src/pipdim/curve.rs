// SPDX-License-Identifier: Apache-2.0

//! Bias-variance estimate of the PIP loss `‖EEᵀ − ÊÊᵀ‖` as a function of
//! the embedding dimensionality `k`, for embeddings `E = U D^α`.

use std::io;
use std::path::Path;

use crate::artifact::write_atomic;
use crate::error::{Error, Result};

/// Spectral gaps narrower than this are left out of the perturbation sum.
pub const DEGENERATE_GAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipLossPoint {
    pub k: usize,
    pub bias: f64,
    pub variance1: f64,
    pub variance2: f64,
}

impl PipLossPoint {
    pub fn total(&self) -> f64 {
        self.bias + self.variance1 + self.variance2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipLossCurve {
    pub alpha: f64,
    pub sigma: f64,
    /// Side length of the signal matrix.
    pub n: usize,
    /// One point per `k = 1..=d`, `d` the number of positive singular values.
    pub points: Vec<PipLossPoint>,
    pub k_star: usize,
    /// Pairs of singular values skipped as degenerate.
    pub degenerate_gaps: usize,
}

impl PipLossCurve {
    pub fn loss_at(&self, k: usize) -> f64 {
        self.points[k - 1].total()
    }

    pub fn loss_at_k_star(&self) -> f64 {
        self.loss_at(self.k_star)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, |w| {
            let mut out = csv::WriterBuilder::new().flexible(true).from_writer(w);
            let io_err = |e: csv::Error| io::Error::other(e.to_string());
            out.write_record(["k", "bias", "variance1", "variance2", "total"])
                .map_err(io_err)?;
            for p in &self.points {
                out.write_record([
                    p.k.to_string(),
                    p.bias.to_string(),
                    p.variance1.to_string(),
                    p.variance2.to_string(),
                    p.total().to_string(),
                ])
                .map_err(io_err)?;
            }
            out.write_record(["k_star", "loss_at_k_star"]).map_err(io_err)?;
            out.write_record([self.k_star.to_string(), self.loss_at_k_star().to_string()])
                .map_err(io_err)?;
            out.flush()
        })
    }
}

/// Evaluates the three-term estimate for every `k` up to the number of
/// positive singular values:
///
/// ```text
/// bias(k)      = √(Σ_{i>k} λᵢ^{4α})
/// variance1(k) = 2√(2n)·α·σ·√(Σ_{i≤k} λᵢ^{4α−2})
/// variance2(k) = √2·Σ_{i≤k} (λᵢ^{2α} − λ_{i+1}^{2α})·σ·√(Σ_{r≤i<s} (λ_r − λ_s)^{−2})
/// ```
///
/// with `λ_{d+1} = 0`. `k_star` is the smallest `k` attaining the minimum.
pub fn pip_loss_curve(spectrum: &[f64], sigma: f64, alpha: f64, n: usize) -> Result<PipLossCurve> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("pip.alpha must lie in [0, 1], got {alpha}")));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma must be finite and non-negative, got {sigma}")));
    }
    if spectrum.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::NonFinite);
    }
    if spectrum.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidParameter("spectrum must be non-increasing".into()));
    }
    let lambda = spectrum;
    let full = lambda.len();
    let d = lambda.iter().take_while(|&&v| v > 0.0).count();
    if d == 0 {
        return Err(Error::Empty("spectrum has no positive singular value".into()));
    }

    // tail[i] = Σ_{j≥i} λⱼ^{4α}
    let mut tail = vec![0.0; full + 1];
    for i in (0..full).rev() {
        tail[i] = tail[i + 1] + lambda[i].powf(4.0 * alpha);
    }

    // gap_sum[i] = Σ_{r≤i<s} (λ_r − λ_s)^{−2}, all terms added as positives.
    let mut gap_sum = vec![0.0; d];
    let mut degenerate = 0usize;
    for r in 0..d {
        let mut acc = 0.0;
        for i in (r..full).rev() {
            if i < d {
                gap_sum[i] += acc;
            }
            if i > r {
                let gap = lambda[r] - lambda[i];
                if gap.abs() < DEGENERATE_GAP {
                    degenerate += 1;
                } else {
                    acc += gap.powi(-2);
                }
            }
        }
    }

    let nf = n as f64;
    let mut points = Vec::with_capacity(d);
    let mut head = 0.0;
    let mut v2 = 0.0;
    for i in 0..d {
        head += lambda[i].powf(4.0 * alpha - 2.0);
        let next = if i + 1 < full { lambda[i + 1] } else { 0.0 };
        v2 += (lambda[i].powf(2.0 * alpha) - next.powf(2.0 * alpha)) * sigma * gap_sum[i].sqrt();
        points.push(PipLossPoint {
            k: i + 1,
            bias: tail[i + 1].max(0.0).sqrt(),
            variance1: 2.0 * (2.0 * nf).sqrt() * alpha * sigma * head.sqrt(),
            variance2: 2f64.sqrt() * v2,
        });
    }
    if points.iter().any(|p| !p.total().is_finite()) {
        return Err(Error::NonFinite);
    }
    let k_star = points
        .iter()
        .fold(&points[0], |best, p| if p.total() < best.total() { p } else { best })
        .k;
    Ok(PipLossCurve {
        alpha,
        sigma,
        n,
        points,
        k_star,
        degenerate_gaps: degenerate,
    })
}
