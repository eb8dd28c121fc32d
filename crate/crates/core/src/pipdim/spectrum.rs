// SPDX-License-Identifier: Apache-2.0

use nalgebra::DMatrix;
use rand::seq::SliceRandom;

use super::ppmi::ppmi_over;
use crate::error::{Error, Result};
use crate::seed::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpectrum {
    /// Singular values, non-increasing.
    pub values: Vec<f64>,
    pub kind: String,
}

/// Singular values of a symmetric matrix, i.e. its absolute eigenvalues
/// sorted in non-increasing order.
pub fn estimate_spectrum(m: &DMatrix<f64>) -> Result<SignalSpectrum> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if !m.is_square() {
        return Err(Error::InvalidParameter("signal matrix must be square".into()));
    }
    let scale = m.amax().max(1.0);
    for i in 0..m.nrows() {
        for j in i + 1..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-9 * scale {
                return Err(Error::InvalidParameter("signal matrix must be symmetric".into()));
            }
        }
    }
    let eig = m.clone().symmetric_eigen();
    let mut values: Vec<f64> = eig.eigenvalues.iter().map(|v| v.abs()).collect();
    values.sort_unstable_by(|a, b| b.total_cmp(a));
    Ok(SignalSpectrum {
        values,
        kind: "ppmi".into(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseEstimate {
    pub sigma: f64,
    pub method: &'static str,
}

/// Half the per-entry RMS difference of two matrices that estimate the same
/// signal.
pub fn half_difference_sigma(m1: &DMatrix<f64>, m2: &DMatrix<f64>) -> f64 {
    let entries = (m1.nrows() * m1.ncols()) as f64;
    (m1 - m2).norm() / (2.0 * entries.sqrt())
}

/// Splits the sentences into two random halves, builds the PPMI matrix of
/// each over `words`, and compares them.
pub fn estimate_sigma(
    sentences: &[&[String]],
    window: usize,
    words: &[String],
    seed: u64,
) -> Result<NoiseEstimate> {
    if sentences.len() < 2 {
        return Err(Error::Empty(format!(
            "noise estimate needs at least 2 sentences, got {}",
            sentences.len()
        )));
    }
    let mut order: Vec<usize> = (0..sentences.len()).collect();
    order.shuffle(&mut rng(seed));
    let (a, b) = order.split_at(sentences.len() / 2);
    let pick = |ids: &[usize]| ids.iter().map(|&i| sentences[i]).collect::<Vec<_>>();
    let m1 = ppmi_over(&pick(a), window, words)?;
    let m2 = ppmi_over(&pick(b), window, words)?;
    Ok(NoiseEstimate {
        sigma: half_difference_sigma(&m1, &m2),
        method: "split-half-ppmi",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn diagonal_spectra() {
        let s = estimate_spectrum(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(s.values, [1.0, 1.0, 1.0]);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -3.0, 2.0]));
        assert_eq!(estimate_spectrum(&d).unwrap().values, [3.0, 2.0, 1.0]);
    }

    #[test]
    fn rejects_bad_input() {
        let mut m = DMatrix::<f64>::identity(2, 2);
        m[(0, 1)] = f64::NAN;
        assert!(matches!(estimate_spectrum(&m), Err(Error::NonFinite)));
        m[(0, 1)] = 1.0;
        assert!(estimate_spectrum(&m).is_err());
    }

    #[test]
    fn identical_halves_give_zero() {
        let s: Vec<Vec<String>> = ["a b c", "a b c"]
            .iter()
            .map(|l| l.split(' ').map(str::to_string).collect())
            .collect();
        let refs: Vec<&[String]> = s.iter().map(Vec::as_slice).collect();
        let words: Vec<String> = ["a", "b", "c"].iter().map(|w| w.to_string()).collect();
        assert_eq!(estimate_sigma(&refs, 2, &words, 3).unwrap().sigma, 0.0);
        assert!(estimate_sigma(&refs[..1], 2, &words, 3).is_err());
    }

    #[test]
    fn recovers_known_noise_scale() {
        let mut r = rng(11);
        let n = 30;
        let s = 0.2;
        let signal = DMatrix::<f64>::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
        let noise = Normal::new(0.0, s).unwrap();
        let mut total = 0.0;
        for _ in 0..20 {
            let m1 = DMatrix::from_fn(n, n, |i, j| signal[(i, j)] + noise.sample(&mut r));
            let m2 = DMatrix::from_fn(n, n, |i, j| signal[(i, j)] + noise.sample(&mut r));
            total += half_difference_sigma(&m1, &m2);
        }
        let mean = total / 20.0;
        let expected = s / 2f64.sqrt();
        assert!((mean - expected).abs() < 0.25 * expected, "{mean} vs {expected}");
    }
}
