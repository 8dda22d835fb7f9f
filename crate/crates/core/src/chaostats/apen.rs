//! Approximate entropy `Φ_m − Φ_{m+1}`.
//!
//! Templates are delay-embedding rows compared in the infinity norm. Two
//! templates match when their distance is below `R` or they are identical, so
//! every template matches itself and all logarithms are finite.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corrdim::chebyshev;
use super::embed::{delay_embed_channels, EmbeddingSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApEnConfig {
    /// `R = radius_factor × sqrt(Σ_c var_c)`; for one channel this is the standard deviation.
    pub radius_factor: f64,
}

impl Default for ApEnConfig {
    fn default() -> Self {
        Self { radius_factor: 0.2 }
    }
}

fn phi(channels: &[&[f64]], spec: EmbeddingSpec, radius: f64) -> Result<f64> {
    let emb = delay_embed_channels(channels, spec)?;
    let n = emb.len();
    let counts: Vec<usize> = (0..n)
        .into_par_iter()
        .map(|i| {
            let pi = emb.point(i);
            (0..n)
                .filter(|&k| {
                    let d = chebyshev(pi, emb.point(k));
                    d < radius || d == 0.0
                })
                .count()
        })
        .collect();
    Ok(counts.iter().map(|&c| (c as f64 / n as f64).ln()).sum::<f64>() / n as f64)
}

/// Radius used by [`approximate_entropy`] for these channels.
pub fn apen_radius(channels: &[&[f64]], cfg: &ApEnConfig) -> f64 {
    let total_var: f64 = channels
        .iter()
        .map(|c| {
            let n = c.len() as f64;
            let mean = c.iter().sum::<f64>() / n;
            c.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)
        })
        .sum();
    cfg.radius_factor * total_var.sqrt()
}

/// `Φ_{m_e} − Φ_{m_e+1}` on the delay embedding of `channels`.
pub fn approximate_entropy(channels: &[&[f64]], spec: EmbeddingSpec, cfg: &ApEnConfig) -> Result<f64> {
    spec.validate()?;
    let len = channels.first().map(|c| c.len()).unwrap_or(0);
    let needed = spec.dim * spec.lag + 1;
    if len < needed {
        return Err(Error::InsufficientData { required: needed, available: len });
    }
    let radius = apen_radius(channels, cfg);
    let next = EmbeddingSpec::new(spec.dim + 1, spec.lag);
    Ok(phi(channels, spec, radius)? - phi(channels, next, radius)?)
}

/// Brute-force reference kept independent of the parallel path above.
#[cfg(test)]
pub(crate) fn approximate_entropy_naive(series: &[f64], m: usize, lag: usize, radius: f64) -> f64 {
    let phi = |m: usize| {
        let n = series.len() - (m - 1) * lag;
        let mut total = 0.0;
        for i in 0..n {
            let mut count = 0;
            for k in 0..n {
                let mut d: f64 = 0.0;
                for j in 0..m {
                    d = d.max((series[i + j * lag] - series[k + j * lag]).abs());
                }
                if d < radius || d == 0.0 {
                    count += 1;
                }
            }
            total += (count as f64 / n as f64).ln();
        }
        total / n as f64
    };
    phi(m) - phi(m + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_series_is_zero() {
        let s = [3.0; 500];
        assert_eq!(approximate_entropy(&[&s], EmbeddingSpec::new(2, 1), &ApEnConfig::default()).unwrap(), 0.0);
    }

    #[test]
    fn periodic_series_is_regular() {
        let s: Vec<f64> = (0..3000).map(|i| [0.0, 1.0, 2.0, 1.5, -1.0][i % 5]).collect();
        let v = approximate_entropy(&[&s], EmbeddingSpec::new(2, 1), &ApEnConfig::default()).unwrap();
        assert!(v.abs() < 0.05, "{v}");
        let s: Vec<f64> = (0..3000).map(|i| (i as f64 * 2.0 * std::f64::consts::PI / 40.0).sin()).collect();
        let v = approximate_entropy(&[&s], EmbeddingSpec::new(3, 1), &ApEnConfig::default()).unwrap();
        assert!(v.abs() < 0.2, "{v}");
    }

    #[test]
    fn noise_is_irregular_and_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s: Vec<f64> = (0..400).map(|_| rng.random_range(-1.0..1.0)).collect();
        let cfg = ApEnConfig::default();
        let v = approximate_entropy(&[&s], EmbeddingSpec::new(2, 1), &cfg).unwrap();
        let r = apen_radius(&[&s], &cfg);
        assert!((v - approximate_entropy_naive(&s, 2, 1, r)).abs() < 1e-12);
        assert!(v > 0.5, "{v}");
    }

    #[test]
    fn too_short() {
        assert!(approximate_entropy(&[&[1.0, 2.0, 3.0]], EmbeddingSpec::new(3, 1), &ApEnConfig::default()).is_err());
    }
}
