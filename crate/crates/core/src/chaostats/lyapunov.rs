//! Largest Lyapunov exponent by nearest-neighbour divergence (Rosenstein).
//!
//! Each point is paired with its Euclidean nearest neighbour at least
//! `min_separation` samples away in time; the mean log distance of the pairs
//! `k` samples later is fitted against `k·dt` over `[k_min, k_max]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::embed::Embedding;
use super::linear_fit_slope;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapConfig {
    pub k_min: usize,
    pub k_max: usize,
    /// Temporal exclusion for neighbour search; `None` picks the first ACF zero crossing.
    pub min_separation: Option<usize>,
}

impl Default for LyapConfig {
    fn default() -> Self {
        Self { k_min: 1, k_max: 50, min_separation: None }
    }
}

impl LyapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_min == 0 || self.k_min > self.k_max {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= k_min <= k_max, got {}..{}",
                self.k_min, self.k_max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovResult {
    /// Exponent in 1/time units of `dt`.
    pub exponent: f64,
    /// Mean `ln ‖Y_{i+k} − Y_{i*+k}‖` for `k = 0..=k_max`.
    pub divergence: Vec<f64>,
    pub min_separation: usize,
    pub pairs: usize,
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Largest Lyapunov exponent of the embedded points sampled every `dt`.
///
/// `min_separation` must already be resolved (see [`LyapConfig::min_separation`]).
pub fn lyapunov_exponent(emb: &Embedding, dt: f64, cfg: &LyapConfig, min_separation: usize) -> Result<LyapunovResult> {
    cfg.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter("dt must be positive".into()));
    }
    let n = emb.len();
    if n <= cfg.k_max + 1 {
        return Err(Error::InsufficientData { required: cfg.k_max + 2, available: n });
    }
    let usable = n - cfg.k_max;

    let neighbours: Vec<Option<usize>> = (0..usable)
        .into_par_iter()
        .map(|i| {
            let pi = emb.point(i);
            let mut best: Option<(usize, f64)> = None;
            for j in 0..usable {
                if i.abs_diff(j) <= min_separation {
                    continue;
                }
                let d = sq_dist(pi, emb.point(j));
                if d > 0.0 && best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((j, d));
                }
            }
            best.map(|(j, _)| j)
        })
        .collect();

    let mut sums = vec![0.0f64; cfg.k_max + 1];
    let mut counts = vec![0usize; cfg.k_max + 1];
    let mut pairs = 0;
    for (i, nb) in neighbours.iter().enumerate() {
        let Some(j) = *nb else { continue };
        pairs += 1;
        for k in 0..=cfg.k_max {
            let d = sq_dist(emb.point(i + k), emb.point(j + k));
            if d > 0.0 {
                sums[k] += 0.5 * d.ln();
                counts[k] += 1;
            }
        }
    }
    if pairs == 0 {
        return Err(Error::NoNeighbors);
    }
    let divergence: Vec<f64> =
        sums.iter().zip(&counts).map(|(s, &c)| if c > 0 { s / c as f64 } else { f64::NAN }).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        (cfg.k_min..=cfg.k_max).filter(|&k| divergence[k].is_finite()).map(|k| (k as f64 * dt, divergence[k])).unzip();
    if xs.len() < 2 {
        return Err(Error::NoNeighbors);
    }
    Ok(LyapunovResult { exponent: linear_fit_slope(&xs, &ys), divergence, min_separation, pairs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaostats::embed::{delay_embed_series, EmbeddingSpec};

    #[test]
    fn sinusoid_has_zero_exponent() {
        let dt = 0.01;
        let s: Vec<f64> = (0..5000).map(|i| (2.0 * std::f64::consts::PI * 0.5 * i as f64 * dt).sin()).collect();
        let e = delay_embed_series(&s, EmbeddingSpec::new(3, 1)).unwrap();
        let r = lyapunov_exponent(&e, dt, &LyapConfig::default(), 50).unwrap();
        assert!(r.exponent.abs() < 0.5, "{}", r.exponent);
    }

    #[test]
    fn logistic_map_is_chaotic() {
        // λ = ln 2 per iteration for r = 4.
        let mut x = 0.3f64;
        let s: Vec<f64> = (0..3000)
            .map(|_| {
                x = 4.0 * x * (1.0 - x);
                x
            })
            .collect();
        let e = delay_embed_series(&s, EmbeddingSpec::new(2, 1)).unwrap();
        let cfg = LyapConfig { k_min: 1, k_max: 4, min_separation: None };
        let r = lyapunov_exponent(&e, 1.0, &cfg, 5).unwrap();
        assert!(r.exponent > 0.3, "{}", r.exponent);
    }

    #[test]
    fn no_neighbours() {
        let e = Embedding::from_points((0..60).map(f64::from).collect(), 1).unwrap();
        assert!(matches!(
            lyapunov_exponent(&e, 0.1, &LyapConfig { k_min: 1, k_max: 5, min_separation: None }, 100),
            Err(Error::NoNeighbors)
        ));
        assert!(lyapunov_exponent(&e, 0.1, &LyapConfig { k_min: 3, k_max: 2, min_separation: None }, 1).is_err());
    }
}
