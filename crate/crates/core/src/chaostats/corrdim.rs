//! Grassberger–Procaccia correlation dimension with infinity-norm distances.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::embed::Embedding;
use super::linear_fit_slope;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrDimConfig {
    /// Points kept after uniform-stride subsampling.
    pub n_points: usize,
    /// Number of log-spaced radii.
    pub n_radii: usize,
    /// Radii span these quantiles of the pairwise distances.
    pub lower_quantile: f64,
    pub upper_quantile: f64,
    /// Central fraction of the log-radius range used for the slope fit.
    pub fit_window: f64,
}

impl Default for CorrDimConfig {
    fn default() -> Self {
        Self { n_points: 2000, n_radii: 20, lower_quantile: 0.001, upper_quantile: 0.1, fit_window: 1.0 }
    }
}

impl CorrDimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_points < 100 || self.n_radii < 10 {
            return Err(Error::InvalidParameter("corr-dim needs n_points >= 100 and n_radii >= 10".into()));
        }
        if !(0.0 <= self.lower_quantile && self.lower_quantile < self.upper_quantile && self.upper_quantile <= 1.0) {
            return Err(Error::InvalidParameter("corr-dim quantiles must satisfy 0 <= lower < upper <= 1".into()));
        }
        if !(self.fit_window > 0.0 && self.fit_window <= 1.0) {
            return Err(Error::InvalidParameter("fit_window must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrDimResult {
    pub dimension: f64,
    /// Natural log of each radius.
    pub log_r: Vec<f64>,
    /// Natural log of `C(R)`; `-inf` where no pair is closer than `R`.
    pub log_c: Vec<f64>,
    /// Index range `[start, end)` of the radii used in the fit.
    pub fit_range: (usize, usize),
}

#[inline]
pub(crate) fn chebyshev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Sorted infinity-norm distances of all unordered pairs.
fn sorted_pair_distances(emb: &Embedding) -> Vec<f64> {
    let n = emb.len();
    let mut d: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let pi = emb.point(i);
            (i + 1..n).map(move |k| chebyshev(pi, emb.point(k)))
        })
        .collect();
    d.par_sort_unstable_by(f64::total_cmp);
    d
}

/// `C(R) = 2 / (N (N − 1)) Σ_i N_i(R)` with `N_i(R) = #{k ≠ i : ‖Y_i − Y_k‖_∞ < R}`.
pub fn correlation_integral(emb: &Embedding, radii: &[f64]) -> Vec<f64> {
    let d = sorted_pair_distances(emb);
    integral_from_sorted(&d, radii)
}

fn integral_from_sorted(sorted: &[f64], radii: &[f64]) -> Vec<f64> {
    let pairs = sorted.len().max(1) as f64;
    radii.iter().map(|&r| sorted.partition_point(|&x| x < r) as f64 / pairs).collect()
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

/// Slope of `log C(R)` against `log R` over the configured radius window.
pub fn correlation_dimension(emb: &Embedding, cfg: &CorrDimConfig) -> Result<CorrDimResult> {
    cfg.validate()?;
    let sub = emb.subsample(cfg.n_points);
    if sub.len() < 3 {
        return Err(Error::InsufficientData { required: 3, available: sub.len() });
    }
    let d = sorted_pair_distances(&sub);
    let hi = quantile(&d, cfg.upper_quantile);
    if hi <= 0.0 {
        return Err(Error::DegenerateGeometry("all points coincide".into()));
    }
    let mut lo = quantile(&d, cfg.lower_quantile);
    if lo <= 0.0 {
        lo = d[d.partition_point(|&x| x <= 0.0)];
    }
    if lo >= hi {
        return Err(Error::DegenerateGeometry("radius range collapsed".into()));
    }
    let n = cfg.n_radii;
    // Geometric grid anchored on lo exactly, so uniform rescaling by a power of two is exact.
    let ratio = hi / lo;
    let radii: Vec<f64> =
        (0..n).map(|i| if i + 1 == n { hi } else { lo * ratio.powf(i as f64 / (n - 1) as f64) }).collect();
    let log_r: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let (llo, lhi) = (log_r[0], log_r[n - 1]);
    let c = integral_from_sorted(&d, &radii);
    let log_c: Vec<f64> = c.iter().map(|v| v.ln()).collect();

    let margin = (1.0 - cfg.fit_window) / 2.0 * (lhi - llo);
    let (wlo, whi) = (llo + margin - 1e-12, lhi - margin + 1e-12);
    let start = log_r.iter().position(|&l| l >= wlo).unwrap_or(0);
    let end = log_r.iter().rposition(|&l| l <= whi).map(|p| p + 1).unwrap_or(n);
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        (start..end).filter(|&i| log_c[i].is_finite()).map(|i| (log_r[i], log_c[i])).unzip();
    if xs.len() < 2 {
        return Err(Error::DegenerateGeometry("too few radii with non-zero C(R)".into()));
    }
    Ok(CorrDimResult { dimension: linear_fit_slope(&xs, &ys), log_r, log_c, fit_range: (start, end) })
}
