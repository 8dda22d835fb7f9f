use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Bin edges and density-normalised counts (total area 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub densities: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RangePolicy {
    /// `[min, max]` of the series itself.
    DataRange,
    /// Fixed range; samples outside it are not counted.
    Fixed { lo: f64, hi: f64 },
}

/// Union of the data ranges of several series, for shared bin edges.
pub fn shared_range(series: &[&[f64]]) -> RangePolicy {
    let (lo, hi) = series
        .iter()
        .flat_map(|s| s.iter())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    RangePolicy::Fixed { lo, hi }
}

pub fn histogram(series: &[f64], n_bins: usize, range: RangePolicy) -> Result<Histogram> {
    if n_bins == 0 {
        return Err(Error::InvalidParameter("histogram needs at least one bin".into()));
    }
    if series.is_empty() {
        return Err(Error::InsufficientData { required: 1, available: 0 });
    }
    let (mut lo, mut hi) = match range {
        RangePolicy::DataRange => {
            series.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
        }
        RangePolicy::Fixed { lo, hi } => (lo, hi),
    };
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(Error::InvalidParameter(format!("bad histogram range [{lo}, {hi}]")));
    }
    if hi == lo {
        // Degenerate range: centre a unit-width range on the single value.
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / n_bins as f64;
    let edges: Vec<f64> = (0..=n_bins).map(|i| lo + i as f64 * width).collect();
    let mut counts = vec![0usize; n_bins];
    let mut total = 0usize;
    for &v in series {
        if v < lo || v > hi {
            continue;
        }
        let bin = (((v - lo) / width) as usize).min(n_bins - 1);
        counts[bin] += 1;
        total += 1;
    }
    let norm = if total == 0 { 0.0 } else { 1.0 / (total as f64 * width) };
    Ok(Histogram { edges, densities: counts.iter().map(|&c| c as f64 * norm).collect() })
}

impl Histogram {
    pub fn bin_width(&self, i: usize) -> f64 {
        self.edges[i + 1] - self.edges[i]
    }

    /// Index of the densest bin.
    pub fn mode_bin(&self) -> usize {
        self.densities
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &d)| if d > best.1 { (i, d) } else { best })
            .0
    }
}
