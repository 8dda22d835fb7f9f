use serde::{Deserialize, Serialize};

use super::acf::autocorrelation;
use crate::{Error, Result, Trajectory};

/// Delay-embedding dimension and lag (in samples).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingSpec {
    pub dim: usize,
    pub lag: usize,
}

impl EmbeddingSpec {
    pub fn new(dim: usize, lag: usize) -> Self {
        Self { dim, lag }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.lag == 0 {
            return Err(Error::InvalidParameter(format!(
                "embedding dim and lag must be at least 1, got dim={} lag={}",
                self.dim, self.lag
            )));
        }
        Ok(())
    }

    /// Rows produced from a series of `len` samples (may be zero or negative-clamped).
    pub fn rows_for(&self, len: usize) -> usize {
        len.saturating_sub((self.dim - 1) * self.lag)
    }
}

/// Reconstructed phase-space points.
///
/// For `c` channels each point is `[x¹_j, x¹_{j+τ}, …, x¹_{j+(d−1)τ}, x²_j, …]`:
/// channels are embedded independently and concatenated.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub spec: EmbeddingSpec,
    points: Vec<f64>,
    width: usize,
    pub source_len: usize,
}

impl Embedding {
    /// Wraps an explicit point cloud (`n × width`, row-major).
    pub fn from_points(points: Vec<f64>, width: usize) -> Result<Self> {
        if width == 0 || points.is_empty() || !points.len().is_multiple_of(width) {
            return Err(Error::BadShape(format!("{} values do not form points of width {width}", points.len())));
        }
        let n = points.len() / width;
        Ok(Self { spec: EmbeddingSpec::new(1, 1), points, width, source_len: n })
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.width
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.width..(i + 1) * self.width]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Every `stride`-th point, used to bound quadratic-cost metrics.
    pub fn subsample(&self, max_points: usize) -> Embedding {
        let n = self.len();
        if n <= max_points || max_points == 0 {
            return self.clone();
        }
        let mut points = Vec::with_capacity(max_points * self.width);
        for k in 0..max_points {
            points.extend_from_slice(self.point(k * n / max_points));
        }
        Embedding { spec: self.spec, points, width: self.width, source_len: self.source_len }
    }
}

/// Delay-embeds each column of `channels` and concatenates them.
pub fn delay_embed_channels(channels: &[&[f64]], spec: EmbeddingSpec) -> Result<Embedding> {
    spec.validate()?;
    let len = channels.first().map(|c| c.len()).unwrap_or(0);
    if channels.is_empty() || channels.iter().any(|c| c.len() != len) {
        return Err(Error::BadShape("channels must be non-empty and of equal length".into()));
    }
    let n = spec.rows_for(len);
    if n == 0 {
        return Err(Error::InsufficientData { required: (spec.dim - 1) * spec.lag + 1, available: len });
    }
    let width = channels.len() * spec.dim;
    let mut points = Vec::with_capacity(n * width);
    for j in 0..n {
        for c in channels {
            points.extend((0..spec.dim).map(|k| c[j + k * spec.lag]));
        }
    }
    Ok(Embedding { spec, points, width, source_len: len })
}

pub fn delay_embed_series(series: &[f64], spec: EmbeddingSpec) -> Result<Embedding> {
    delay_embed_channels(&[series], spec)
}

/// Delay embedding of every column of `traj`.
pub fn delay_embed(traj: &Trajectory, spec: EmbeddingSpec) -> Result<Embedding> {
    let columns = traj.columns();
    let refs: Vec<&[f64]> = columns.iter().map(|c| c.as_slice()).collect();
    delay_embed_channels(&refs, spec)
}

/// First lag at which the ACF drops to `1 − 1/e` or below.
pub fn select_lag_acf(series: &[f64], max_lag: usize) -> Result<usize> {
    let max_lag = max_lag.min(series.len().saturating_sub(1));
    let r = autocorrelation(series, max_lag)?;
    let threshold = 1.0 - (-1.0f64).exp();
    Ok(r.iter().skip(1).position(|&v| v <= threshold).map(|p| p + 1).unwrap_or(max_lag.max(1)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lag_one_pairs() {
        let e = delay_embed_series(&[1.0, 2.0, 3.0, 4.0, 5.0], EmbeddingSpec::new(2, 1)).unwrap();
        assert_eq!(e.points(), &[1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 4.0, 5.0]);
        assert_eq!(e.len(), 4);
    }

    #[test]
    fn dim_one_is_identity() {
        let s = [3.0, 1.0, 4.0, 1.0, 5.0];
        let e = delay_embed_series(&s, EmbeddingSpec::new(1, 3)).unwrap();
        assert_eq!(e.points(), &s);
    }

    #[test]
    fn row_count_formula() {
        let s: Vec<f64> = (0..10).map(f64::from).collect();
        let e = delay_embed_series(&s, EmbeddingSpec::new(3, 2)).unwrap();
        assert_eq!(e.len(), 6);
        assert_eq!(e.point(5), &[5.0, 7.0, 9.0]);
        assert!(delay_embed_series(&s, EmbeddingSpec::new(6, 2)).is_err());
        assert!(delay_embed_series(&s, EmbeddingSpec::new(0, 1)).is_err());
    }

    #[test]
    fn channels_are_concatenated() {
        let a = [1.0, 2.0, 3.0];
        let b = [10.0, 20.0, 30.0];
        let e = delay_embed_channels(&[&a, &b], EmbeddingSpec::new(2, 1)).unwrap();
        assert_eq!(e.width(), 4);
        assert_eq!(e.point(0), &[1.0, 2.0, 10.0, 20.0]);
    }

    #[test]
    fn acf_lag_selector() {
        let s: Vec<f64> = (0..2000).map(|i| (i as f64 * 0.05).sin()).collect();
        let lag = select_lag_acf(&s, 200).unwrap();
        // cos(0.05 k) ≤ 1 − 1/e  ⇒  k ≥ acos(0.632)/0.05 ≈ 17.7
        assert!((17..=19).contains(&lag), "{lag}");
    }

    proptest::proptest! {
        #[test]
        fn row_count_invariant(len in 1usize..200, dim in 1usize..6, lag in 1usize..6) {
            let s: Vec<f64> = (0..len).map(|i| i as f64).collect();
            let spec = EmbeddingSpec::new(dim, lag);
            match delay_embed_series(&s, spec) {
                Ok(e) => proptest::prop_assert_eq!(e.len(), len - (dim - 1) * lag),
                Err(_) => proptest::prop_assert!(len <= (dim - 1) * lag),
            }
        }
    }
}
