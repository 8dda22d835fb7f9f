use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::acf::{autocorrelation, first_zero_crossing};
use super::apen::{approximate_entropy, ApEnConfig};
use super::corrdim::{correlation_dimension, CorrDimConfig};
use super::embed::{delay_embed, select_lag_acf, EmbeddingSpec};
use super::histogram::{histogram, shared_range, Histogram, RangePolicy};
use super::lyapunov::{lyapunov_exponent, LyapConfig};
use crate::{Error, Result, Trajectory};

pub const REPORT_SCHEMA: &str = "chaosflow-report v1";

/// Settings shared by every metric in a [`ChaosReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsConfig {
    pub embedding: EmbeddingSpec,
    /// Replace `embedding.lag` with the first lag where the ACF drops below `1 − 1/e`.
    #[serde(default)]
    pub auto_lag: bool,
    #[serde(default)]
    pub corr_dim: CorrDimConfig,
    #[serde(default)]
    pub lyapunov: LyapConfig,
    #[serde(default)]
    pub apen: ApEnConfig,
    pub histogram_bins: usize,
    pub acf_max_lag: usize,
}

impl MetricsConfig {
    /// Defaults with the embedding dimension set to `system_dim`.
    pub fn for_system(system_dim: usize) -> Self {
        Self {
            embedding: EmbeddingSpec::new(system_dim, 1),
            auto_lag: false,
            corr_dim: CorrDimConfig::default(),
            lyapunov: LyapConfig::default(),
            apen: ApEnConfig::default(),
            histogram_bins: 50,
            acf_max_lag: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.embedding.validate()?;
        self.corr_dim.validate()?;
        self.lyapunov.validate()?;
        if self.histogram_bins == 0 {
            return Err(Error::InvalidParameter("histogram_bins must be at least 1".into()));
        }
        Ok(())
    }

    /// Fixes every data-dependent choice (lag, Lyapunov separation) from `traj`.
    pub fn resolve(&self, traj: &Trajectory) -> Result<MetricsConfig> {
        let mut cfg = *self;
        let columns = traj.columns();
        if cfg.auto_lag {
            let mut lag = 1;
            for c in &columns {
                lag = lag.max(select_lag_acf(c, traj.len() / 4).unwrap_or(1));
            }
            cfg.embedding.lag = lag;
            cfg.auto_lag = false;
        }
        if cfg.lyapunov.min_separation.is_none() {
            let mut sep = 0;
            for c in &columns {
                let zero = first_zero_crossing(c, traj.len() / 4).ok().flatten();
                sep = sep.max(zero.unwrap_or(cfg.lyapunov.k_max));
            }
            cfg.lyapunov.min_separation = Some(sep.max(1));
        }
        Ok(cfg)
    }
}

/// A scalar metric, or the reason it could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<String>,
}

impl Metric {
    fn from_result(r: Result<f64>) -> Self {
        match r {
            Ok(v) if v.is_finite() => Metric { value: Some(v), reason: None },
            Ok(v) => Metric { value: None, reason: Some(format!("non-finite value {v}")) },
            Err(e) => Metric { value: None, reason: Some(e.to_string()) },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChaosReport {
    pub schema: String,
    pub labels: Vec<String>,
    pub n_samples: usize,
    pub dt: f64,
    pub corr_dim: Metric,
    pub approx_entropy: Metric,
    /// Units of 1/second.
    pub lyapunov: Metric,
    /// Per channel `r_0..r_max_lag`.
    pub acf: Vec<Vec<f64>>,
    pub histogram: Vec<Histogram>,
    pub embedding: EmbeddingSpec,
    /// Fully resolved settings used for every metric above.
    pub configs: MetricsConfig,
}

/// Curves behind the scalar metrics, for plotting.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub log_r: Vec<f64>,
    pub log_c: Vec<f64>,
    /// `(k·dt, mean ln divergence)`.
    pub divergence: Vec<(f64, f64)>,
}

/// Computes every metric of `traj`; `hist_ranges` optionally fixes per-channel histogram ranges.
pub fn evaluate(
    traj: &Trajectory,
    cfg: &MetricsConfig,
    hist_ranges: Option<&[RangePolicy]>,
) -> Result<(ChaosReport, Diagnostics)> {
    cfg.validate()?;
    let cfg = cfg.resolve(traj)?;
    let columns = traj.columns();
    let refs: Vec<&[f64]> = columns.iter().map(|c| c.as_slice()).collect();

    let acf = refs
        .iter()
        .map(|c| autocorrelation(c, cfg.acf_max_lag.min(c.len().saturating_sub(1))).unwrap_or_default())
        .collect();
    let histograms = refs
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let range = hist_ranges.and_then(|r| r.get(j).copied()).unwrap_or(RangePolicy::DataRange);
            histogram(c, cfg.histogram_bins, range)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut diag = Diagnostics::default();
    let approx_entropy = Metric::from_result(approximate_entropy(&refs, cfg.embedding, &cfg.apen));
    let (corr_dim, lyapunov) = match delay_embed(traj, cfg.embedding) {
        Ok(emb) => {
            let corr_dim = Metric::from_result(correlation_dimension(&emb, &cfg.corr_dim).map(|res| {
                diag.log_r = res.log_r;
                diag.log_c = res.log_c;
                res.dimension
            }));
            let sep = cfg.lyapunov.min_separation.unwrap_or(1);
            let lyapunov = Metric::from_result(lyapunov_exponent(&emb, traj.dt(), &cfg.lyapunov, sep).map(|res| {
                diag.divergence = res.divergence.iter().enumerate().map(|(k, &v)| (k as f64 * traj.dt(), v)).collect();
                res.exponent
            }));
            (corr_dim, lyapunov)
        }
        Err(e) => {
            let absent = Metric { value: None, reason: Some(e.to_string()) };
            (absent.clone(), absent)
        }
    };

    let report = ChaosReport {
        schema: REPORT_SCHEMA.into(),
        labels: traj.labels().to_vec(),
        n_samples: traj.len(),
        dt: traj.dt(),
        corr_dim,
        approx_entropy,
        lyapunov,
        acf,
        histogram: histograms,
        embedding: cfg.embedding,
        configs: cfg,
    };
    Ok((report, diag))
}

/// Reports for a reference and a prediction computed with identical settings.
///
/// Data-dependent settings are resolved from the reference, and histograms
/// share per-channel edges spanning both series.
pub fn evaluate_pair(
    reference: &Trajectory,
    prediction: &Trajectory,
    cfg: &MetricsConfig,
) -> Result<((ChaosReport, Diagnostics), (ChaosReport, Diagnostics))> {
    if reference.dim() != prediction.dim() {
        return Err(Error::BadShape(format!(
            "reference has {} channels, prediction {}",
            reference.dim(),
            prediction.dim()
        )));
    }
    cfg.validate()?;
    let resolved = cfg.resolve(reference)?;
    let ref_cols = reference.columns();
    let pred_cols = prediction.columns();
    let ranges: Vec<RangePolicy> = ref_cols.iter().zip(&pred_cols).map(|(a, b)| shared_range(&[a, b])).collect();
    let r = evaluate(reference, &resolved, Some(&ranges))?;
    let p = evaluate(prediction, &resolved, Some(&ranges))?;
    Ok((r, p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricComparison {
    pub metric: String,
    pub reference: Option<f64>,
    pub prediction: Option<f64>,
    /// `|prediction − reference| / |reference|`.
    pub relative_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<MetricComparison>,
    /// Per channel, max over lags of `|r_k(pred) − r_k(ref)|`.
    pub acf_max_abs_diff: Vec<f64>,
    /// Per channel, max over bins of the density difference.
    pub histogram_max_abs_diff: Vec<f64>,
}

impl ComparisonTable {
    pub fn relative_error(&self, metric: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.metric == metric).and_then(|r| r.relative_error)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("metric                 reference    prediction   rel.error\n");
        let fmt = |v: Option<f64>| v.map(|v| format!("{v:>12.4}")).unwrap_or_else(|| format!("{:>12}", "n/a"));
        for r in &self.rows {
            let rel =
                r.relative_error.map(|e| format!("{:>8.1}%", 100.0 * e)).unwrap_or_else(|| format!("{:>9}", "n/a"));
            let _ = writeln!(s, "{:<22} {} {} {rel}", r.metric, fmt(r.reference), fmt(r.prediction));
        }
        s
    }
}

fn relative_error(reference: Option<f64>, prediction: Option<f64>) -> Option<f64> {
    let (r, p) = (reference?, prediction?);
    if r == p {
        return Some(0.0);
    }
    if r == 0.0 {
        return None;
    }
    Some((p - r).abs() / r.abs())
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Relative-error table between two reports computed with the same settings.
pub fn compare_reports(reference: &ChaosReport, prediction: &ChaosReport) -> Result<ComparisonTable> {
    if reference.configs != prediction.configs || reference.embedding != prediction.embedding {
        return Err(Error::IncomparableReports("metric settings differ".into()));
    }
    if reference.acf.len() != prediction.acf.len() || reference.histogram.len() != prediction.histogram.len() {
        return Err(Error::IncomparableReports("channel counts differ".into()));
    }
    let mut histogram_max_abs_diff = Vec::with_capacity(reference.histogram.len());
    for (hr, hp) in reference.histogram.iter().zip(&prediction.histogram) {
        if hr.edges != hp.edges {
            return Err(Error::IncomparableReports("histogram edges differ".into()));
        }
        histogram_max_abs_diff.push(max_abs_diff(&hr.densities, &hp.densities));
    }
    let acf_max_abs_diff = reference.acf.iter().zip(&prediction.acf).map(|(a, b)| max_abs_diff(a, b)).collect();
    let row = |name: &str, r: &Metric, p: &Metric| MetricComparison {
        metric: name.into(),
        reference: r.value,
        prediction: p.value,
        relative_error: relative_error(r.value, p.value),
    };
    Ok(ComparisonTable {
        rows: vec![
            row("correlation_dimension", &reference.corr_dim, &prediction.corr_dim),
            row("approximate_entropy", &reference.approx_entropy, &prediction.approx_entropy),
            row("lyapunov_exponent", &reference.lyapunov, &prediction.lyapunov),
        ],
        acf_max_abs_diff,
        histogram_max_abs_diff,
    })
}

impl ChaosReport {
    /// ACF as CSV: `lag,<label>...`.
    pub fn acf_csv(&self) -> String {
        let mut s = format!("lag,{}\n", self.labels.join(","));
        let n = self.acf.iter().map(Vec::len).max().unwrap_or(0);
        for k in 0..n {
            let _ = write!(s, "{k}");
            for c in &self.acf {
                let _ = write!(s, ",{}", c.get(k).copied().unwrap_or(f64::NAN));
            }
            s.push('\n');
        }
        s
    }

    /// Histograms as CSV: `channel,bin_lo,bin_hi,density`.
    pub fn histogram_csv(&self) -> String {
        let mut s = String::from("channel,bin_lo,bin_hi,density\n");
        for (label, h) in self.labels.iter().zip(&self.histogram) {
            for (i, d) in h.densities.iter().enumerate() {
                let _ = writeln!(s, "{label},{},{},{d}", h.edges[i], h.edges[i + 1]);
            }
        }
        s
    }
}

impl Diagnostics {
    pub fn correlation_csv(&self) -> String {
        let mut s = String::from("log_r,log_c\n");
        for (r, c) in self.log_r.iter().zip(&self.log_c) {
            let _ = writeln!(s, "{r},{c}");
        }
        s
    }

    pub fn divergence_csv(&self) -> String {
        let mut s = String::from("time,mean_log_divergence\n");
        for (t, v) in &self.divergence {
            let _ = writeln!(s, "{t},{v}");
        }
        s
    }
}
