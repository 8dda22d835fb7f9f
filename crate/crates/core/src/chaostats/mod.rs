//! Validation statistics for long chaotic rollouts.
//!
//! Distance conventions differ per metric: correlation dimension and
//! approximate entropy use the infinity norm, the Lyapunov neighbour search
//! uses the Euclidean norm.

mod acf;
mod apen;
mod corrdim;
mod embed;
mod histogram;
mod lyapunov;
mod report;

pub use acf::{autocorrelation, first_zero_crossing};
pub use apen::{apen_radius, approximate_entropy, ApEnConfig};
pub use corrdim::{correlation_dimension, correlation_integral, CorrDimConfig, CorrDimResult};
pub use embed::{delay_embed, delay_embed_channels, delay_embed_series, select_lag_acf, Embedding, EmbeddingSpec};
pub use histogram::{histogram, shared_range, Histogram, RangePolicy};
pub use lyapunov::{lyapunov_exponent, LyapConfig, LyapunovResult};
pub use report::{
    compare_reports, evaluate, evaluate_pair, ChaosReport, ComparisonTable, Diagnostics, Metric, MetricComparison,
    MetricsConfig, REPORT_SCHEMA,
};

/// Ordinary least-squares slope of `ys` against `xs`.
pub(crate) fn linear_fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}
