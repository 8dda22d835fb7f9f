use crate::{Error, Result};

/// Sample autocorrelation `r_k = c_k / c_0` for `k = 0..=max_lag`, with
/// `c_k = (1/T) Σ_{t=1}^{T−k} (x_t − x̄)(x_{t+k} − x̄)`.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let t = series.len();
    if t <= max_lag {
        return Err(Error::InsufficientData { required: max_lag + 1, available: t });
    }
    let mean = series.iter().sum::<f64>() / t as f64;
    let centered: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let c0: f64 = centered.iter().map(|v| v * v).sum::<f64>() / t as f64;
    if c0 <= 0.0 || !c0.is_finite() {
        return Err(Error::ConstantSeries);
    }
    let mut r = Vec::with_capacity(max_lag + 1);
    r.push(1.0);
    for k in 1..=max_lag {
        let ck: f64 = centered[..t - k].iter().zip(&centered[k..]).map(|(a, b)| a * b).sum::<f64>() / t as f64;
        r.push(ck / c0);
    }
    Ok(r)
}

/// First lag where the ACF crosses zero, or `None` within `max_lag`.
pub fn first_zero_crossing(series: &[f64], max_lag: usize) -> Result<Option<usize>> {
    let max_lag = max_lag.min(series.len().saturating_sub(1));
    let r = autocorrelation(series, max_lag)?;
    Ok(r.iter().position(|&v| v <= 0.0))
}
