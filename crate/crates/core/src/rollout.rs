//! Autonomous long-horizon prediction.
//!
//! A rollout that produces a non-finite state is not an error: the run is
//! truncated and `diverged_at` records the step, so reports can carry it.

use serde::{Deserialize, Serialize};

use crate::flownet::FlowMapModel;
use crate::{Error, Result, Trajectory};

/// Floor used for exact agreement in [`pointwise_log_abs_error`].
pub const LOG_ERROR_FLOOR: f64 = -16.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRun {
    pub model_ref: String,
    /// `(n_M + 1) × m` initial history, oldest first.
    pub seed_window: Vec<f64>,
    pub dt: f64,
    /// Seed rows followed by the predicted rows.
    pub predicted: Trajectory,
    /// 1-based step at which a non-finite value first appeared.
    pub diverged_at: Option<usize>,
}

/// JSON-friendly summary of a [`PredictionRun`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub model_ref: String,
    pub dt: f64,
    pub t0: f64,
    pub seed_rows: usize,
    pub predicted_rows: usize,
    pub diverged_at: Option<usize>,
}

impl PredictionRun {
    pub fn manifest(&self) -> RunManifest {
        RunManifest {
            model_ref: self.model_ref.clone(),
            dt: self.dt,
            t0: self.predicted.t0(),
            seed_rows: self.seed_window.len() / self.predicted.dim(),
            predicted_rows: self.predicted.len(),
            diverged_at: self.diverged_at,
        }
    }

    /// The newest `n_M + 1` rows, usable as the seed of a continuation.
    pub fn final_window(&self) -> Vec<f64> {
        let w = self.seed_window.len() / self.predicted.dim();
        self.predicted.slice_rows(self.predicted.len() - w, w).to_vec()
    }
}

/// Marches the model `n_steps` times from `seed`, which must hold exactly `n_M + 1` rows.
pub fn predict(model: &FlowMapModel, seed: &Trajectory, n_steps: usize) -> Result<PredictionRun> {
    let m = model.obs_dim();
    if seed.dim() != m || seed.len() != model.window_len() {
        return Err(Error::BadShape(format!(
            "seed window is {} × {}, model needs {} × {m}",
            seed.len(),
            seed.dim(),
            model.window_len()
        )));
    }
    let norm = model.meta.normalization.as_ref();
    let scaled;
    let start_rows = match norm {
        Some(n) => {
            scaled = n.apply(seed)?;
            scaled.states()
        }
        None => seed.states(),
    };
    let width = model.input_width();
    let mut states = Vec::with_capacity((model.window_len() + n_steps) * m);
    states.extend_from_slice(start_rows);
    let mut tape = model.new_tape();
    let mut diverged_at = None;
    'steps: for step in 1..=n_steps {
        let start = states.len() - width;
        model.forward_tape(&states[start..], &mut tape);
        let newest = states.len() - m;
        let next: Vec<f64> = (0..m).map(|j| states[newest + j] + tape.output()[j]).collect();
        if next.iter().any(|v| !v.is_finite()) {
            diverged_at = Some(step);
            break 'steps;
        }
        states.extend_from_slice(&next);
    }
    let mut predicted = Trajectory::new(seed.dt(), seed.t0(), m, states, seed.labels().to_vec())?;
    if let Some(n) = norm {
        predicted = n.invert(&predicted)?;
        // Keep the seed rows exactly as given rather than round-tripped.
        let mut states = predicted.states().to_vec();
        states[..seed.states().len()].copy_from_slice(seed.states());
        predicted = Trajectory::new(seed.dt(), seed.t0(), m, states, seed.labels().to_vec())?;
    }
    Ok(PredictionRun {
        model_ref: model.fingerprint()?,
        seed_window: seed.states().to_vec(),
        dt: seed.dt(),
        predicted,
        diverged_at,
    })
}

/// Seeds from the first `n_M + 1` rows of `reference` and predicts the rest of its horizon.
pub fn predict_along(model: &FlowMapModel, reference: &Trajectory) -> Result<PredictionRun> {
    let w = model.window_len();
    if reference.len() < w {
        return Err(Error::InsufficientData { required: w, available: reference.len() });
    }
    predict(model, &reference.truncated(w), reference.len() - w)
}

/// `log10 |pred − ref|` per variable over the overlapping length, floored at −16.
pub fn pointwise_log_abs_error(pred: &Trajectory, reference: &Trajectory) -> Result<Vec<Vec<f64>>> {
    if pred.dim() != reference.dim() {
        return Err(Error::BadShape(format!("prediction has {} columns, reference {}", pred.dim(), reference.dim())));
    }
    if (pred.dt() - reference.dt()).abs() > 1e-12 * reference.dt() {
        return Err(Error::BadShape(format!("dt differs: {} vs {}", pred.dt(), reference.dt())));
    }
    let n = pred.len().min(reference.len());
    if n == 0 {
        return Err(Error::InsufficientData { required: 1, available: 0 });
    }
    Ok((0..pred.dim())
        .map(|j| {
            (0..n)
                .map(|i| {
                    let d = (pred.row(i)[j] - reference.row(i)[j]).abs();
                    if d == 0.0 {
                        LOG_ERROR_FLOOR
                    } else {
                        d.log10().max(LOG_ERROR_FLOOR)
                    }
                })
                .collect()
        })
        .collect())
}

/// Per-column bound `factor × max|reference|`.
pub fn stability_envelope(reference: &Trajectory, factor: f64) -> Vec<f64> {
    reference.abs_envelope().into_iter().map(|e| e * factor).collect()
}

/// True when every state of `traj` lies inside the per-column `envelope`.
pub fn within_envelope(traj: &Trajectory, envelope: &[f64]) -> bool {
    traj.rows().all(|row| row.iter().zip(envelope).all(|(v, e)| v.abs() <= *e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seed(rows: &[Vec<f64>]) -> Trajectory {
        Trajectory::from_rows(0.01, 0.0, rows, crate::trajectory::default_labels(rows[0].len())).unwrap()
    }

    #[test]
    fn zero_steps_returns_seed() {
        let model = FlowMapModel::init(2, 1, &[4], 1).unwrap();
        let s = seed(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let run = predict(&model, &s, 0).unwrap();
        assert_eq!(run.predicted, s);
        assert_eq!(run.diverged_at, None);
    }

    #[test]
    fn zero_model_continues_last_row() {
        let model = FlowMapModel::zeros(2, 1, &[4]).unwrap();
        let s = seed(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let run = predict(&model, &s, 5).unwrap();
        assert_eq!(run.predicted.len(), 7);
        for i in 1..7 {
            assert_eq!(run.predicted.row(i), &[3.0, 4.0]);
        }
    }

    #[test]
    fn geometry_mismatch_is_an_error() {
        let model = FlowMapModel::zeros(2, 1, &[4]).unwrap();
        assert!(predict(&model, &seed(&[vec![1.0, 2.0]]), 3).is_err());
        assert!(predict(&model, &seed(&[vec![1.0], vec![2.0]]), 3).is_err());
    }

    #[test]
    fn divergence_truncates() {
        let mut model = FlowMapModel::zeros(1, 0, &[]).unwrap();
        model.weights_mut(0)[0] = 1e150;
        let run = predict(&model, &seed(&[vec![1.0]]), 10).unwrap();
        assert_eq!(run.diverged_at, Some(3));
        assert_eq!(run.predicted.len(), 3);
    }

    #[test]
    fn compositional() {
        let model = FlowMapModel::init(2, 2, &[6], 4).unwrap();
        let s = seed(&[vec![0.1, 0.2], vec![0.3, 0.1], vec![0.2, 0.0]]);
        let full = predict(&model, &s, 12).unwrap();
        let first = predict(&model, &s, 5).unwrap();
        let cont_seed = Trajectory::with_default_labels(0.01, 0.0, 2, first.final_window()).unwrap();
        let second = predict(&model, &cont_seed, 7).unwrap();
        let mut joined = first.predicted.states().to_vec();
        joined.extend_from_slice(&second.predicted.states()[3 * 2..]);
        assert_eq!(full.predicted.states(), joined.as_slice());
    }

    #[test]
    fn log_error_examples() {
        let r = seed(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let e = pointwise_log_abs_error(&r, &r).unwrap();
        assert!(e.iter().flatten().all(|&v| v == -16.0));

        let shifted: Vec<Vec<f64>> = r.rows().map(|row| row.iter().map(|v| v + 0.01).collect()).collect();
        let e = pointwise_log_abs_error(&seed(&shifted), &r).unwrap();
        assert!(e.iter().flatten().all(|&v| (v + 2.0).abs() < 1e-9));

        let other = Trajectory::with_default_labels(0.02, 0.0, 2, vec![0.0; 4]).unwrap();
        assert!(pointwise_log_abs_error(&other, &r).is_err());
    }

    #[test]
    fn envelope_check() {
        let r = seed(&[vec![1.0, -2.0], vec![-3.0, 4.0]]);
        let env = stability_envelope(&r, 1.5);
        assert_eq!(env, vec![4.5, 6.0]);
        assert!(within_envelope(&r, &env));
        assert!(!within_envelope(&seed(&[vec![5.0, 0.0]]), &env));
    }

    #[test]
    fn normalized_model_predicts_in_physical_units() {
        use crate::dataset::Normalization;
        let mut model = FlowMapModel::zeros(2, 1, &[3]).unwrap();
        model.meta.normalization = Some(Normalization { mean: vec![5.0, -2.0], scale: vec![3.0, 0.5] });
        let s = seed(&[vec![1.0, 2.0], vec![7.25, -3.5]]);
        let run = predict(&model, &s, 4).unwrap();
        assert_eq!(run.predicted.slice_rows(0, 2), s.states());
        for i in 2..6 {
            let row = run.predicted.row(i);
            assert!((row[0] - 7.25).abs() < 1e-12 && (row[1] + 3.5).abs() < 1e-12, "{row:?}");
        }
    }
}
