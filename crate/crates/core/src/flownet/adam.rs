use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Bias-corrected Adam moments for a flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub step: u64,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(n_params: usize) -> Self {
        Self::with_hyperparameters(n_params, 0.9, 0.999, 1e-8)
    }

    pub fn with_hyperparameters(n_params: usize, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Self { step: 0, first_moment: vec![0.0; n_params], second_moment: vec![0.0; n_params], beta1, beta2, epsilon }
    }
}

/// One Adam update of `params` in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, lr: f64) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.first_moment.len() {
        return Err(Error::BadShape(format!(
            "adam shapes differ: {} params, {} grads, {} moments",
            params.len(),
            grads.len(),
            state.first_moment.len()
        )));
    }
    if !(0.0 < state.beta1 && state.beta1 < 1.0 && 0.0 < state.beta2 && state.beta2 < 1.0) {
        return Err(Error::InvalidParameter("adam betas must lie in (0, 1)".into()));
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for (((p, &g), m), v) in
        params.iter_mut().zip(grads).zip(state.first_moment.iter_mut()).zip(state.second_moment.iter_mut())
    {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + state.epsilon);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = vec![1.0, -2.0, 3.0];
        let mut s = AdamState::new(3);
        adam_step(&mut p, &[0.0; 3], &mut s, 1e-3).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let g = [0.5, -3.0, 1e-2];
        let mut p = vec![0.0; 3];
        let mut s = AdamState::new(3);
        let lr = 1e-3;
        adam_step(&mut p, &g, &mut s, lr).unwrap();
        for (pi, gi) in p.iter().zip(&g) {
            // m_hat = g, v_hat = g², so the step is lr·g/(|g| + eps).
            let expected = -lr * gi / (gi.abs() + 1e-8);
            assert!((pi - expected).abs() < 1e-15);
            assert!((pi + lr * gi.signum()).abs() < lr * 1e-5);
        }
    }

    #[test]
    fn two_steps_with_constant_gradient() {
        let g = 0.25;
        let lr = 0.01;
        let mut p = vec![1.0];
        let mut s = AdamState::new(1);
        adam_step(&mut p, &[g], &mut s, lr).unwrap();
        adam_step(&mut p, &[g], &mut s, lr).unwrap();

        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
        let mut expected = 1.0;
        let (mut m, mut v) = (0.0, 0.0);
        for t in 1..=2 {
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t));
            let vh = v / (1.0 - b2.powi(t));
            expected -= lr * mh / (vh.sqrt() + eps);
        }
        assert!((p[0] - expected).abs() < 1e-15);
        assert!((p[0] - (1.0 - 2.0 * lr)).abs() < 1e-9);
    }

    #[test]
    fn shape_mismatch() {
        let mut s = AdamState::new(2);
        assert!(adam_step(&mut [0.0; 3], &[0.0; 3], &mut s, 1e-3).is_err());
    }
}
