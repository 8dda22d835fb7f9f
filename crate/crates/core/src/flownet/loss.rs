//! Recurrent rollout, the recurrent MSE loss and its exact gradient.
//!
//! For a sequence `s_0..s_{n_M+K}` the model predicts
//! `p_k = p_{k-1} + N(s_{k-1}, ..., s_{k-1+n_M})` where rows past `n_M` are the
//! model's own predictions, and the loss is `Σ_k ‖s_{n_M+k} − p_k‖²`,
//! averaged over the batch. Gradients flow through every fed-back prediction.

use rayon::prelude::*;

use super::model::{BackwardScratch, FlowMapModel, Tape};
use crate::{Error, Result};

/// Sequences per accumulation chunk; fixed so the reduction order never
/// depends on the thread count.
const CHUNK: usize = 8;

/// Composes the model `k_steps` times from `window` (`(n_M+1) × m`, oldest first).
///
/// Returns the `k_steps × m` predicted states.
pub fn recurrent_rollout(model: &FlowMapModel, window: &[f64], k_steps: usize) -> Result<Vec<f64>> {
    if k_steps == 0 {
        return Err(Error::InvalidParameter("rollout length must be at least 1".into()));
    }
    if window.len() != model.input_width() {
        return Err(Error::BadShape(format!(
            "window has {} values, model expects {}",
            window.len(),
            model.input_width()
        )));
    }
    let m = model.obs_dim();
    let mut states = window.to_vec();
    let mut tape = model.new_tape();
    let mut out = Vec::with_capacity(k_steps * m);
    for k in 0..k_steps {
        let start = k * m;
        model.forward_tape(&states[start..start + model.input_width()], &mut tape);
        let newest = states.len() - m;
        for j in 0..m {
            let next = states[newest + j] + tape.output()[j];
            if !next.is_finite() {
                return Err(Error::RolloutDiverged { step: k + 1 });
            }
            states.push(next);
            out.push(next);
        }
    }
    Ok(out)
}

fn check_batch(model: &FlowMapModel, batch: &[&[f64]], k_steps: usize) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::BadShape("empty batch".into()));
    }
    if k_steps == 0 {
        return Err(Error::InvalidParameter("recurrent length must be at least 1".into()));
    }
    let expected = (model.window_len() + k_steps) * model.obs_dim();
    if let Some(bad) = batch.iter().find(|s| s.len() != expected) {
        return Err(Error::BadShape(format!(
            "sequence has {} values, expected {expected} ((n_M + K + 1) × m)",
            bad.len()
        )));
    }
    Ok(())
}

/// Mean over the batch of `Σ_{k=1..K} ‖target_k − prediction_k‖²`.
///
/// Each sequence holds `n_M + K + 1` rows of `m` values; `K` is inferred from
/// the sequence length.
pub fn recurrent_loss(model: &FlowMapModel, batch: &[&[f64]]) -> Result<f64> {
    let k_steps = infer_k(model, batch)?;
    check_batch(model, batch, k_steps)?;
    let m = model.obs_dim();
    let w = model.window_len();
    let mut total = 0.0;
    for seq in batch {
        let preds = recurrent_rollout(model, &seq[..w * m], k_steps)?;
        total += preds.iter().zip(&seq[w * m..]).map(|(p, t)| (t - p) * (t - p)).sum::<f64>();
    }
    Ok(total / batch.len() as f64)
}

fn infer_k(model: &FlowMapModel, batch: &[&[f64]]) -> Result<usize> {
    let first = batch.first().ok_or_else(|| Error::BadShape("empty batch".into()))?;
    let m = model.obs_dim();
    let rows = first.len() / m;
    if first.len() % m != 0 || rows <= model.window_len() {
        return Err(Error::BadShape(format!(
            "sequence of {} values cannot hold {} history rows plus targets",
            first.len(),
            model.window_len()
        )));
    }
    Ok(rows - model.window_len())
}

/// Reusable buffers for one sequence's forward/backward pass.
struct SeqWorkspace {
    tapes: Vec<Tape>,
    states: Vec<f64>,
    grad_states: Vec<f64>,
    grad_out: Vec<f64>,
    scratch: BackwardScratch,
}

impl SeqWorkspace {
    fn new(model: &FlowMapModel, k_steps: usize) -> Self {
        Self {
            tapes: (0..k_steps).map(|_| model.new_tape()).collect(),
            states: Vec::new(),
            grad_states: Vec::new(),
            grad_out: vec![0.0; model.obs_dim()],
            scratch: BackwardScratch::default(),
        }
    }
}

/// Loss of one sequence; adds `scale × ∂loss/∂θ` into `grads`.
fn sequence_grad(
    model: &FlowMapModel,
    seq: &[f64],
    k_steps: usize,
    scale: f64,
    grads: &mut [f64],
    ws: &mut SeqWorkspace,
) -> Option<f64> {
    let m = model.obs_dim();
    let w = model.window_len();
    let width = model.input_width();

    ws.states.clear();
    ws.states.extend_from_slice(&seq[..w * m]);
    let mut loss = 0.0;
    for k in 0..k_steps {
        model.forward_tape(&ws.states[k * m..k * m + width], &mut ws.tapes[k]);
        let newest = ws.states.len() - m;
        for j in 0..m {
            let p = ws.states[newest + j] + ws.tapes[k].output()[j];
            let t = seq[(w + k) * m + j];
            loss += (t - p) * (t - p);
            ws.states.push(p);
        }
    }
    if !loss.is_finite() {
        return None;
    }

    // Gradient with respect to every row of the state sequence.
    ws.grad_states.clear();
    ws.grad_states.resize(ws.states.len(), 0.0);
    for k in 0..k_steps {
        let row = (w + k) * m;
        for j in 0..m {
            ws.grad_states[row + j] = 2.0 * scale * (ws.states[row + j] - seq[row + j]);
        }
    }
    for k in (0..k_steps).rev() {
        // Row w+k = row w+k-1 + N(rows k..k+w-1); later steps already pushed their
        // contributions into row w+k, so its gradient is final here.
        let out_row = (w + k) * m;
        ws.grad_out.copy_from_slice(&ws.grad_states[out_row..out_row + m]);
        for j in 0..m {
            ws.grad_states[out_row - m + j] += ws.grad_out[j];
        }
        // The first window reads only data rows; its input gradient is never used.
        let grad_input = if k > 0 { Some(&mut ws.grad_states[k * m..k * m + width]) } else { None };
        model.backward_tape(&ws.tapes[k], &ws.grad_out, grads, grad_input, &mut ws.scratch);
    }
    Some(loss)
}

/// Loss and exact gradient (full backpropagation through the K compositions).
///
/// Returns `(loss, gradient)` with the gradient laid out like [`FlowMapModel::params`].
pub fn loss_gradient(model: &FlowMapModel, batch: &[&[f64]]) -> Result<(f64, Vec<f64>)> {
    let k_steps = infer_k(model, batch)?;
    check_batch(model, batch, k_steps)?;
    let scale = 1.0 / batch.len() as f64;
    let n_params = model.params().len();

    let partials: Vec<Option<(f64, Vec<f64>)>> = batch
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut ws = SeqWorkspace::new(model, k_steps);
            let mut grads = vec![0.0; n_params];
            let mut loss = 0.0;
            for seq in chunk {
                loss += sequence_grad(model, seq, k_steps, scale, &mut grads, &mut ws)?;
            }
            Some((loss, grads))
        })
        .collect();

    let mut partials = partials.into_iter().collect::<Option<Vec<_>>>().ok_or(Error::RolloutDiverged { step: 0 })?;
    let (loss, grads) = pairwise_reduce(&mut partials);
    Ok((loss * scale, grads))
}

/// Fixed-shape pairwise sum so results are identical for any thread count.
fn pairwise_reduce(parts: &mut Vec<(f64, Vec<f64>)>) -> (f64, Vec<f64>) {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut iter = std::mem::take(parts).into_iter();
        while let Some((la, mut ga)) = iter.next() {
            if let Some((lb, gb)) = iter.next() {
                for (a, b) in ga.iter_mut().zip(&gb) {
                    *a += b;
                }
                next.push((la + lb, ga));
            } else {
                next.push((la, ga));
            }
        }
        *parts = next;
    }
    parts.pop().unwrap()
}
