use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::loss::{loss_gradient, recurrent_loss};
use super::model::FlowMapModel;
use crate::dataset::SequenceDataset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Number of recurrent compositions in the loss; at most the dataset's K.
    pub recurrent_len: usize,
    pub seed: u64,
    #[serde(default = "default_shuffle")]
    pub shuffle: bool,
    /// Return the parameters with the lowest full-dataset loss seen at any
    /// epoch end instead of the final ones. Costs one extra forward pass per epoch.
    #[serde(default)]
    pub select_best: bool,
}

fn default_shuffle() -> bool {
    true
}

impl TrainConfig {
    pub fn validate(&self, m_sequences: usize) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidParameter("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 || self.batch_size > m_sequences {
            return Err(Error::InvalidParameter(format!(
                "batch_size {} must lie in 1..={m_sequences}",
                self.batch_size
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter("learning_rate must be positive".into()));
        }
        if self.recurrent_len == 0 {
            return Err(Error::InvalidParameter("recurrent_len must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: FlowMapModel,
    /// Sample-weighted mean batch loss of each epoch.
    pub loss_history: Vec<f64>,
    /// Full-dataset loss after each epoch; empty unless `select_best` is set.
    pub eval_history: Vec<f64>,
    /// Zero-based epoch whose parameters were returned, when `select_best` is set.
    pub best_epoch: Option<usize>,
}

/// Mini-batch Adam on the recurrent loss.
pub fn train(model: FlowMapModel, dataset: &SequenceDataset, config: &TrainConfig) -> Result<TrainOutcome> {
    train_with_progress(model, dataset, config, |_, _| {})
}

/// As [`train`], calling `progress(epoch, epoch_loss)` after every epoch.
pub fn train_with_progress<F: FnMut(usize, f64)>(
    mut model: FlowMapModel,
    dataset: &SequenceDataset,
    config: &TrainConfig,
    mut progress: F,
) -> Result<TrainOutcome> {
    config.validate(dataset.len())?;
    if dataset.obs_dim != model.obs_dim() || dataset.spec.memory_len != model.memory_len() {
        return Err(Error::BadShape(format!(
            "dataset (m = {}, n_M = {}) does not match model (m = {}, n_M = {})",
            dataset.obs_dim,
            dataset.spec.memory_len,
            model.obs_dim(),
            model.memory_len()
        )));
    }
    if config.recurrent_len > dataset.spec.recurrent_len {
        return Err(Error::InvalidParameter(format!(
            "recurrent_len {} exceeds the dataset's {}",
            config.recurrent_len, dataset.spec.recurrent_len
        )));
    }

    let used = (model.window_len() + config.recurrent_len) * model.obs_dim();
    let sequences: Vec<&[f64]> = dataset.iter().map(|s| &s[..used]).collect();
    let mut order: Vec<usize> = (0..sequences.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = AdamState::new(model.params().len());
    let mut history = Vec::with_capacity(config.epochs);
    let mut batch: Vec<&[f64]> = Vec::with_capacity(config.batch_size);
    let mut eval_history = Vec::new();
    let mut best: Option<(usize, f64, Vec<f64>)> = None;

    for epoch in 0..config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        let mut epoch_loss = 0.0;
        for (b, idx) in order.chunks(config.batch_size).enumerate() {
            batch.clear();
            batch.extend(idx.iter().map(|&i| sequences[i]));
            let (loss, grads) = match loss_gradient(&model, &batch) {
                Ok(v) => v,
                Err(Error::RolloutDiverged { .. }) => return Err(Error::TrainingDiverged { epoch, batch: b }),
                Err(e) => return Err(e),
            };
            if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::TrainingDiverged { epoch, batch: b });
            }
            adam_step(model.params_mut(), &grads, &mut adam, config.learning_rate)?;
            epoch_loss += loss * idx.len() as f64;
        }
        let epoch_loss = epoch_loss / sequences.len() as f64;
        history.push(epoch_loss);
        if config.select_best {
            let full = recurrent_loss(&model, &sequences).unwrap_or(f64::INFINITY);
            eval_history.push(full);
            if full.is_finite() && best.as_ref().is_none_or(|(_, b, _)| full < *b) {
                best = Some((epoch, full, model.params().to_vec()));
            }
        }
        progress(epoch, epoch_loss);
    }
    let best_epoch = best.map(|(epoch, _, params)| {
        model.params_mut().copy_from_slice(&params);
        epoch
    });

    model.meta.dt = Some(dataset.dt);
    model.meta.dataset_fingerprint = Some(dataset.source_fingerprint.clone());
    model.meta.epochs = config.epochs;
    model.meta.train_seed = Some(config.seed);
    model.meta.selected_epoch = best_epoch;
    model.meta.normalization = dataset.normalization.clone();
    Ok(TrainOutcome { model, loss_history: history, eval_history, best_epoch })
}
