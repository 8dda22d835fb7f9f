use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::Normalization;

use crate::{Error, Result};

/// Input ordering convention recorded in checkpoints.
pub const INPUT_ORDERING: &str = "oldest_first";

/// Training provenance carried along with the parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub dt: Option<f64>,
    pub dataset_fingerprint: Option<String>,
    pub epochs: usize,
    pub init_seed: u64,
    pub train_seed: Option<u64>,
    /// Zero-based epoch whose parameters were kept, when training selected the best epoch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_epoch: Option<usize>,
    /// Set when trained on standardised data; rollouts then map in and out of it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<Normalization>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct LayerShape {
    pub inputs: usize,
    pub outputs: usize,
    /// Offset of the weight block in the flat parameter vector; biases follow it.
    pub offset: usize,
}

impl LayerShape {
    pub fn weight_len(&self) -> usize {
        self.inputs * self.outputs
    }

    pub fn bias_offset(&self) -> usize {
        self.offset + self.weight_len()
    }

    pub fn end(&self) -> usize {
        self.bias_offset() + self.outputs
    }
}

/// The memory-based residual flow map `z_{n+1} = z_n + N(z_{n-n_M}, ..., z_n)`.
///
/// `N` is a dense ReLU network whose input is the history window flattened
/// oldest row first, so the current state `z_n` occupies the last `obs_dim`
/// input slots. Parameters live in one flat vector, layer by layer: the
/// row-major `outputs × inputs` weight matrix followed by the bias vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMapModel {
    obs_dim: usize,
    memory_len: usize,
    hidden_layers: Vec<usize>,
    params: Vec<f64>,
    layers: Vec<LayerShape>,
    pub meta: ModelMeta,
}

pub(crate) fn layer_shapes(obs_dim: usize, memory_len: usize, hidden: &[usize]) -> Vec<LayerShape> {
    let mut widths = Vec::with_capacity(hidden.len() + 2);
    widths.push(obs_dim * (memory_len + 1));
    widths.extend_from_slice(hidden);
    widths.push(obs_dim);
    let mut offset = 0;
    widths
        .windows(2)
        .map(|w| {
            let shape = LayerShape { inputs: w[0], outputs: w[1], offset };
            offset = shape.end();
            shape
        })
        .collect()
}

impl FlowMapModel {
    /// He-normal weights (`std = sqrt(2 / fan_in)`) and zero biases.
    pub fn init(obs_dim: usize, memory_len: usize, hidden_layers: &[usize], seed: u64) -> Result<Self> {
        let mut model = Self::zeros(obs_dim, memory_len, hidden_layers)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for shape in model.layers.clone() {
            let normal = Normal::new(0.0, (2.0 / shape.inputs as f64).sqrt()).unwrap();
            for w in &mut model.params[shape.offset..shape.bias_offset()] {
                *w = normal.sample(&mut rng);
            }
        }
        model.meta.init_seed = seed;
        Ok(model)
    }

    pub fn zeros(obs_dim: usize, memory_len: usize, hidden_layers: &[usize]) -> Result<Self> {
        if obs_dim == 0 {
            return Err(Error::InvalidParameter("obs_dim must be at least 1".into()));
        }
        if hidden_layers.contains(&0) {
            return Err(Error::InvalidParameter("hidden widths must be at least 1".into()));
        }
        let layers = layer_shapes(obs_dim, memory_len, hidden_layers);
        let n = layers.last().map(LayerShape::end).unwrap_or(0);
        Ok(Self {
            obs_dim,
            memory_len,
            hidden_layers: hidden_layers.to_vec(),
            params: vec![0.0; n],
            layers,
            meta: ModelMeta::default(),
        })
    }

    /// Rebuilds a model from a flat parameter vector in the documented layout.
    pub fn from_params(obs_dim: usize, memory_len: usize, hidden_layers: &[usize], params: Vec<f64>) -> Result<Self> {
        let mut model = Self::zeros(obs_dim, memory_len, hidden_layers)?;
        if params.len() != model.params.len() {
            return Err(Error::BadShape(format!(
                "{} parameters supplied, architecture needs {}",
                params.len(),
                model.params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::BadShape("non-finite parameter".into()));
        }
        model.params = params;
        Ok(model)
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn memory_len(&self) -> usize {
        self.memory_len
    }

    pub fn hidden_layers(&self) -> &[usize] {
        &self.hidden_layers
    }

    /// Number of history rows the model consumes, `memory_len + 1`.
    pub fn window_len(&self) -> usize {
        self.memory_len + 1
    }

    pub fn input_width(&self) -> usize {
        self.obs_dim * self.window_len()
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Row-major `outputs × inputs` weights of layer `l`.
    pub fn weights(&self, l: usize) -> &[f64] {
        let s = self.layers[l];
        &self.params[s.offset..s.bias_offset()]
    }

    pub fn biases(&self, l: usize) -> &[f64] {
        let s = self.layers[l];
        &self.params[s.bias_offset()..s.end()]
    }

    pub fn weights_mut(&mut self, l: usize) -> &mut [f64] {
        let s = self.layers[l];
        &mut self.params[s.offset..s.bias_offset()]
    }

    pub fn biases_mut(&mut self, l: usize) -> &mut [f64] {
        let s = self.layers[l];
        &mut self.params[s.bias_offset()..s.end()]
    }

    pub fn new_tape(&self) -> Tape {
        Tape {
            activations: std::iter::once(self.input_width())
                .chain(self.layers.iter().map(|s| s.outputs))
                .map(|w| vec![0.0; w])
                .collect(),
        }
    }

    /// `N(window)`: the increment added to the newest row of `window`.
    pub fn net_forward(&self, window: &[f64], tape: Option<&mut Tape>) -> Result<Vec<f64>> {
        if window.len() != self.input_width() {
            return Err(Error::BadShape(format!(
                "window has {} values, model expects {} ({} rows × {})",
                window.len(),
                self.input_width(),
                self.window_len(),
                self.obs_dim
            )));
        }
        match tape {
            Some(tape) => {
                self.forward_tape(window, tape);
                Ok(tape.output().to_vec())
            }
            None => {
                let mut tape = self.new_tape();
                self.forward_tape(window, &mut tape);
                Ok(tape.output().to_vec())
            }
        }
    }

    /// Forward pass recording every layer's post-activation output.
    pub(crate) fn forward_tape(&self, input: &[f64], tape: &mut Tape) {
        tape.activations[0].copy_from_slice(input);
        let last = self.layers.len() - 1;
        for (l, s) in self.layers.iter().enumerate() {
            let (before, after) = tape.activations.split_at_mut(l + 1);
            let a_in = &before[l];
            let a_out = &mut after[0];
            let w = &self.params[s.offset..s.bias_offset()];
            let b = &self.params[s.bias_offset()..s.end()];
            for (o, out) in a_out.iter_mut().enumerate() {
                let row = &w[o * s.inputs..(o + 1) * s.inputs];
                let z = b[o] + dot(row, a_in);
                *out = if l < last { z.max(0.0) } else { z };
            }
        }
    }

    /// Backpropagates `grad_out` through a recorded pass.
    ///
    /// Parameter gradients are accumulated into `grads`. When `grad_input` is
    /// given, the gradient with respect to the network input is added to it.
    pub(crate) fn backward_tape(
        &self,
        tape: &Tape,
        grad_out: &[f64],
        grads: &mut [f64],
        grad_input: Option<&mut [f64]>,
        scratch: &mut BackwardScratch,
    ) {
        let nl = self.layers.len();
        scratch.delta.clear();
        scratch.delta.extend_from_slice(grad_out);
        let mut grad_input = grad_input;
        for l in (0..nl).rev() {
            let s = self.layers[l];
            let a_in = &tape.activations[l];
            let w = &self.params[s.offset..s.bias_offset()];
            {
                let (gw, gb) = grads[s.offset..s.end()].split_at_mut(s.weight_len());
                for (o, &d) in scratch.delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    gb[o] += d;
                    axpy(d, a_in, &mut gw[o * s.inputs..(o + 1) * s.inputs]);
                }
            }
            if l > 0 {
                scratch.next.clear();
                scratch.next.resize(s.inputs, 0.0);
                for (o, &d) in scratch.delta.iter().enumerate() {
                    if d != 0.0 {
                        axpy(d, &w[o * s.inputs..(o + 1) * s.inputs], &mut scratch.next);
                    }
                }
                // ReLU mask from the recorded post-activations.
                for (g, &a) in scratch.next.iter_mut().zip(a_in) {
                    if a <= 0.0 {
                        *g = 0.0;
                    }
                }
                std::mem::swap(&mut scratch.delta, &mut scratch.next);
            } else if let Some(gi) = grad_input.as_deref_mut() {
                for (o, &d) in scratch.delta.iter().enumerate() {
                    if d != 0.0 {
                        axpy(d, &w[o * s.inputs..(o + 1) * s.inputs], gi);
                    }
                }
            }
        }
    }
}

/// Per-layer activations of one forward pass; `activations[0]` is the input.
#[derive(Debug, Clone)]
pub struct Tape {
    activations: Vec<Vec<f64>>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        self.activations.last().unwrap()
    }

    pub fn activations(&self) -> &[Vec<f64>] {
        &self.activations
    }
}

#[derive(Debug, Default)]
pub(crate) struct BackwardScratch {
    delta: Vec<f64>,
    next: Vec<f64>,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four accumulators let the compiler keep several FMAs in flight.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4 * 4;
    for (x, y) in a[..chunks].chunks_exact(4).zip(b[..chunks].chunks_exact(4)) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in a[chunks..].iter().zip(&b[chunks..]) {
        sum += x * y;
    }
    sum
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
