//! Multi-label MLP: ReLU hidden layers with inverted dropout and one
//! independent sigmoid per output label.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::loss::{focal_logit_gradient, weighted_focal_loss, FocalLossSpec};
use crate::error::{Error, Result};
use crate::sample::MultiLabelSample;

pub const DEFAULT_HIDDEN: [usize; 2] = [64, 32];
pub const DEFAULT_DROPOUT: f64 = 0.5;

/// Fully connected layer; `weights` is row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.biases)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    layers: Vec<Dense>,
    dropout: f64,
}

/// Gradients with the same shapes as the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    fn zeros_like(model: &MlpModel) -> Self {
        Self {
            layers: model.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect(),
        }
    }

    fn add_scaled(&mut self, other: &Gradients, scale: f64) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights.iter_mut().zip(&b.weights).for_each(|(x, y)| *x += scale * y);
            a.biases.iter_mut().zip(&b.biases).for_each(|(x, y)| *x += scale * y);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
    }
}

struct Trace {
    /// Input followed by each layer's (post-dropout) activation.
    activations: Vec<Vec<f64>>,
    /// Per hidden layer: ReLU derivative times dropout scale.
    gates: Vec<Vec<f64>>,
}

impl MlpModel {
    /// Randomly initialized network with layer widths
    /// `[inputs, hidden..., outputs]` (He-uniform weights, zero biases).
    pub fn new<R: Rng + ?Sized>(widths: &[usize], dropout: f64, rng: &mut R) -> Result<Self> {
        let mut model = Self::zeros(widths, dropout)?;
        for layer in &mut model.layers {
            let bound = (6.0 / layer.inputs as f64).sqrt();
            layer.weights.iter_mut().for_each(|w| *w = rng.random_range(-bound..bound));
        }
        Ok(model)
    }

    pub fn zeros(widths: &[usize], dropout: f64) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::InvalidConfig(format!("invalid layer widths {widths:?}")));
        }
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::InvalidConfig(format!("dropout rate {dropout} outside [0, 1)")));
        }
        Ok(Self {
            layers: widths.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
            dropout,
        })
    }

    pub(crate) fn from_layers(layers: Vec<Dense>, dropout: f64) -> Self {
        Self { layers, dropout }
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn dropout(&self) -> f64 {
        self.dropout
    }

    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].inputs)
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    pub fn num_inputs(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn num_outputs(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    /// Output probabilities. Dropout is active only when `training` is set.
    pub fn forward<R: Rng + ?Sized>(&self, x: &[f64], training: bool, rng: &mut R) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let trace = self.trace(x, training, rng);
        Ok(trace.activations.last().cloned().unwrap_or_default())
    }

    /// Deterministic inference forward pass.
    pub fn infer(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.trace(x, false, &mut NoRng).activations.pop().unwrap_or_default())
    }

    /// Thresholds [`infer`](Self::infer) at 0.5, inclusive.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<bool>> {
        Ok(self.infer(x)?.into_iter().map(|p| p >= 0.5).collect())
    }

    /// Loss and exact gradients for one example. When `training` is set the
    /// dropout masks are drawn from `rng`, as in [`forward`](Self::forward).
    pub fn backward<R: Rng + ?Sized>(
        &self,
        x: &[f64],
        targets: &[bool],
        spec: &FocalLossSpec,
        training: bool,
        rng: &mut R,
    ) -> Result<(f64, Gradients)> {
        self.check_input(x)?;
        if targets.len() != self.num_outputs() {
            return Err(Error::DimensionMismatch {
                expected: self.num_outputs(),
                actual: targets.len(),
            });
        }
        let trace = self.trace(x, training, rng);
        let probs = trace.activations.last().expect("trace has an output");
        let loss = weighted_focal_loss(probs, targets, spec);

        let mut grads = Gradients::zeros_like(self);
        let mut delta = focal_logit_gradient(probs, targets, spec);
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            let input = &trace.activations[k];
            let g = &mut grads.layers[k];
            for (o, &d) in delta.iter().enumerate() {
                g.biases[o] = d;
                let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                row.iter_mut().zip(input).for_each(|(w, &a)| *w = d * a);
            }
            if k == 0 {
                break;
            }
            let mut upstream = vec![0.0; layer.inputs];
            for (row, &d) in layer.weights.chunks_exact(layer.inputs).zip(&delta) {
                upstream.iter_mut().zip(row).for_each(|(u, &w)| *u += w * d);
            }
            upstream.iter_mut().zip(&trace.gates[k - 1]).for_each(|(u, &gate)| *u *= gate);
            delta = upstream;
        }
        Ok((loss, grads))
    }

    /// Mean loss and mean gradients over a batch.
    pub fn batch_gradients<R: Rng + ?Sized>(
        &self,
        batch: &[&MultiLabelSample],
        spec: &FocalLossSpec,
        training: bool,
        rng: &mut R,
    ) -> Result<(f64, Gradients)> {
        let mut total = Gradients::zeros_like(self);
        let mut loss = 0.0;
        let scale = 1.0 / batch.len().max(1) as f64;
        for sample in batch {
            let (l, g) = self.backward(&sample.features, &sample.labels, spec, training, rng)?;
            loss += l * scale;
            total.add_scaled(&g, scale);
        }
        Ok((loss, total))
    }

    pub fn apply_gradients(&mut self, grads: &Gradients, learning_rate: f64) {
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            layer.weights.iter_mut().zip(&g.weights).for_each(|(w, d)| *w -= learning_rate * d);
            layer.biases.iter_mut().zip(&g.biases).for_each(|(b, d)| *b -= learning_rate * d);
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.num_inputs() {
            return Err(Error::DimensionMismatch {
                expected: self.num_inputs(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    fn trace<R: Rng + ?Sized>(&self, x: &[f64], training: bool, rng: &mut R) -> Trace {
        let keep = 1.0 - self.dropout;
        let drop = training && self.dropout > 0.0;
        let mut activations = vec![x.to_vec()];
        let mut gates = Vec::with_capacity(self.layers.len() - 1);
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let z = layer.apply(activations.last().expect("non-empty"));
            if k == last {
                activations.push(z.into_iter().map(sigmoid).collect());
            } else {
                let gate: Vec<f64> = z
                    .iter()
                    .map(|&v| {
                        let relu = if v > 0.0 { 1.0 } else { 0.0 };
                        let mask = if drop {
                            if rng.random::<f64>() < keep {
                                1.0 / keep
                            } else {
                                0.0
                            }
                        } else {
                            1.0
                        };
                        relu * mask
                    })
                    .collect();
                activations.push(z.iter().zip(&gate).map(|(v, g)| v * g).collect());
                gates.push(gate);
            }
        }
        Trace { activations, gates }
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Never consulted: only used for passes without dropout.
struct NoRng;

impl rand::RngCore for NoRng {
    fn next_u32(&mut self) -> u32 {
        unreachable!("inference draws no randomness")
    }

    fn next_u64(&mut self) -> u64 {
        unreachable!("inference draws no randomness")
    }

    fn fill_bytes(&mut self, _dst: &mut [u8]) {
        unreachable!("inference draws no randomness")
    }
}
