use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kernels::dot;
use super::MlpConfig;
use crate::error::{Error, Result};
use crate::rng;
use crate::simplex::ScoreVec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `(outputs, inputs)`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Layer {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    pub fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.inputs..(o + 1) * self.inputs]
    }

    fn is_consistent(&self) -> bool {
        self.inputs > 0
            && self.outputs > 0
            && self.weights.len() == self.inputs * self.outputs
            && self.biases.len() == self.outputs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<Layer>,
}

impl MlpModel {
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidInput("a network needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if !l.is_consistent() {
                return Err(Error::InvalidInput(format!("layer {i} has inconsistent shapes")));
            }
            if i > 0 && layers[i - 1].outputs != l.inputs {
                return Err(Error::Dimension {
                    expected: layers[i - 1].outputs,
                    found: l.inputs,
                });
            }
        }
        if layers.last().expect("nonempty").outputs < 2 {
            return Err(Error::InvalidInput("output layer needs at least 2 units".into()));
        }
        Ok(MlpModel { layers })
    }

    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::InvalidInput("need at least input and output sizes".into()));
        }
        Self::from_layers(layer_sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect())
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_size())
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_size(&self) -> usize {
        self.layers.last().expect("nonempty").outputs
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// All parameters, layer by layer, weights before biases.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
        out
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.parameter_count() {
            return Err(Error::Dimension {
                expected: self.parameter_count(),
                found: params.len(),
            });
        }
        let mut rest = params;
        for l in &mut self.layers {
            let (w, r) = rest.split_at(l.weights.len());
            l.weights.copy_from_slice(w);
            let (b, r) = r.split_at(l.biases.len());
            l.biases.copy_from_slice(b);
            rest = r;
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }

    /// Scores for one sample: affine + ReLU per hidden layer, final affine.
    pub fn forward(&self, x: &[f64]) -> Result<ScoreVec> {
        if x.len() != self.input_size() {
            return Err(Error::Dimension {
                expected: self.input_size(),
                found: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("input contains non-finite values".into()));
        }
        let mut current = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut next: Vec<f64> = (0..layer.outputs)
                .map(|o| layer.biases[o] + dot(layer.row(o), &current))
                .collect();
            if i < last {
                next.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            current = next;
        }
        ScoreVec::new(current)
    }

    /// Batched forward pass. `acts[l]` receives the `(B, outputs_l)` activations
    /// of layer `l` (post-ReLU for hidden layers, raw scores for the last).
    pub(crate) fn forward_batch(&self, inputs: &[&[f64]], acts: &mut Vec<Vec<f64>>) {
        let batch = inputs.len();
        acts.resize_with(self.layers.len(), Vec::new);
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let (before, after) = acts.split_at_mut(l);
            let out = &mut after[0];
            out.clear();
            out.resize(batch * layer.outputs, 0.0);
            let prev = before.last();
            for o in 0..layer.outputs {
                let w = layer.row(o);
                let bias = layer.biases[o];
                for b in 0..batch {
                    let a_prev = match prev {
                        None => inputs[b],
                        Some(p) => &p[b * layer.inputs..(b + 1) * layer.inputs],
                    };
                    let z = bias + dot(w, a_prev);
                    out[b * layer.outputs + o] = if l < last { z.max(0.0) } else { z };
                }
            }
        }
    }
}

/// Weights uniform in `[-sqrt(6 / fan_in), sqrt(6 / fan_in)]`, biases zero.
pub fn init_model(config: &MlpConfig) -> Result<MlpModel> {
    config.validate()?;
    let mut rng = rng::stream(config.seed, rng::tag::INIT);
    let layers = config
        .layer_sizes
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / fan_in as f64).sqrt();
            Layer {
                inputs: fan_in,
                outputs: fan_out,
                weights: (0..fan_in * fan_out)
                    .map(|_| rng.random_range(-limit..=limit))
                    .collect(),
                biases: vec![0.0; fan_out],
            }
        })
        .collect();
    MlpModel::from_layers(layers)
}
