use super::kernels::axpy;
use super::model::MlpModel;
use crate::error::{Error, Result};
use crate::loss::{self, LossKind};
use crate::simplex;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// Mean-over-batch gradient, shaped like the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Gradients {
            layers: model
                .layers()
                .iter()
                .map(|l| LayerGrad {
                    weights: vec![0.0; l.weights.len()],
                    biases: vec![0.0; l.biases.len()],
                })
                .collect(),
        }
    }

    /// Flattened in the same order as [`MlpModel::parameters`].
    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
            .collect()
    }

    fn reset(&mut self) {
        for l in &mut self.layers {
            l.weights.fill(0.0);
            l.biases.fill(0.0);
        }
    }

    fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weights
                .iter_mut()
                .chain(l.biases.iter_mut())
                .for_each(|v| *v *= factor);
        }
    }

    fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }
}

/// Reusable buffers for one training run.
pub(crate) struct Backprop {
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
    probs: Vec<f64>,
    pub(crate) grads: Gradients,
}

impl Backprop {
    pub(crate) fn new(model: &MlpModel) -> Self {
        Backprop {
            acts: Vec::new(),
            delta: Vec::new(),
            delta_prev: Vec::new(),
            probs: vec![0.0; model.output_size()],
            grads: Gradients::zeros_like(model),
        }
    }

    /// Fills `self.grads` with the mean gradient over the batch and writes each
    /// sample's loss and hit/miss into the given slices. Returns the mean loss,
    /// or a message if anything became non-finite.
    #[allow(clippy::needless_range_loop)]
    pub(crate) fn run(
        &mut self,
        model: &MlpModel,
        inputs: &[&[f64]],
        labels: &[usize],
        loss: LossKind,
        sample_loss: &mut [f64],
        sample_hit: &mut [bool],
    ) -> std::result::Result<f64, String> {
        let batch = inputs.len();
        let k = model.output_size();
        model.forward_batch(inputs, &mut self.acts);

        self.delta.clear();
        self.delta.resize(batch * k, 0.0);
        let scores = self.acts.last().expect("at least one layer");
        let mut total = 0.0;
        for b in 0..batch {
            let s = &scores[b * k..(b + 1) * k];
            simplex::softmax_into(s, &mut self.probs);
            let value = loss::grad_from_probs(loss, labels[b], &self.probs, &mut self.delta[b * k..(b + 1) * k]);
            sample_loss[b] = value;
            sample_hit[b] = super::argmax(s) == labels[b];
            total += value;
        }
        if !total.is_finite() {
            return Err(format!("non-finite batch loss {total}"));
        }

        self.grads.reset();
        let layers = model.layers();
        for l in (0..layers.len()).rev() {
            let layer = &layers[l];
            let (n_in, n_out) = (layer.inputs, layer.outputs);
            let grad = &mut self.grads.layers[l];
            for o in 0..n_out {
                let g_row = &mut grad.weights[o * n_in..(o + 1) * n_in];
                let mut g_bias = 0.0;
                for b in 0..batch {
                    let d = self.delta[b * n_out + o];
                    if d != 0.0 {
                        let a_prev = if l == 0 {
                            inputs[b]
                        } else {
                            &self.acts[l - 1][b * n_in..(b + 1) * n_in]
                        };
                        axpy(d, a_prev, g_row);
                        g_bias += d;
                    }
                }
                grad.biases[o] = g_bias;
            }
            if l == 0 {
                break;
            }
            self.delta_prev.clear();
            self.delta_prev.resize(batch * n_in, 0.0);
            for b in 0..batch {
                let dst = &mut self.delta_prev[b * n_in..(b + 1) * n_in];
                for o in 0..n_out {
                    let d = self.delta[b * n_out + o];
                    if d != 0.0 {
                        axpy(d, layer.row(o), dst);
                    }
                }
                // ReLU derivative, taken as 0 at the kink
                let act = &self.acts[l - 1][b * n_in..(b + 1) * n_in];
                for (v, &a) in dst.iter_mut().zip(act) {
                    if a <= 0.0 {
                        *v = 0.0;
                    }
                }
            }
            std::mem::swap(&mut self.delta, &mut self.delta_prev);
        }
        self.grads.scale(1.0 / batch as f64);
        if !self.grads.all_finite() {
            return Err("non-finite gradient".into());
        }
        Ok(total / batch as f64)
    }
}

/// Mean loss over the batch and its gradient with respect to every parameter.
pub fn batch_grad(model: &MlpModel, inputs: &[&[f64]], labels: &[usize], loss: LossKind) -> Result<(Gradients, f64)> {
    if inputs.is_empty() {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    if inputs.len() != labels.len() {
        return Err(Error::Dimension {
            expected: inputs.len(),
            found: labels.len(),
        });
    }
    let (m, k) = (model.input_size(), model.output_size());
    if let Some(x) = inputs.iter().find(|x| x.len() != m) {
        return Err(Error::Dimension {
            expected: m,
            found: x.len(),
        });
    }
    if let Some(&y) = labels.iter().find(|&&y| y >= k) {
        return Err(Error::Index { index: y, len: k });
    }
    let mut bp = Backprop::new(model);
    let mut sample_loss = vec![0.0; inputs.len()];
    let mut hits = vec![false; inputs.len()];
    let mean = bp
        .run(model, inputs, labels, loss, &mut sample_loss, &mut hits)
        .map_err(|message| Error::Divergence {
            epoch: 0,
            batch: 0,
            message,
        })?;
    Ok((bp.grads, mean))
}

impl MlpModel {
    /// Plain SGD step `w <- w - lr * g`.
    pub fn sgd_step(&mut self, grads: &Gradients, lr: f64) {
        for (layer, g) in self.layers_mut().iter_mut().zip(&grads.layers) {
            for (w, gw) in layer.weights.iter_mut().zip(&g.weights) {
                *w -= lr * gw;
            }
            for (b, gb) in layer.biases.iter_mut().zip(&g.biases) {
                *b -= lr * gb;
            }
        }
    }
}
