//! Fully connected ReLU network trained by plain mini-batch SGD.
//!
//! Weights are stored row-major as `(outputs, inputs)`. The network emits raw
//! scores; softmax lives in the loss layer. All batch reductions run in a
//! fixed sample order, so training is bit-reproducible for fixed seeds.

mod backprop;
mod checkpoint;
mod kernels;
mod model;
mod train;

pub use backprop::{batch_grad, Gradients, LayerGrad};
pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_FORMAT};
pub use model::{init_model, Layer, MlpModel};
pub use train::{argmax, evaluate, evaluate_with, train, Divergence, TrainRecord, TrainReport};

use crate::error::{Error, Result};
use crate::loss::LossKind;

#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig {
    /// `[m, hidden..., K]`.
    pub layer_sizes: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub loss: LossKind,
    /// Evaluate on the test set after every epoch; otherwise only after the last.
    pub eval_every_epoch: bool,
}

impl MlpConfig {
    pub fn new(layer_sizes: Vec<usize>, loss: LossKind) -> Self {
        MlpConfig {
            layer_sizes,
            learning_rate: 0.1,
            batch_size: 20,
            epochs: 20,
            seed: 0,
            loss,
            eval_every_epoch: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::InvalidSpec("need at least input and output sizes".into()));
        }
        if self.layer_sizes.contains(&0) {
            return Err(Error::InvalidSpec(format!(
                "layer sizes must be positive: {:?}",
                self.layer_sizes
            )));
        }
        if self.output_size() < 2 {
            return Err(Error::InvalidSpec("output layer needs at least 2 classes".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::InvalidSpec(format!("bad learning rate {}", self.learning_rate)));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::InvalidSpec("batch size and epochs must be positive".into()));
        }
        Ok(())
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.layer_sizes.last().expect("validated")
    }
}
