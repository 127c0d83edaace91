use rand::seq::SliceRandom;

use super::backprop::Backprop;
use super::model::MlpModel;
use super::MlpConfig;
use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::loss::LossKind;
use crate::rng;

/// Metrics after one epoch. Training metrics are accumulated while the epoch
/// runs (each sample scored just before its batch's update).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    /// `None` when per-epoch evaluation is disabled and this is not the last epoch.
    pub test_acc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    pub epoch: usize,
    pub batch: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub records: Vec<TrainRecord>,
    /// Set when training stopped early on a non-finite loss, gradient or parameter.
    pub divergence: Option<Divergence>,
}

impl TrainReport {
    pub fn final_test_acc(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.test_acc)
    }

    pub fn best_test_acc(&self) -> Option<f64> {
        self.records.iter().filter_map(|r| r.test_acc).reduce(f64::max)
    }
}

/// Index of the largest score; ties go to the smallest index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in scores.iter().enumerate().skip(1) {
        if v > scores[best] {
            best = i;
        }
    }
    best
}

fn check_dims(model: &MlpModel, ds: &LabeledDataset) -> Result<()> {
    if ds.m() != model.input_size() {
        return Err(Error::Dimension {
            expected: model.input_size(),
            found: ds.m(),
        });
    }
    if ds.k() > model.output_size() {
        return Err(Error::Dimension {
            expected: model.output_size(),
            found: ds.k(),
        });
    }
    Ok(())
}

const EVAL_CHUNK: usize = 256;

/// `(accuracy, mean loss)` over the dataset.
pub fn evaluate(model: &MlpModel, ds: &LabeledDataset, loss: LossKind) -> Result<(f64, f64)> {
    evaluate_with(model, ds, loss, Execution::default())
}

pub fn evaluate_with(model: &MlpModel, ds: &LabeledDataset, loss: LossKind, exec: Execution) -> Result<(f64, f64)> {
    check_dims(model, ds)?;
    let n = ds.len();
    let chunks = n.div_ceil(EVAL_CHUNK);
    let k = model.output_size();
    let parts = exec.map_range(chunks, |c| {
        let range = c * EVAL_CHUNK..((c + 1) * EVAL_CHUNK).min(n);
        let inputs: Vec<&[f64]> = range.clone().map(|i| ds.row(i)).collect();
        let mut acts = Vec::new();
        model.forward_batch(&inputs, &mut acts);
        let scores = acts.last().expect("at least one layer");
        let mut probs = vec![0.0; k];
        range
            .enumerate()
            .map(|(b, i)| {
                let s = &scores[b * k..(b + 1) * k];
                crate::simplex::softmax_into(s, &mut probs);
                let y = ds.labels()[i];
                (argmax(s) == y, crate::loss::loss_from_probs(loss, y, &probs))
            })
            .collect::<Vec<_>>()
    });
    let mut hits = 0usize;
    let mut total = 0.0;
    for (hit, value) in parts.into_iter().flatten() {
        hits += usize::from(hit);
        total += value;
    }
    Ok((hits as f64 / n as f64, total / n as f64))
}

/// Mini-batch SGD for `config.epochs` epochs, reshuffling every epoch.
pub fn train(
    model: &mut MlpModel,
    train_ds: &LabeledDataset,
    test_ds: Option<&LabeledDataset>,
    config: &MlpConfig,
) -> Result<TrainReport> {
    config.validate()?;
    if model.layer_sizes() != config.layer_sizes {
        return Err(Error::InvalidSpec(format!(
            "model shape {:?} does not match config {:?}",
            model.layer_sizes(),
            config.layer_sizes
        )));
    }
    check_dims(model, train_ds)?;
    if let Some(test) = test_ds {
        check_dims(model, test)?;
    }

    let n = train_ds.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut shuffle_rng = rng::stream(config.seed, rng::tag::SHUFFLE);
    let mut bp = Backprop::new(model);
    let mut sample_loss = vec![0.0; n];
    let mut sample_hit = vec![false; n];
    let mut batch_loss = vec![0.0; config.batch_size];
    let mut batch_hit = vec![false; config.batch_size];
    let mut records = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        for (batch_index, idx) in order.chunks(config.batch_size).enumerate() {
            let inputs: Vec<&[f64]> = idx.iter().map(|&i| train_ds.row(i)).collect();
            let labels: Vec<usize> = idx.iter().map(|&i| train_ds.labels()[i]).collect();
            let b = idx.len();
            let outcome = bp.run(
                model,
                &inputs,
                &labels,
                config.loss,
                &mut batch_loss[..b],
                &mut batch_hit[..b],
            );
            let diverged = |message: String| TrainReport {
                records: records.clone(),
                divergence: Some(Divergence {
                    epoch,
                    batch: batch_index,
                    message,
                }),
            };
            if let Err(message) = outcome {
                return Ok(diverged(message));
            }
            for (j, &i) in idx.iter().enumerate() {
                sample_loss[i] = batch_loss[j];
                sample_hit[i] = batch_hit[j];
            }
            model.sgd_step(&bp.grads, config.learning_rate);
            if !model.all_finite() {
                return Ok(diverged("non-finite parameter after update".into()));
            }
        }

        // summed in sample-index order, independent of the shuffle
        let train_loss = sample_loss.iter().sum::<f64>() / n as f64;
        let train_acc = sample_hit.iter().filter(|&&h| h).count() as f64 / n as f64;
        let last = epoch + 1 == config.epochs;
        let test_acc = match test_ds {
            Some(test) if config.eval_every_epoch || last => Some(evaluate(model, test, config.loss)?.0),
            _ => None,
        };
        records.push(TrainRecord {
            epoch: epoch + 1,
            train_loss,
            train_acc,
            test_acc,
        });
    }
    Ok(TrainReport {
        records,
        divergence: None,
    })
}
