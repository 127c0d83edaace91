//! Finite-difference oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use frloss::loss::{loss_gradient_scores, loss_value};
use frloss::mlp::{batch_grad, MlpModel};
use frloss::rng::{self, StreamRng};
use frloss::simplex::softmax;
use frloss::{LossKind, ScoreVec};
use rand::Rng;

pub const LOSS_FD_STEP: f64 = 1e-5;
pub const LOSS_FD_TOL: f64 = 1e-5;
pub const LOSS_FD_MIN_PY: f64 = 1e-6;
pub const MLP_FD_STEP: f64 = 1e-4;
pub const MLP_FD_TOL: f64 = 1e-4;

pub fn all_kinds() -> Vec<LossKind> {
    vec![
        LossKind::Mse,
        LossKind::Mae,
        LossKind::Ce,
        LossKind::qce(0.7).unwrap(),
        LossKind::Fr,
        LossKind::Hellinger,
    ]
}

pub fn test_rng(seed: u64) -> StreamRng {
    rng::stream(seed, 0x0074_6573_7469_6e67)
}

/// `|a - b| / max(|a|, |b|)` in the Euclidean norm; 0 when both are zero.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = na.max(nb);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

fn loss_at(kind: LossKind, y: usize, s: &[f64]) -> f64 {
    let p = softmax(&ScoreVec::new(s.to_vec()).unwrap()).unwrap();
    loss_value(kind, y, &p).unwrap()
}

/// Central differences of the loss with respect to the scores.
pub fn numeric_score_gradient(kind: LossKind, y: usize, s: &[f64], h: f64) -> Vec<f64> {
    let mut s = s.to_vec();
    (0..s.len())
        .map(|i| {
            let orig = s[i];
            s[i] = orig + h;
            let up = loss_at(kind, y, &s);
            s[i] = orig - h;
            let down = loss_at(kind, y, &s);
            s[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

#[derive(Debug, Default)]
pub struct FdSummary {
    pub checked: usize,
    pub skipped: usize,
    pub worst: f64,
}

/// Random `(s, y)` with `K` in {2, 5, 10}; cases with `p_y` below the cutoff
/// are drawn again and counted as skipped.
pub fn loss_gradient_check(kind: LossKind, cases: usize, seed: u64) -> FdSummary {
    let mut rng = test_rng(seed);
    let mut out = FdSummary::default();
    while out.checked < cases {
        let k = [2, 5, 10][rng.random_range(0..3)];
        let s: Vec<f64> = (0..k).map(|_| rng.random_range(-6.0..6.0)).collect();
        let y = rng.random_range(0..k);
        let sv = ScoreVec::new(s.clone()).unwrap();
        if softmax(&sv).unwrap()[y] < LOSS_FD_MIN_PY {
            out.skipped += 1;
            continue;
        }
        let analytic = loss_gradient_scores(kind, y, &sv).unwrap();
        let numeric = numeric_score_gradient(kind, y, &s, LOSS_FD_STEP);
        out.worst = out.worst.max(relative_error(&analytic, &numeric));
        out.checked += 1;
    }
    out
}

/// Mean batch loss computed sample by sample through the public forward pass.
pub fn mean_batch_loss(model: &MlpModel, inputs: &[Vec<f64>], labels: &[usize], kind: LossKind) -> f64 {
    let total: f64 = inputs
        .iter()
        .zip(labels)
        .map(|(x, &y)| loss_at(kind, y, model.forward(x).unwrap().as_slice()))
        .sum();
    total / inputs.len() as f64
}

pub fn random_model<R: Rng>(rng: &mut R, sizes: &[usize]) -> MlpModel {
    let mut model = MlpModel::zeros(sizes).unwrap();
    let n = model.parameter_count();
    let params: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    model.set_parameters(&params).unwrap();
    model
}

/// Smallest `|pre-activation|` over every hidden unit and sample.
pub fn min_hidden_preactivation(model: &MlpModel, inputs: &[Vec<f64>]) -> f64 {
    let layers = model.layers();
    let mut min = f64::INFINITY;
    for x in inputs {
        let mut a = x.clone();
        for layer in &layers[..layers.len() - 1] {
            let z: Vec<f64> = (0..layer.outputs)
                .map(|o| layer.row(o).iter().zip(&a).map(|(w, v)| w * v).sum::<f64>() + layer.biases[o])
                .collect();
            min = z.iter().fold(min, |m, v| m.min(v.abs()));
            a = z.into_iter().map(|v| v.max(0.0)).collect();
        }
    }
    min
}

/// Per-parameter check on random 3-4-3 nets with batches of 4. Nets with a
/// hidden pre-activation within `0.01` of the ReLU kink are redrawn.
/// Returns the worst relative error over all parameters of all nets.
pub fn mlp_gradient_check(kind: LossKind, nets: usize, seed: u64) -> f64 {
    let mut rng = test_rng(seed);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < nets {
        let mut model = random_model(&mut rng, &[3, 4, 3]);
        let inputs: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let labels: Vec<usize> = (0..4).map(|_| rng.random_range(0..3)).collect();
        if min_hidden_preactivation(&model, &inputs) < 0.01 {
            continue;
        }
        let refs: Vec<&[f64]> = inputs.iter().map(Vec::as_slice).collect();
        let analytic = batch_grad(&model, &refs, &labels, kind).unwrap().0.flatten();
        let mut params = model.parameters();
        for i in 0..params.len() {
            let orig = params[i];
            params[i] = orig + MLP_FD_STEP;
            model.set_parameters(&params).unwrap();
            let up = mean_batch_loss(&model, &inputs, &labels, kind);
            params[i] = orig - MLP_FD_STEP;
            model.set_parameters(&params).unwrap();
            let down = mean_batch_loss(&model, &inputs, &labels, kind);
            params[i] = orig;
            let numeric = (up - down) / (2.0 * MLP_FD_STEP);
            worst = worst.max(relative_error(&[analytic[i]], &[numeric]));
        }
        model.set_parameters(&params).unwrap();
        done += 1;
    }
    worst
}
