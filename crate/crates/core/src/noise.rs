//! Uniform (symmetric) label noise: a label is kept with probability `1 - eta`,
//! otherwise replaced by one of the other `K - 1` classes chosen uniformly.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    eta: f64,
    seed: u64,
    k: usize,
}

impl NoiseSpec {
    /// Requires `K >= 2` and `0 <= eta < (K - 1) / K`.
    pub fn new(eta: f64, seed: u64, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidSpec(format!("label noise needs K >= 2, got {k}")));
        }
        let limit = max_eta(k);
        if !(eta >= 0.0 && eta < limit) {
            return Err(Error::OutOfRegime { eta, k, limit });
        }
        Ok(NoiseSpec { eta, seed, k })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

/// Exclusive upper limit `(K - 1) / K` of the tolerated noise rate.
pub fn max_eta(k: usize) -> f64 {
    (k as f64 - 1.0) / k as f64
}

/// `eta = alpha (1 - 1/K)`, sweeping from no noise (alpha = 0) towards the limit.
pub fn alpha_to_eta(alpha: f64, k: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidInput(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    if k < 2 {
        return Err(Error::InvalidInput(format!("K must be at least 2, got {k}")));
    }
    Ok(alpha * (1.0 - 1.0 / k as f64))
}

/// Returns a corrupted copy of `labels`; deterministic in `(labels, spec)`.
pub fn corrupt_labels(labels: &[usize], spec: &NoiseSpec) -> Result<Vec<usize>> {
    if let Some(&bad) = labels.iter().find(|&&y| y >= spec.k) {
        return Err(Error::Index {
            index: bad,
            len: spec.k,
        });
    }
    let mut rng = rng::stream(spec.seed, rng::tag::NOISE);
    Ok(labels
        .iter()
        .map(|&y| {
            // one uniform draw per label keeps the stream aligned with the input position
            let flip = rng.random::<f64>() < spec.eta;
            let other = rng.random_range(0..spec.k - 1);
            if flip {
                if other >= y {
                    other + 1
                } else {
                    other
                }
            } else {
                y
            }
        })
        .collect())
}
