//! Labelled datasets: synthetic Gaussian clusters, MNIST (IDX), and a CSV form.

mod csv_io;
mod mnist;
mod synthetic;

pub use csv_io::{load_csv, load_csv_with_classes, save_csv};
pub use mnist::{
    load_mnist, parse_idx_images, parse_idx_labels, read_idx_images, read_idx_labels, IdxImages, IDX_IMAGES_MAGIC,
    IDX_LABELS_MAGIC,
};
pub use synthetic::{generate_synthetic, SyntheticSpec};

use crate::error::{Error, Result};

/// `N x m` row-major features with labels in `[0, K)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    k: usize,
    m: usize,
}

impl LabeledDataset {
    pub fn new(features: Vec<f64>, labels: Vec<usize>, k: usize, m: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidInput("dataset has no samples".into()));
        }
        if m == 0 {
            return Err(Error::InvalidInput("feature dimension must be positive".into()));
        }
        if k < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 classes, got {k}")));
        }
        if features.len() != labels.len() * m {
            return Err(Error::Dimension {
                expected: labels.len() * m,
                found: features.len(),
            });
        }
        if let Some(&y) = labels.iter().find(|&&y| y >= k) {
            return Err(Error::Index { index: y, len: k });
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "feature {} of sample {} is not finite",
                i % m,
                i / m
            )));
        }
        Ok(LabeledDataset { features, labels, k, m })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.m..(i + 1) * self.m]
    }

    /// Same features, new labels (e.g. after label corruption).
    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                found: labels.len(),
            });
        }
        if let Some(&y) = labels.iter().find(|&&y| y >= self.k) {
            return Err(Error::Index { index: y, len: self.k });
        }
        Ok(LabeledDataset {
            features: self.features.clone(),
            labels,
            k: self.k,
            m: self.m,
        })
    }

    /// The first `n` samples (all of them if `n >= len`).
    pub fn head(&self, n: usize) -> Self {
        let n = n.clamp(1, self.len());
        LabeledDataset {
            features: self.features[..n * self.m].to_vec(),
            labels: self.labels[..n].to_vec(),
            k: self.k,
            m: self.m,
        }
    }

    /// Widens the class count, e.g. to align a train/test pair.
    pub fn with_classes(mut self, k: usize) -> Result<Self> {
        if k < self.k {
            return Err(Error::InvalidInput(format!(
                "cannot shrink class count from {} to {k}",
                self.k
            )));
        }
        self.k = k;
        Ok(self)
    }
}
