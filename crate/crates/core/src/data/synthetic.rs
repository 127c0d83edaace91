use std::collections::HashSet;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};

/// Gaussian clusters centred on `K` distinct vertices of the hypercube
/// `{-class_sep, +class_sep}^m`, unit isotropic variance.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_train: usize,
    pub n_test: usize,
    pub m: usize,
    pub k: usize,
    pub class_sep: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_train: 8000,
            n_test: 2000,
            m: 100,
            k: 10,
            class_sep: 0.35,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_train == 0 || self.n_test == 0 {
            return Err(Error::InvalidSpec("train and test sizes must be positive".into()));
        }
        if self.m == 0 {
            return Err(Error::InvalidSpec("dimension must be positive".into()));
        }
        if self.k < 2 {
            return Err(Error::InvalidSpec(format!("need at least 2 classes, got {}", self.k)));
        }
        let vertex_cap = 1u64 << self.m.min(20);
        if self.k as u64 > vertex_cap {
            return Err(Error::InvalidSpec(format!(
                "{} classes exceed the {vertex_cap} available hypercube vertices",
                self.k
            )));
        }
        if !(self.class_sep.is_finite() && self.class_sep > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "class_sep must be positive, got {}",
                self.class_sep
            )));
        }
        Ok(())
    }
}

fn pick_vertices(spec: &SyntheticSpec) -> Vec<Vec<f64>> {
    let mut rng = rng::stream(spec.seed, rng::tag::VERTICES);
    let mut seen = HashSet::new();
    let mut vertices = Vec::with_capacity(spec.k);
    while vertices.len() < spec.k {
        let signs: Vec<bool> = (0..spec.m).map(|_| rng.random::<bool>()).collect();
        if seen.insert(signs.clone()) {
            vertices.push(
                signs
                    .iter()
                    .map(|&s| if s { spec.class_sep } else { -spec.class_sep })
                    .collect(),
            );
        }
    }
    vertices
}

fn draw(n: usize, vertices: &[Vec<f64>], m: usize, rng: &mut StreamRng) -> Result<LabeledDataset> {
    let k = vertices.len();
    let mut features = Vec::with_capacity(n * m);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let y = rng.random_range(0..k);
        labels.push(y);
        features.extend(vertices[y].iter().map(|c| {
            let z: f64 = StandardNormal.sample(rng);
            c + z
        }));
    }
    LabeledDataset::new(features, labels, k, m)
}

/// Train and test splits drawn from independent streams of the same seed.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(LabeledDataset, LabeledDataset)> {
    spec.validate()?;
    let vertices = pick_vertices(spec);
    let train = draw(
        spec.n_train,
        &vertices,
        spec.m,
        &mut rng::stream(spec.seed, rng::tag::TRAIN),
    )?;
    let test = draw(
        spec.n_test,
        &vertices,
        spec.m,
        &mut rng::stream(spec.seed, rng::tag::TEST),
    )?;
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize) -> SyntheticSpec {
        SyntheticSpec {
            n_train: n,
            n_test: n,
            m: 100,
            k: 10,
            class_sep: 1.0,
            seed: 7,
        }
    }

    #[test]
    fn shapes_and_coverage() {
        let (train, test) = generate_synthetic(&spec(1000)).unwrap();
        assert_eq!((train.len(), train.m(), train.k()), (1000, 100, 10));
        assert_eq!(test.len(), 1000);
        let mut seen = [false; 10];
        train.labels().iter().for_each(|&y| seen[y] = true);
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn deterministic() {
        assert_eq!(
            generate_synthetic(&spec(300)).unwrap(),
            generate_synthetic(&spec(300)).unwrap()
        );
    }

    #[test]
    fn train_split_independent_of_test_size() {
        let a = generate_synthetic(&spec(200)).unwrap().0;
        let mut other = spec(200);
        other.n_test = 17;
        assert_eq!(a, generate_synthetic(&other).unwrap().0);
    }

    #[test]
    fn class_frequencies_concentrate() {
        let mut s = spec(100_000);
        s.m = 4;
        s.n_test = 1;
        let (train, _) = generate_synthetic(&s).unwrap();
        let n = train.len() as f64;
        let sigma = (0.1f64 * 0.9 / n).sqrt();
        for class in 0..10 {
            let freq = train.labels().iter().filter(|&&y| y == class).count() as f64 / n;
            assert!((freq - 0.1).abs() <= 3.0 * sigma, "class {class}: {freq}");
        }
    }

    #[test]
    fn cluster_means_sit_on_distinct_vertices() {
        let mut s = spec(20_000);
        s.m = 3;
        s.k = 8;
        s.class_sep = 2.0;
        let (train, _) = generate_synthetic(&s).unwrap();
        let mut sums = [[0.0; 3]; 8];
        let mut counts = [0usize; 8];
        for i in 0..train.len() {
            let y = train.labels()[i];
            counts[y] += 1;
            for (acc, v) in sums[y].iter_mut().zip(train.row(i)) {
                *acc += v;
            }
        }
        let mut corners = HashSet::new();
        for (y, sum) in sums.iter().enumerate() {
            let mean: Vec<f64> = sum.iter().map(|v| v / counts[y] as f64).collect();
            for v in &mean {
                assert!((v.abs() - 2.0).abs() < 0.1, "{mean:?}");
            }
            corners.insert(mean.iter().map(|v| *v > 0.0).collect::<Vec<_>>());
        }
        assert_eq!(corners.len(), 8);
    }

    #[test]
    fn rejects_too_many_classes() {
        let mut s = spec(10);
        s.m = 2;
        s.k = 5;
        assert!(matches!(generate_synthetic(&s), Err(Error::InvalidSpec(_))));
        s.k = 4;
        assert!(generate_synthetic(&s).is_ok());
    }
}
