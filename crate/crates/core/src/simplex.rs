//! Closed-form geometry of the probability simplex.
//!
//! The map `p -> 2 sqrt(p)` sends the simplex onto the positive orthant of the
//! radius-2 sphere, where the Fisher metric is the round metric. Fisher-Rao
//! distance is then a great-circle arc and Hellinger distance half the chord.

use std::ops::Deref;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};

/// Absolute tolerance on `sum(p) == 1`.
pub const SUM_TOLERANCE: f64 = 1e-9;
/// Entries in `(-NEGATIVE_SLACK, 0)` are clamped to zero, anything lower is rejected.
pub const NEGATIVE_SLACK: f64 = 1e-12;

/// A point on the simplex: `K >= 2` nonnegative entries summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVec(Vec<f64>);

impl ProbVec {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "a distribution needs at least 2 classes, got {}",
                values.len()
            )));
        }
        let mut values = values;
        for (i, v) in values.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("entry {i} is not finite")));
            }
            if *v < 0.0 {
                if *v <= -NEGATIVE_SLACK {
                    return Err(Error::InvalidInput(format!("entry {i} is negative ({v})")));
                }
                *v = 0.0;
            }
            if *v > 1.0 + SUM_TOLERANCE {
                return Err(Error::InvalidInput(format!("entry {i} exceeds 1 ({v})")));
            }
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidInput(format!("entries sum to {sum}, not 1")));
        }
        Ok(ProbVec(values))
    }

    /// The vertex `e^(y)` of the simplex.
    pub fn one_hot(k: usize, y: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidInput(format!(
                "a distribution needs at least 2 classes, got {k}"
            )));
        }
        if y >= k {
            return Err(Error::Index { index: y, len: k });
        }
        let mut v = vec![0.0; k];
        v[y] = 1.0;
        Ok(ProbVec(v))
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidInput(format!(
                "a distribution needs at least 2 classes, got {k}"
            )));
        }
        Ok(ProbVec(vec![1.0 / k as f64; k]))
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Only for values already produced by a normalizing computation.
    pub(crate) fn from_normalized(values: Vec<f64>) -> Self {
        debug_assert!(values.len() >= 2);
        ProbVec(values)
    }
}

impl Deref for ProbVec {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Pre-softmax scores produced by a classifier. All entries finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVec(Vec<f64>);

impl ScoreVec {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("empty score vector".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("score {i} is not finite")));
        }
        Ok(ScoreVec(values))
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ScoreVec {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub fn softmax(s: &ScoreVec) -> Result<ProbVec> {
    if s.k() < 2 {
        return Err(Error::InvalidInput(format!(
            "softmax needs at least 2 scores, got {}",
            s.k()
        )));
    }
    let mut out = vec![0.0; s.k()];
    softmax_into(s, &mut out);
    Ok(ProbVec::from_normalized(out))
}

/// Max-shifted softmax of finite scores into `out`.
pub(crate) fn softmax_into(s: &[f64], out: &mut [f64]) {
    debug_assert_eq!(s.len(), out.len());
    let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &v) in out.iter_mut().zip(s) {
        *o = (v - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// `z_i = 2 sqrt(p_i)`; the image lies on the sphere of radius 2.
pub fn sphere_embed(p: &ProbVec) -> Vec<f64> {
    p.iter().map(|v| 2.0 * v.sqrt()).collect()
}

fn check_same_k(p: &ProbVec, q: &ProbVec) -> Result<()> {
    if p.k() != q.k() {
        return Err(Error::Dimension {
            expected: p.k(),
            found: q.k(),
        });
    }
    Ok(())
}

/// `sum_i sqrt(p_i q_i)`, clamped to `[0, 1]`.
pub fn bhattacharyya_coefficient(p: &ProbVec, q: &ProbVec) -> Result<f64> {
    check_same_k(p, q)?;
    let bc: f64 = p.iter().zip(q.iter()).map(|(a, b)| (a * b).sqrt()).sum();
    Ok(bc.clamp(0.0, 1.0))
}

/// Geodesic distance `2 arccos(sum sqrt(p_i q_i))`, in `[0, pi]`.
pub fn fisher_rao_distance(p: &ProbVec, q: &ProbVec) -> Result<f64> {
    Ok(2.0 * bhattacharyya_coefficient(p, q)?.acos())
}

/// `(sum (sqrt p_i - sqrt q_i)^2)^(1/2)`, in `[0, sqrt 2]`.
pub fn hellinger_distance(p: &ProbVec, q: &ProbVec) -> Result<f64> {
    check_same_k(p, q)?;
    let sq: f64 = p
        .iter()
        .zip(q.iter())
        .map(|(a, b)| {
            let d = a.sqrt() - b.sqrt();
            d * d
        })
        .sum();
    Ok(sq.sqrt())
}

/// Fisher-Rao distance recovered from the Hellinger chord: `4 arcsin(d_H / 2)`.
pub fn fisher_rao_from_hellinger(d_h: f64) -> f64 {
    4.0 * (d_h / 2.0).clamp(0.0, 1.0).asin()
}

/// Draws a point uniformly from the simplex (flat Dirichlet via normalized exponentials).
pub fn random_simplex_point<R: Rng + ?Sized>(rng: &mut R, k: usize) -> ProbVec {
    assert!(k >= 2, "simplex needs K >= 2");
    let mut v: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    ProbVec::from_normalized(v)
}
