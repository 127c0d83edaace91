//! Closed-form bounds on the risk gap between the clean-optimal and the
//! noisy-optimal classifier under uniform label noise.
//!
//! `A(K, eta)` bounds the noisy-risk gap from above, `B(K, eta)` bounds the
//! clean-risk gap from below. Every bound follows from bounds on
//! `sum_i L(i, p)` over the simplex; CE has none, so its bounds are infinite.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::loss::{self, LossKind};
use crate::noise;

const QUARTER_PI_SQ: f64 = PI * PI / 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundResult {
    pub a: f64,
    pub b: f64,
    pub kind: LossKind,
    pub k: usize,
    pub eta: f64,
}

fn check_regime(k: usize, eta: f64) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("K must be at least 2, got {k}")));
    }
    let limit = noise::max_eta(k);
    if !(eta >= 0.0 && eta < limit) {
        return Err(Error::OutOfRegime { eta, k, limit });
    }
    Ok(())
}

fn acos_sq_inv_sqrt(j: usize) -> f64 {
    let a = (1.0 / (j as f64).sqrt()).acos();
    a * a
}

/// Bounds of `sum_i L_FR(i, p)` over the simplex: attained at the uniform point
/// (lower) and at the vertices (upper).
pub fn fr_sum_bounds(k: usize) -> Result<(f64, f64)> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("K must be at least 2, got {k}")));
    }
    Ok((k as f64 * acos_sq_inv_sqrt(k), QUARTER_PI_SQ * (k as f64 - 1.0)))
}

/// Bounds of `sum_i L_MSE(i, p)`: `K - 1` at the uniform point, `2 (K - 1)` at vertices.
pub fn mse_sum_bounds(k: usize) -> Result<(f64, f64)> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("K must be at least 2, got {k}")));
    }
    let km1 = k as f64 - 1.0;
    Ok((km1, 2.0 * km1))
}

/// Value of `sum_i L_FR(i, p)` at the critical point with `j` equal nonzero
/// coordinates: `(K - j) pi^2/4 + j arccos(1/sqrt j)^2`.
pub fn fr_critical_value(k: usize, j: usize) -> Result<f64> {
    if j == 0 || j > k {
        return Err(Error::Index { index: j, len: k + 1 });
    }
    Ok((k - j) as f64 * QUARTER_PI_SQ + j as f64 * acos_sq_inv_sqrt(j))
}

pub fn bound_a(kind: LossKind, k: usize, eta: f64) -> Result<f64> {
    check_regime(k, eta)?;
    let kf = k as f64;
    Ok(match kind.canonical() {
        LossKind::Mse => eta,
        LossKind::Mae => 0.0,
        LossKind::Ce => f64::INFINITY,
        LossKind::Qce(q) => {
            let q = q.get();
            eta * (kf.powf(q) - 1.0) / ((1.0 - q) * (kf - 1.0))
        }
        LossKind::Fr => eta * (QUARTER_PI_SQ - kf / (kf - 1.0) * acos_sq_inv_sqrt(k)),
        LossKind::Hellinger => eta * 2.0 * (kf.sqrt() - 1.0) / (kf - 1.0),
    })
}

pub fn bound_b(kind: LossKind, k: usize, eta: f64) -> Result<f64> {
    check_regime(k, eta)?;
    let kf = k as f64;
    let denom = kf - 1.0 - eta * kf;
    let b = match kind.canonical() {
        LossKind::Mse => -eta * (kf - 1.0) / denom,
        LossKind::Mae => 0.0,
        LossKind::Ce => f64::NEG_INFINITY,
        LossKind::Qce(q) => {
            let q = q.get();
            eta * (1.0 - kf.powf(q)) / ((1.0 - q) * denom)
        }
        LossKind::Fr => eta * (kf * acos_sq_inv_sqrt(k) - QUARTER_PI_SQ * (kf - 1.0)) / denom,
        LossKind::Hellinger => eta * 2.0 * (1.0 - kf.sqrt()) / denom,
    };
    // eta = 0 gives -0.0 for the negative bounds
    Ok(b + 0.0)
}

pub fn bounds(kind: LossKind, k: usize, eta: f64) -> Result<BoundResult> {
    Ok(BoundResult {
        a: bound_a(kind, k, eta)?,
        b: bound_b(kind, k, eta)?,
        kind,
        k,
        eta,
    })
}

/// Parameter sweep for bound curves; the noise rate is always `alpha (1 - 1/K)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    Alpha { k: usize, alphas: Vec<f64> },
    Classes { alpha: f64, ks: Vec<usize> },
}

impl Sweep {
    /// `points` evenly spaced values `i / points`, `i = 0..points`, all in `[0, 1)`.
    pub fn alpha_grid(k: usize, points: usize) -> Self {
        let alphas = (0..points).map(|i| i as f64 / points as f64).collect();
        Sweep::Alpha { k, alphas }
    }

    pub fn class_range(alpha: f64, k_min: usize, k_max: usize) -> Self {
        Sweep::Classes {
            alpha,
            ks: (k_min..=k_max).collect(),
        }
    }

    fn points(&self) -> Vec<(f64, usize, f64)> {
        match self {
            Sweep::Alpha { k, alphas } => alphas.iter().map(|&a| (a, *k, a)).collect(),
            Sweep::Classes { alpha, ks } => ks.iter().map(|&k| (k as f64, k, *alpha)).collect(),
        }
    }
}

/// One sweep point: `x` is alpha or K; `values[i]` is `(A, B)` for the i-th kind.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub x: f64,
    pub k: usize,
    pub alpha: f64,
    pub eta: f64,
    pub values: Vec<(f64, f64)>,
}

pub fn bound_curves(kinds: &[LossKind], sweep: &Sweep) -> Result<Vec<CurveRow>> {
    if kinds.is_empty() {
        return Err(Error::InvalidInput("no loss kinds given".into()));
    }
    let points = sweep.points();
    if points.is_empty() {
        return Err(Error::InvalidInput("empty sweep".into()));
    }
    points
        .into_iter()
        .map(|(x, k, alpha)| {
            let eta = noise::alpha_to_eta(alpha, k)?;
            let values = kinds
                .iter()
                .map(|&kind| Ok((bound_a(kind, k, eta)?, bound_b(kind, k, eta)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(CurveRow {
                x,
                k,
                alpha,
                eta,
                values,
            })
        })
        .collect()
}

/// Extremes of `sum_i L(i, p)` found by enumerating the grid
/// `{n / divisions : n in N^K, |n| = divisions}` on the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct GridExtrema {
    pub min: f64,
    pub argmin: Vec<f64>,
    pub max: f64,
    pub argmax: Vec<f64>,
    pub points: usize,
}

pub fn sum_extrema_on_grid(kind: LossKind, k: usize, divisions: usize, exec: Execution) -> Result<GridExtrema> {
    if k < 2 || divisions == 0 {
        return Err(Error::InvalidInput(format!(
            "grid needs K >= 2 and at least one division (K = {k}, divisions = {divisions})"
        )));
    }
    let scale = divisions as f64;
    let partial = exec.map_range(divisions + 1, |first| {
        let mut best = Partial::default();
        let mut counts = vec![0usize; k];
        counts[0] = first;
        let mut p = vec![0.0; k];
        visit_compositions(&mut counts, 1, divisions - first, &mut |counts| {
            for (pi, &c) in p.iter_mut().zip(counts.iter()) {
                *pi = c as f64 / scale;
            }
            let value: f64 = (0..k).map(|i| loss::loss_from_probs(kind, i, &p)).sum();
            best.observe(value, &p);
        });
        best
    });
    let mut total = Partial::default();
    for part in partial {
        total.merge(part);
    }
    Ok(GridExtrema {
        min: total.min,
        argmin: total.argmin,
        max: total.max,
        argmax: total.argmax,
        points: total.points,
    })
}

fn visit_compositions(counts: &mut [usize], pos: usize, remaining: usize, f: &mut impl FnMut(&[usize])) {
    if pos == counts.len() - 1 {
        counts[pos] = remaining;
        f(counts);
        return;
    }
    for c in 0..=remaining {
        counts[pos] = c;
        visit_compositions(counts, pos + 1, remaining - c, f);
    }
}

#[derive(Debug)]
struct Partial {
    min: f64,
    argmin: Vec<f64>,
    max: f64,
    argmax: Vec<f64>,
    points: usize,
}

impl Default for Partial {
    fn default() -> Self {
        Partial {
            min: f64::INFINITY,
            argmin: Vec::new(),
            max: f64::NEG_INFINITY,
            argmax: Vec::new(),
            points: 0,
        }
    }
}

impl Partial {
    fn observe(&mut self, value: f64, p: &[f64]) {
        self.points += 1;
        if value < self.min {
            self.min = value;
            self.argmin = p.to_vec();
        }
        if value > self.max {
            self.max = value;
            self.argmax = p.to_vec();
        }
    }

    // Strict comparisons keep the earliest point on ties, as a sequential scan would.
    fn merge(&mut self, other: Partial) {
        self.points += other.points;
        if other.min < self.min {
            self.min = other.min;
            self.argmin = other.argmin;
        }
        if other.max > self.max {
            self.max = other.max;
            self.argmax = other.argmax;
        }
    }
}
