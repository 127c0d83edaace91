//! Classification losses on the softmax output.
//!
//! Every loss except MSE depends on the prediction only through `p_y`, the
//! probability assigned to the labelled class: `L = h(p_y)` with `h`
//! decreasing and `h(1) = 0`. Gradients with respect to the scores are the
//! closed-form chain rule through softmax.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::simplex::{self, ProbVec, ScoreVec};

/// Lower clamp applied to `p_y` wherever a loss or its derivative diverges at 0.
pub const P_EPSILON: f64 = 1e-12;

/// Tsallis parameter of the q-cross-entropy, restricted to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TsallisQ(f64);

impl TsallisQ {
    pub fn new(q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidInput(format!("q must lie in [0, 1], got {q}")));
        }
        Ok(TsallisQ(q))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    Mse,
    Mae,
    Ce,
    Qce(TsallisQ),
    Fr,
    Hellinger,
}

impl LossKind {
    pub fn qce(q: f64) -> Result<Self> {
        Ok(LossKind::Qce(TsallisQ::new(q)?))
    }

    /// Short name used in CSV `loss` columns; the q parameter goes in its own column.
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Mse => "mse",
            LossKind::Mae => "mae",
            LossKind::Ce => "ce",
            LossKind::Qce(_) => "qce",
            LossKind::Fr => "fr",
            LossKind::Hellinger => "hellinger",
        }
    }

    pub fn q(self) -> Option<f64> {
        match self {
            LossKind::Qce(q) => Some(q.get()),
            _ => None,
        }
    }

    /// Whether the loss has the form `h(p_y)`.
    pub fn is_h_form(self) -> bool {
        self != LossKind::Mse
    }

    /// q-CE at its special points evaluates exactly as MAE (q=0), Hellinger (q=1/2) and CE (q=1).
    pub fn canonical(self) -> LossKind {
        match self {
            LossKind::Qce(q) if q.get() == 0.0 => LossKind::Mae,
            LossKind::Qce(q) if q.get() == 0.5 => LossKind::Hellinger,
            LossKind::Qce(q) if q.get() == 1.0 => LossKind::Ce,
            other => other,
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossKind::Qce(q) => write!(f, "qce:{}", q.get()),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "mse" => Ok(LossKind::Mse),
            "mae" => Ok(LossKind::Mae),
            "ce" => Ok(LossKind::Ce),
            "fr" | "fisher-rao" => Ok(LossKind::Fr),
            "h" | "hellinger" => Ok(LossKind::Hellinger),
            _ => {
                let q = s
                    .strip_prefix("qce:")
                    .or_else(|| s.strip_prefix("qce"))
                    .ok_or_else(|| Error::InvalidInput(format!("unknown loss `{s}`")))?;
                let q: f64 = q
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("bad q value in `{s}`")))?;
                LossKind::qce(q)
            }
        }
    }
}

/// Tsallis q-logarithm `(x^(1-q) - 1) / (1 - q)`, `ln x` at `q = 1`.
pub fn q_logarithm(x: f64, q: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return Err(Error::Domain(format!("q-logarithm needs x > 0, got {x}")));
    }
    let one_minus_q = 1.0 - q;
    if one_minus_q.abs() < 1e-12 {
        return Ok(x.ln());
    }
    Ok((one_minus_q * x.ln()).exp_m1() / one_minus_q)
}

/// `arccos(sqrt p)`, evaluated as `arcsin(sqrt(1 - p))` on the upper half where
/// `1 - p` is exact.
fn fr_angle(p: f64) -> f64 {
    if p > 0.5 {
        (1.0 - p).sqrt().asin()
    } else {
        p.sqrt().acos()
    }
}

fn check_p_y(p_y: f64) -> Result<f64> {
    if !(0.0..=1.0 + simplex::SUM_TOLERANCE).contains(&p_y) {
        return Err(Error::Domain(format!("p_y must lie in [0, 1], got {p_y}")));
    }
    Ok(p_y.min(1.0))
}

fn h_unchecked(kind: LossKind, p_y: f64) -> f64 {
    match kind.canonical() {
        LossKind::Mae => 1.0 - p_y,
        LossKind::Ce => -p_y.max(P_EPSILON).ln(),
        LossKind::Qce(q) => {
            let q = q.get();
            let p = p_y.max(P_EPSILON);
            -((1.0 - q) * p.ln()).exp_m1() / (1.0 - q)
        }
        LossKind::Fr => {
            let a = fr_angle(p_y);
            a * a
        }
        LossKind::Hellinger => 2.0 * (1.0 - p_y.sqrt()),
        LossKind::Mse => unreachable!("MSE has no h-form"),
    }
}

/// The scalar form `h(p_y)` of an h-form loss.
pub fn h_value(kind: LossKind, p_y: f64) -> Result<f64> {
    if !kind.is_h_form() {
        return Err(Error::UnsupportedKind(kind.to_string()));
    }
    Ok(h_unchecked(kind, check_p_y(p_y)?))
}

fn h_prime_unchecked(kind: LossKind, p_y: f64) -> f64 {
    let p = p_y.max(P_EPSILON);
    match kind.canonical() {
        LossKind::Mae => 1.0,
        LossKind::Ce => 1.0 / p,
        LossKind::Qce(q) => p.powf(-q.get()),
        LossKind::Fr => {
            if p >= 1.0 {
                // removable singularity: arccos(sqrt p) ~ sqrt(1 - p)
                1.0
            } else {
                fr_angle(p) / (p * (1.0 - p)).sqrt()
            }
        }
        LossKind::Hellinger => 1.0 / p.sqrt(),
        LossKind::Mse => unreachable!("MSE has no h-form"),
    }
}

/// Gradient factor `|h'(p_y)|`.
pub fn h_prime_abs(kind: LossKind, p_y: f64) -> Result<f64> {
    if !kind.is_h_form() {
        return Err(Error::UnsupportedKind(kind.to_string()));
    }
    Ok(h_prime_unchecked(kind, check_p_y(p_y)?))
}

fn check_label(y: usize, k: usize) -> Result<()> {
    if y >= k {
        return Err(Error::Index { index: y, len: k });
    }
    Ok(())
}

/// Loss of predicting `p` when the label is `y`.
pub fn loss_value(kind: LossKind, y: usize, p: &ProbVec) -> Result<f64> {
    check_label(y, p.k())?;
    Ok(loss_from_probs(kind, y, p))
}

pub(crate) fn loss_from_probs(kind: LossKind, y: usize, p: &[f64]) -> f64 {
    match kind {
        LossKind::Mse => p
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let d = if i == y { 1.0 - v } else { v };
                d * d
            })
            .sum(),
        _ => h_unchecked(kind, p[y]),
    }
}

/// `sum_i L(i, p)`; constant in `p` only for MAE.
pub fn loss_sum_over_classes(kind: LossKind, p: &ProbVec) -> f64 {
    (0..p.k()).map(|i| loss_from_probs(kind, i, p)).sum()
}

/// `dL/ds` for label `y` at scores `s`.
pub fn loss_gradient_scores(kind: LossKind, y: usize, s: &ScoreVec) -> Result<Vec<f64>> {
    check_label(y, s.k())?;
    let p = simplex::softmax(s)?;
    let mut grad = vec![0.0; s.k()];
    grad_from_probs(kind, y, &p, &mut grad);
    Ok(grad)
}

/// Writes `dL/ds` given `p = softmax(s)` into `out`; returns the loss value.
pub(crate) fn grad_from_probs(kind: LossKind, y: usize, p: &[f64], out: &mut [f64]) -> f64 {
    debug_assert_eq!(p.len(), out.len());
    match kind {
        LossKind::Mse => {
            // dL/dp_i = 2 (p_i - d_iy); chain through the full softmax Jacobian
            let weighted: f64 = p
                .iter()
                .enumerate()
                .map(|(i, &v)| 2.0 * (v - if i == y { 1.0 } else { 0.0 }) * v)
                .sum();
            for (j, (o, &v)) in out.iter_mut().zip(p).enumerate() {
                let target = if j == y { 1.0 } else { 0.0 };
                *o = 2.0 * v * (v - target) - v * weighted;
            }
        }
        _ => {
            let p_y = p[y];
            let factor = h_prime_unchecked(kind, p_y) * p_y;
            let rest: f64 = p.iter().enumerate().filter(|&(j, _)| j != y).map(|(_, v)| v).sum();
            for (j, (o, &v)) in out.iter_mut().zip(p).enumerate() {
                *o = if j == y { -factor * rest } else { factor * v };
            }
        }
    }
    loss_from_probs(kind, y, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn pv(v: &[f64]) -> ProbVec {
        ProbVec::new(v.to_vec()).unwrap()
    }

    fn two_class(p_y: f64) -> ProbVec {
        pv(&[p_y, 1.0 - p_y])
    }

    #[test]
    fn parse_and_display() {
        for s in ["mse", "mae", "ce", "fr", "hellinger", "qce:0.7"] {
            assert_eq!(s.parse::<LossKind>().unwrap().to_string(), s);
        }
        assert_eq!("H".parse::<LossKind>().unwrap(), LossKind::Hellinger);
        assert!("qce:1.5".parse::<LossKind>().is_err());
        assert!("l2".parse::<LossKind>().is_err());
    }

    #[test]
    fn q_logarithm_examples() {
        assert_eq!(q_logarithm(1.0, 0.3).unwrap(), 0.0);
        assert_eq!(q_logarithm(1.0, 2.0).unwrap(), 0.0);
        assert_eq!(q_logarithm(3.0, 1.0).unwrap(), 3f64.ln());
        assert_abs_diff_eq!(q_logarithm(4.0, 0.5).unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q_logarithm(3.0, 1.0 - 1e-13).unwrap(), 3f64.ln(), epsilon = 1e-15);
        assert!(matches!(q_logarithm(0.0, 0.5), Err(Error::Domain(_))));
        assert!(q_logarithm(-1.0, 0.5).is_err());
    }

    #[test]
    fn loss_value_examples() {
        assert_eq!(loss_value(LossKind::Fr, 0, &two_class(1.0)).unwrap(), 0.0);
        assert_abs_diff_eq!(
            loss_value(LossKind::Fr, 0, &two_class(0.25)).unwrap(),
            (PI / 3.0).powi(2),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            loss_value(LossKind::Hellinger, 0, &two_class(0.25)).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            loss_value(LossKind::Mse, 0, &pv(&[0.7, 0.2, 0.1])).unwrap(),
            0.14,
            epsilon = 1e-15
        );
        // (1 - 0.5^0.3) / 0.3, 40-digit evaluation
        assert_abs_diff_eq!(
            loss_value(LossKind::qce(0.7).unwrap(), 0, &two_class(0.5)).unwrap(),
            0.625_825_345_479_214_9,
            epsilon = 1e-12
        );
        assert!(matches!(
            loss_value(LossKind::Ce, 2, &two_class(0.5)),
            Err(Error::Index { index: 2, len: 2 })
        ));
    }

    #[test]
    fn losses_vanish_only_at_the_vertex() {
        let kinds = [
            LossKind::Mse,
            LossKind::Mae,
            LossKind::Ce,
            LossKind::qce(0.7).unwrap(),
            LossKind::Fr,
            LossKind::Hellinger,
        ];
        let vertex = pv(&[0.0, 1.0, 0.0]);
        let inner = pv(&[0.1, 0.8, 0.1]);
        for kind in kinds {
            assert_eq!(loss_value(kind, 1, &vertex).unwrap(), 0.0, "{kind}");
            assert!(loss_value(kind, 1, &inner).unwrap() > 0.0, "{kind}");
            assert!(loss_value(kind, 0, &vertex).unwrap() > 0.0, "{kind}");
        }
        // CE is finite at p_y = 0 thanks to the clamp
        assert_abs_diff_eq!(
            loss_value(LossKind::Ce, 0, &vertex).unwrap(),
            -P_EPSILON.ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn h_prime_examples() {
        for p in [1e-9, 0.3, 1.0] {
            assert_eq!(h_prime_abs(LossKind::Mae, p).unwrap(), 1.0);
        }
        assert_abs_diff_eq!(h_prime_abs(LossKind::Fr, 0.5).unwrap(), PI / 2.0, epsilon = 1e-14);
        assert_eq!(h_prime_abs(LossKind::Fr, 1.0).unwrap(), 1.0);
        assert_abs_diff_eq!(h_prime_abs(LossKind::Fr, 1.0 - 1e-12).unwrap(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(h_prime_abs(LossKind::Ce, 0.25).unwrap(), 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(h_prime_abs(LossKind::Hellinger, 0.25).unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            h_prime_abs(LossKind::qce(0.7).unwrap(), 0.5).unwrap(),
            0.5f64.powf(-0.7),
            epsilon = 1e-15
        );
        assert_eq!(h_prime_abs(LossKind::Ce, 0.0).unwrap(), 1e12);
        assert!(matches!(
            h_prime_abs(LossKind::Mse, 0.5),
            Err(Error::UnsupportedKind(_))
        ));
        assert!(h_prime_abs(LossKind::Fr, 1.5).is_err());
    }

    #[test]
    fn h_prime_matches_numeric_derivative_of_h() {
        let kinds = [
            LossKind::Mae,
            LossKind::Ce,
            LossKind::qce(0.3).unwrap(),
            LossKind::Fr,
            LossKind::Hellinger,
        ];
        for kind in kinds {
            for i in 1..50 {
                let p = i as f64 / 50.0;
                let step = 1e-6;
                let numeric = (h_value(kind, p - step).unwrap() - h_value(kind, p + step).unwrap()) / (2.0 * step);
                let analytic = h_prime_abs(kind, p).unwrap();
                assert!((numeric - analytic).abs() <= 1e-6 * analytic.max(1.0), "{kind} p={p}");
            }
        }
    }

    #[test]
    fn gradient_examples() {
        let s = ScoreVec::new(vec![7f64.ln(), 2f64.ln(), 0.0]).unwrap();
        let g = loss_gradient_scores(LossKind::Ce, 0, &s).unwrap();
        for (a, b) in g.iter().zip([-0.3, 0.2, 0.1]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
        let s = ScoreVec::new(vec![0.0, 0.0]).unwrap();
        let g = loss_gradient_scores(LossKind::Fr, 0, &s).unwrap();
        assert_abs_diff_eq!(g[0], -PI / 8.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g[1], PI / 8.0, epsilon = 1e-14);
        assert!(loss_gradient_scores(LossKind::Fr, 2, &s).is_err());
    }

    #[test]
    fn gradient_vanishes_at_saturated_prediction() {
        let s = ScoreVec::new(vec![800.0, 0.0, -5.0]).unwrap();
        for kind in [
            LossKind::Mse,
            LossKind::Mae,
            LossKind::Ce,
            LossKind::qce(0.7).unwrap(),
            LossKind::Fr,
            LossKind::Hellinger,
        ] {
            let g = loss_gradient_scores(kind, 0, &s).unwrap();
            assert!(g.iter().all(|&v| v == 0.0), "{kind}: {g:?}");
        }
    }

    #[test]
    fn loss_sum_examples() {
        let p = pv(&[0.1, 0.2, 0.3, 0.4]);
        assert_abs_diff_eq!(loss_sum_over_classes(LossKind::Mae, &p), 3.0, epsilon = 1e-15);
        let u = ProbVec::uniform(10).unwrap();
        assert_abs_diff_eq!(
            loss_sum_over_classes(LossKind::Fr, &u),
            15.601_153_415_459_52,
            epsilon = 1e-11
        );
        assert_abs_diff_eq!(loss_sum_over_classes(LossKind::Mse, &u), 9.0, epsilon = 1e-13);
    }

    #[test]
    fn h_form_losses_ignore_other_coordinates() {
        let a = pv(&[0.3, 0.1, 0.6]);
        let b = pv(&[0.3, 0.5, 0.2]);
        for kind in [
            LossKind::Mae,
            LossKind::Ce,
            LossKind::qce(0.2).unwrap(),
            LossKind::Fr,
            LossKind::Hellinger,
        ] {
            let d = loss_value(kind, 0, &a).unwrap() - loss_value(kind, 0, &b).unwrap();
            assert!(d.abs() <= 1e-12, "{kind}");
        }
    }

    #[test]
    fn qce_special_points() {
        for i in 0..=1000 {
            let p_y = i as f64 / 1000.0;
            let p = two_class(p_y);
            assert_eq!(
                loss_value(LossKind::qce(0.0).unwrap(), 0, &p).unwrap(),
                loss_value(LossKind::Mae, 0, &p).unwrap()
            );
            assert_eq!(
                loss_value(LossKind::qce(1.0).unwrap(), 0, &p).unwrap(),
                loss_value(LossKind::Ce, 0, &p).unwrap()
            );
            if p_y > 0.0 {
                // generic formula, not the exact routing
                let generic = -q_logarithm(p_y, 0.5).unwrap();
                assert!((generic - loss_value(LossKind::Hellinger, 0, &p).unwrap()).abs() <= 1e-12);
            }
        }
    }
}
