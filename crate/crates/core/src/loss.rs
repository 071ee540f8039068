//! Training objectives with values and logit gradients.
//!
//! The distribution losses (KL cross-entropy and the squared-Hellinger
//! alpha-divergence) differentiate through the softmax, so every gradient
//! here is with respect to the last layer's raw activations. Regression
//! losses operate on a scalar tanh head mapped to [-1, 1].

use crate::error::{Error, Result};
use crate::label_space::LabelDistribution;

/// Objectives a network head can be trained under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    /// Cross-entropy against a target distribution (KL up to the target's
    /// entropy); the distribution-learning objective.
    Kl,
    /// Squared-Hellinger alpha-divergence against a target distribution.
    AlphaDiv,
    /// Squared error on a scalar in [-1, 1].
    SquaredL2,
    /// Absolute error on a scalar in [-1, 1].
    L1,
    /// Epsilon-insensitive absolute error on a scalar in [-1, 1].
    EpsInsensitive,
}

impl LossKind {
    pub fn is_distribution(self) -> bool {
        matches!(self, LossKind::Kl | LossKind::AlphaDiv)
    }

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Kl => "kl",
            LossKind::AlphaDiv => "alpha-div",
            LossKind::SquaredL2 => "l2",
            LossKind::L1 => "l1",
            LossKind::EpsInsensitive => "eps-ins",
        }
    }
}

/// Scalar regression objective selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegressionKind {
    SquaredL2,
    L1,
    EpsInsensitive,
}

/// Softmax with max-subtraction so large logits cannot overflow.
pub fn softmax(logits: &[f64]) -> Result<LabelDistribution> {
    if logits.is_empty() {
        return Err(Error::invalid("logit vector must be non-empty"));
    }
    if logits.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("logits must be finite"));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    LabelDistribution::new(exps.into_iter().map(|e| e / total).collect())
}

/// Cross-entropy `-sum_k y_k ln yhat_k`.
///
/// Minimizing it in `yhat` is equivalent to minimizing KL(y || yhat); the
/// value exceeds `entropy(y)` by exactly that divergence. `yhat` must be
/// strictly positive wherever `y` carries mass (softmax output always is).
pub fn kl_loss(y: &LabelDistribution, yhat: &LabelDistribution) -> Result<f64> {
    check_pair(y, yhat)?;
    Ok(y.mass()
        .iter()
        .zip(yhat.mass())
        .map(|(&yk, &pk)| if yk == 0.0 { 0.0 } else { -yk * pk.ln() })
        .sum())
}

/// Gradient of the cross-entropy with respect to the logits that produced
/// `yhat` through softmax: `yhat - y` componentwise.
pub fn kl_grad_logits(y: &LabelDistribution, yhat: &LabelDistribution) -> Result<Vec<f64>> {
    if y.len() != yhat.len() {
        return Err(Error::dims(format!(
            "target has {} entries, prediction has {}",
            y.len(),
            yhat.len()
        )));
    }
    Ok(yhat.mass().iter().zip(y.mass()).map(|(&p, &t)| p - t).collect())
}

/// Squared-Hellinger alpha-divergence `2 sum_k (sqrt(y_k) - sqrt(yhat_k))^2`.
///
/// Symmetric in its arguments and bounded in [0, 4].
pub fn alpha_div_loss(y: &LabelDistribution, yhat: &LabelDistribution) -> Result<f64> {
    check_pair(y, yhat)?;
    Ok(y.mass()
        .iter()
        .zip(yhat.mass())
        .map(|(&yk, &pk)| {
            let d = yk.sqrt() - pk.sqrt();
            2.0 * d * d
        })
        .sum())
}

/// Gradient of the alpha-divergence with respect to the logits behind
/// `yhat`: `2 (yhat_j * sum_k sqrt(y_k yhat_k) - sqrt(y_j yhat_j))`.
pub fn alpha_div_grad_logits(y: &LabelDistribution, yhat: &LabelDistribution) -> Result<Vec<f64>> {
    if y.len() != yhat.len() {
        return Err(Error::dims(format!(
            "target has {} entries, prediction has {}",
            y.len(),
            yhat.len()
        )));
    }
    let bc: f64 = y
        .mass()
        .iter()
        .zip(yhat.mass())
        .map(|(&yk, &pk)| (yk * pk).sqrt())
        .sum();
    Ok(y.mass()
        .iter()
        .zip(yhat.mass())
        .map(|(&yj, &pj)| 2.0 * (pj * bc - (yj * pj).sqrt()))
        .collect())
}

/// Shannon entropy in nats, with `0 ln 0 = 0`.
pub fn entropy(d: &LabelDistribution) -> f64 {
    d.mass()
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum()
}

/// Affine map of a label value onto [-1, 1]: `2 (v - min) / (max - min) - 1`.
pub fn normalize_target(value: f64, min: f64, max: f64) -> Result<f64> {
    if max <= min {
        return Err(Error::invalid(format!("max must exceed min, got {min}..{max}")));
    }
    Ok(2.0 * (value - min) / (max - min) - 1.0)
}

/// Exact inverse of [`normalize_target`].
pub fn denormalize_target(t: f64, min: f64, max: f64) -> Result<f64> {
    if max <= min {
        return Err(Error::invalid(format!("max must exceed min, got {min}..{max}")));
    }
    Ok((t + 1.0) / 2.0 * (max - min) + min)
}

/// Value and derivative (with respect to the prediction) of a scalar
/// regression loss. Subgradients at the l1 / epsilon-insensitive kinks are 0.
pub fn regression_loss(kind: RegressionKind, target: f64, pred: f64, eps: f64) -> Result<(f64, f64)> {
    let diff = pred - target;
    match kind {
        RegressionKind::SquaredL2 => Ok((diff * diff, 2.0 * diff)),
        RegressionKind::L1 => Ok((diff.abs(), sign_or_zero(diff))),
        RegressionKind::EpsInsensitive => {
            if eps < 0.0 {
                return Err(Error::invalid(format!("eps must be nonnegative, got {eps}")));
            }
            let excess = diff.abs() - eps;
            if excess > 0.0 {
                Ok((excess, sign_or_zero(diff)))
            } else {
                Ok((0.0, 0.0))
            }
        }
    }
}

fn sign_or_zero(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Hyperbolic-tangent regression head: value and derivative.
pub fn tanh_head(x: f64) -> (f64, f64) {
    let t = x.tanh();
    (t, 1.0 - t * t)
}

fn check_pair(y: &LabelDistribution, yhat: &LabelDistribution) -> Result<()> {
    if y.len() != yhat.len() {
        return Err(Error::dims(format!(
            "target has {} entries, prediction has {}",
            y.len(),
            yhat.len()
        )));
    }
    if y
        .mass()
        .iter()
        .zip(yhat.mass())
        .any(|(&yk, &pk)| yk > 0.0 && pk <= 0.0)
    {
        return Err(Error::invalid(
            "prediction has zero mass on a supported label; the loss diverges",
        ));
    }
    Ok(())
}
