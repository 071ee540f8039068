//! Finite-difference verification of every analytic gradient.
//!
//! Each check differentiates a loss VALUE numerically with central
//! differences and compares against the analytic gradient, so the oracle
//! never touches the code path it verifies. Relative error uses a small
//! denominator floor to keep f64 roundoff in near-zero gradients from
//! registering as disagreement.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label_space::LabelDistribution;
use crate::loss::{
    alpha_div_grad_logits, alpha_div_loss, kl_grad_logits, kl_loss, regression_loss, softmax,
    LossKind, RegressionKind,
};
use crate::net::{backward, init_gaussian, Architecture, Head, NetworkParams};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;
/// Maximum admissible relative error between analytic and numeric gradients.
pub const FD_TOLERANCE: f64 = 1e-4;
/// Margin around l1 / epsilon-insensitive kinks (and ReLU zero crossings)
/// inside which finite differences are meaningless.
pub const KINK_MARGIN: f64 = 1e-6;

const REL_ERROR_FLOOR: f64 = 1e-6;

/// `|a - n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

/// Central finite differences of a scalar function of a vector.
pub fn central_diff<F>(f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut grad = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let plus = f(&probe)?;
        probe[i] = x[i] - h;
        let minus = f(&probe)?;
        probe[i] = x[i];
        grad.push((plus - minus) / (2.0 * h));
    }
    Ok(grad)
}

/// Outcome of one named gradient check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckEntry {
    pub name: String,
    pub cases: usize,
    pub max_rel_error: f64,
    pub pass: bool,
}

/// Full verification report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub schema: String,
    pub seed: u64,
    pub step: f64,
    pub tolerance: f64,
    pub entries: Vec<CheckEntry>,
    pub notes: Vec<String>,
}

pub const GRADCHECK_SCHEMA: &str = "dldl-gradcheck-v1";

impl GradCheckReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn max_rel_error(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.max_rel_error))
    }
}

fn random_distribution(rng: &mut ChaCha8Rng, len: usize) -> LabelDistribution {
    let weights: Vec<f64> = (0..len).map(|_| rng.gen_range(0.05..1.0)).collect();
    LabelDistribution::from_weights(weights).expect("positive weights")
}

fn random_logits(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-2.0..2.0)).collect()
}

fn check_distribution_loss(
    name: &str,
    kind: LossKind,
    cases: usize,
    rng: &mut ChaCha8Rng,
) -> Result<CheckEntry> {
    let mut max_rel = 0.0f64;
    for _ in 0..cases {
        let len = rng.gen_range(3..=10);
        let y = random_distribution(rng, len);
        let x = random_logits(rng, len);
        let value = |logits: &[f64]| -> Result<f64> {
            let yhat = softmax(logits)?;
            match kind {
                LossKind::Kl => kl_loss(&y, &yhat),
                LossKind::AlphaDiv => alpha_div_loss(&y, &yhat),
                _ => unreachable!("distribution losses only"),
            }
        };
        let yhat = softmax(&x)?;
        let analytic = match kind {
            LossKind::Kl => kl_grad_logits(&y, &yhat)?,
            LossKind::AlphaDiv => alpha_div_grad_logits(&y, &yhat)?,
            _ => unreachable!(),
        };
        let numeric = central_diff(value, &x, FD_STEP)?;
        for (a, n) in analytic.iter().zip(&numeric) {
            max_rel = max_rel.max(relative_error(*a, *n));
        }
    }
    Ok(CheckEntry {
        name: name.to_string(),
        cases,
        max_rel_error: max_rel,
        pass: max_rel <= FD_TOLERANCE,
    })
}

fn check_regression_loss(
    name: &str,
    kind: RegressionKind,
    eps: f64,
    cases: usize,
    rng: &mut ChaCha8Rng,
) -> Result<CheckEntry> {
    let mut max_rel = 0.0f64;
    let mut done = 0;
    while done < cases {
        let t = rng.gen_range(-1.0..1.0);
        let pred = rng.gen_range(-1.0..1.0);
        let gap = (pred - t as f64).abs();
        // Exclude kink points: the l1 corner and the tube boundary.
        let near_kink = match kind {
            RegressionKind::SquaredL2 => false,
            RegressionKind::L1 => gap < KINK_MARGIN,
            RegressionKind::EpsInsensitive => (gap - eps).abs() < KINK_MARGIN,
        };
        if near_kink {
            continue;
        }
        let (_, analytic) = regression_loss(kind, t, pred, eps)?;
        let numeric = central_diff(
            |p: &[f64]| regression_loss(kind, t, p[0], eps).map(|(v, _)| v),
            &[pred],
            FD_STEP,
        )?[0];
        max_rel = max_rel.max(relative_error(analytic, numeric));
        done += 1;
    }
    Ok(CheckEntry {
        name: name.to_string(),
        cases,
        max_rel_error: max_rel,
        pass: max_rel <= FD_TOLERANCE,
    })
}

/// Network whose hidden pre-activations stay clear of the ReLU kink for the
/// given input, so central differences stay on one side of every corner.
fn sample_clear_input(net: &NetworkParams, dim: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    for _ in 0..200 {
        let input: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (_, cache) = net.forward_cached(&input)?;
        let clear = net.layers.iter().enumerate().all(|(l, layer)| {
            layer.activation != crate::net::Activation::Relu
                || cache_pre(&cache, l).iter().all(|&z| z.abs() > 1e-4)
        });
        if clear {
            return Ok(input);
        }
    }
    Err(Error::numerical(
        "could not sample an input clear of ReLU kinks",
    ))
}

// ForwardCache keeps its internals private; gradcheck only needs read access
// to the pre-activations, exposed through this small accessor.
fn cache_pre(cache: &crate::net::ForwardCache, layer: usize) -> &[f64] {
    cache.pre_activations(layer)
}

/// Scales up freshly initialized weights so gradients are well away from
/// f64 roundoff, and randomizes biases off their zero kink.
fn gradcheck_network(arch: &Architecture, rng: &mut ChaCha8Rng) -> Result<NetworkParams> {
    let mut net = init_gaussian(arch, rng.gen())?;
    for layer in &mut net.layers {
        for w in &mut layer.weights {
            *w *= 50.0; // std 0.01 -> 0.5
        }
        for b in &mut layer.biases {
            *b = rng.gen_range(-0.2..0.2);
        }
    }
    Ok(net)
}

fn network_loss(
    net: &NetworkParams,
    input: &[f64],
    kind: LossKind,
    eps: f64,
    target: &crate::net::Target,
) -> Result<f64> {
    let output = net.forward(input)?;
    crate::net::loss_and_output_grad(kind, eps, target, &output).map(|(v, _)| v)
}

fn check_network_loss(
    name: &str,
    kind: LossKind,
    cases: usize,
    rng: &mut ChaCha8Rng,
) -> Result<CheckEntry> {
    let eps = 0.1;
    let (arch, classes) = if kind.is_distribution() {
        (Architecture::new(vec![6, 8, 8, 5], Head::Distribution)?, 5)
    } else {
        (Architecture::new(vec![6, 8, 8, 1], Head::ScalarRegression)?, 1)
    };
    let mut max_rel = 0.0f64;
    let mut done = 0;
    while done < cases {
        let net = gradcheck_network(&arch, rng)?;
        let input = sample_clear_input(&net, 6, rng)?;
        let target = if kind.is_distribution() {
            crate::net::Target::Distribution(random_distribution(rng, classes))
        } else {
            crate::net::Target::Scalar(rng.gen_range(-0.9..0.9))
        };
        // Skip cases where the scalar prediction sits on a kink.
        if let crate::net::Target::Scalar(t) = target {
            let pred = net.forward(&input)?[0];
            let gap = (pred - t).abs();
            let near_kink = match kind {
                LossKind::L1 => gap < KINK_MARGIN,
                LossKind::EpsInsensitive => (gap - eps).abs() < KINK_MARGIN,
                _ => false,
            };
            if near_kink {
                continue;
            }
        }

        // Analytic gradients through backprop.
        let (output, cache) = net.forward_cached(&input)?;
        let (_, grad_out) = crate::net::loss_and_output_grad(kind, eps, &target, &output)?;
        let analytic = backward(&net, &input, &cache, &grad_out)?;

        // Numeric gradients: perturb every parameter in turn.
        for l in 0..net.layers.len() {
            for w in 0..net.layers[l].weights.len() {
                let mut plus = net.clone();
                plus.layers[l].weights[w] += FD_STEP;
                let mut minus = net.clone();
                minus.layers[l].weights[w] -= FD_STEP;
                let numeric = (network_loss(&plus, &input, kind, eps, &target)?
                    - network_loss(&minus, &input, kind, eps, &target)?)
                    / (2.0 * FD_STEP);
                max_rel = max_rel.max(relative_error(analytic.layers[l].weights[w], numeric));
            }
            for b in 0..net.layers[l].biases.len() {
                let mut plus = net.clone();
                plus.layers[l].biases[b] += FD_STEP;
                let mut minus = net.clone();
                minus.layers[l].biases[b] -= FD_STEP;
                let numeric = (network_loss(&plus, &input, kind, eps, &target)?
                    - network_loss(&minus, &input, kind, eps, &target)?)
                    / (2.0 * FD_STEP);
                max_rel = max_rel.max(relative_error(analytic.layers[l].biases[b], numeric));
            }
        }
        done += 1;
    }
    Ok(CheckEntry {
        name: name.to_string(),
        cases,
        max_rel_error: max_rel,
        pass: max_rel <= FD_TOLERANCE,
    })
}

/// Runs every gradient check: the five losses at the logit/prediction level
/// with `cases` random draws each, and each loss through a 2-hidden-layer
/// network with a smaller case count (every parameter is perturbed twice per
/// case).
pub fn run_gradcheck(seed: u64, cases: usize, network_cases: usize) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = vec![
        check_distribution_loss("kl-logits", LossKind::Kl, cases, &mut rng)?,
        check_distribution_loss("alpha-div-logits", LossKind::AlphaDiv, cases, &mut rng)?,
        check_regression_loss("l2-scalar", RegressionKind::SquaredL2, 0.0, cases, &mut rng)?,
        check_regression_loss("l1-scalar", RegressionKind::L1, 0.0, cases, &mut rng)?,
        check_regression_loss(
            "eps-ins-scalar",
            RegressionKind::EpsInsensitive,
            0.1,
            cases,
            &mut rng,
        )?,
        check_network_loss("kl-network", LossKind::Kl, network_cases, &mut rng)?,
        check_network_loss("alpha-div-network", LossKind::AlphaDiv, network_cases, &mut rng)?,
        check_network_loss("l2-network", LossKind::SquaredL2, network_cases, &mut rng)?,
        check_network_loss("l1-network", LossKind::L1, network_cases, &mut rng)?,
        check_network_loss(
            "eps-ins-network",
            LossKind::EpsInsensitive,
            network_cases,
            &mut rng,
        )?,
    ];
    Ok(GradCheckReport {
        schema: GRADCHECK_SCHEMA.to_string(),
        seed,
        step: FD_STEP,
        tolerance: FD_TOLERANCE,
        entries,
        notes: vec![
            "alpha divergence uses the sign-corrected squared-Hellinger form \
             2*sum_k (sqrt(y_k) - sqrt(yhat_k))^2"
                .to_string(),
            "kink points (l1 corner, eps-insensitive tube boundary, ReLU zero \
             crossings) are excluded within 1e-6"
                .to_string(),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_floors_tiny_gradients() {
        assert!(relative_error(0.0, 1e-11) < 1e-4);
        assert!(relative_error(1.0, 1.1) > 0.05);
    }

    #[test]
    fn central_diff_matches_quadratic() {
        let f = |x: &[f64]| Ok(x[0] * x[0] + 3.0 * x[1]);
        let g = central_diff(f, &[2.0, 5.0], 1e-5).unwrap();
        assert!((g[0] - 4.0).abs() < 1e-8);
        assert!((g[1] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn full_report_passes() {
        let report = run_gradcheck(2024, 25, 2).unwrap();
        for entry in &report.entries {
            assert!(
                entry.pass,
                "{} failed with max rel error {}",
                entry.name, entry.max_rel_error
            );
        }
        assert!(report.all_pass());
    }
}
