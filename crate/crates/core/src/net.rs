//! A small deterministic dense feed-forward network and its SGD trainer.
//!
//! The network is ReLU-activated dense layers with either a distribution
//! head (raw logits, width C; softmax lives in the loss and the decoders) or
//! a scalar regression head (tanh, width 1). Training is mini-batch SGD
//! with momentum and weight decay on the weights only. Everything is seeded:
//! initialization and per-epoch shuffling both draw from ChaCha8 streams
//! derived from the configured seed, so a rerun with identical inputs
//! reproduces parameters bit for bit.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::decode::{OutputDecoder, Value};
use crate::error::{Error, Result};
use crate::label_space::LabelDistribution;
use crate::loss::{
    alpha_div_grad_logits, alpha_div_loss, kl_grad_logits, kl_loss, regression_loss, softmax,
    LossKind, RegressionKind,
};

/// Standard deviation of the Gaussian weight initialization.
pub const INIT_STD: f64 = 0.01;

/// Offset applied to the seed for the shuffle stream so it never collides
/// with the initialization stream.
const SHUFFLE_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Relu,
    Tanh,
    Linear,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Linear => x,
        }
    }

    /// Derivative as a function of the pre-activation.
    fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Linear => 1.0,
        }
    }
}

/// Output head of the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Head {
    /// Width-C logits, decoded through softmax.
    Distribution,
    /// Width-1 tanh scalar in (-1, 1).
    ScalarRegression,
}

/// Layer widths plus the head: `widths = [input, hidden..., output]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub widths: Vec<usize>,
    pub head: Head,
}

impl Architecture {
    pub fn new(widths: Vec<usize>, head: Head) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::invalid("architecture needs at least one layer"));
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(Error::invalid("layer widths must be positive"));
        }
        if head == Head::ScalarRegression && *widths.last().unwrap() != 1 {
            return Err(Error::invalid("regression head requires output width 1"));
        }
        Ok(Architecture { widths, head })
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.widths.last().unwrap()
    }
}

/// One dense layer: `out = activation(W x + b)`, `W` stored row-major out x in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

/// The full parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub layers: Vec<DenseLayer>,
    pub head: Head,
}

impl NetworkParams {
    pub fn architecture(&self) -> Architecture {
        let mut widths = vec![self.layers[0].in_dim];
        widths.extend(self.layers.iter().map(|l| l.out_dim));
        Architecture {
            widths,
            head: self.head,
        }
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    /// Forward pass; distribution heads return raw logits, regression heads
    /// the tanh scalar.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_cached(input)?.0)
    }

    /// Forward pass retaining per-layer intermediates for `backward`.
    pub fn forward_cached(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        if input.len() != self.layers[0].in_dim {
            return Err(Error::dims(format!(
                "input width {} does not match first layer width {}",
                input.len(),
                self.layers[0].in_dim
            )));
        }
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = Vec::with_capacity(self.layers.len());
        let mut current = input.to_vec();
        for layer in &self.layers {
            let mut z = layer.biases.clone();
            for (o, zo) in z.iter_mut().enumerate() {
                let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                *zo += row.iter().zip(&current).map(|(w, x)| w * x).sum::<f64>();
            }
            let a: Vec<f64> = z.iter().map(|&v| layer.activation.apply(v)).collect();
            pre.push(z);
            current = a.clone();
            post.push(a);
        }
        Ok((current, ForwardCache { pre, post }))
    }
}

/// Per-layer intermediates from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

impl ForwardCache {
    /// Pre-activations of the given layer.
    pub fn pre_activations(&self, layer: usize) -> &[f64] {
        &self.pre[layer]
    }
}

/// Gradients matching the network's parameter shapes.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<LayerGradient>,
}

#[derive(Debug, Clone)]
pub struct LayerGradient {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(net: &NetworkParams) -> Self {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGradient {
                    weights: vec![0.0; l.weights.len()],
                    biases: vec![0.0; l.biases.len()],
                })
                .collect(),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for layer in &mut self.layers {
            for w in &mut layer.weights {
                *w *= factor;
            }
            for b in &mut layer.biases {
                *b *= factor;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weights.iter().all(|w| w.is_finite()) && l.biases.iter().all(|b| b.is_finite())
        })
    }

    /// Largest absolute entry, for diagnostics.
    pub fn max_abs(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases))
            .fold(0.0, |m, &v| m.max(v.abs()))
    }
}

/// Initializes weights from N(0, 0.01^2) with a ChaCha8 stream seeded by
/// `seed`; biases start at zero. Identical seeds give identical parameters.
pub fn init_gaussian(arch: &Architecture, seed: u64) -> Result<NetworkParams> {
    if arch.widths.len() < 2 {
        return Err(Error::invalid("architecture needs at least one layer"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, INIT_STD).expect("valid std");
    let last = arch.widths.len() - 2;
    let layers = arch
        .widths
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let (in_dim, out_dim) = (w[0], w[1]);
            let activation = if i == last {
                match arch.head {
                    Head::Distribution => Activation::Linear,
                    Head::ScalarRegression => Activation::Tanh,
                }
            } else {
                Activation::Relu
            };
            DenseLayer {
                in_dim,
                out_dim,
                weights: (0..in_dim * out_dim).map(|_| normal.sample(&mut rng)).collect(),
                biases: vec![0.0; out_dim],
                activation,
            }
        })
        .collect();
    Ok(NetworkParams {
        layers,
        head: arch.head,
    })
}

/// Reverse-accumulates gradients of a scalar loss through the network.
///
/// `grad_output` is the loss gradient with respect to the network OUTPUT
/// (post-activation): `yhat - y` for the distribution losses (the last layer
/// is linear, so logits and output coincide) or the scalar regression
/// derivative (the tanh derivative is applied here).
pub fn backward(
    net: &NetworkParams,
    input: &[f64],
    cache: &ForwardCache,
    grad_output: &[f64],
) -> Result<Gradients> {
    let mut grads = Gradients::zeros_like(net);
    backward_into(net, input, cache, grad_output, &mut grads)?;
    Ok(grads)
}

/// Like [`backward`] but accumulates into existing gradient buffers, used by
/// the trainer to sum over a mini-batch in a fixed order.
pub fn backward_into(
    net: &NetworkParams,
    input: &[f64],
    cache: &ForwardCache,
    grad_output: &[f64],
    grads: &mut Gradients,
) -> Result<()> {
    let n_layers = net.layers.len();
    if cache.pre.len() != n_layers || cache.post.len() != n_layers {
        return Err(Error::dims("forward cache does not match network depth"));
    }
    if grad_output.len() != net.output_width() {
        return Err(Error::dims(format!(
            "grad_output width {} does not match output width {}",
            grad_output.len(),
            net.output_width()
        )));
    }
    // delta_l = dLoss/d(pre-activation of layer l)
    let mut delta: Vec<f64> = grad_output
        .iter()
        .zip(&cache.pre[n_layers - 1])
        .map(|(&g, &z)| g * net.layers[n_layers - 1].activation.derivative(z))
        .collect();
    for l in (0..n_layers).rev() {
        let layer = &net.layers[l];
        let below: &[f64] = if l == 0 { input } else { &cache.post[l - 1] };
        let grad = &mut grads.layers[l];
        for (o, &d) in delta.iter().enumerate() {
            grad.biases[o] += d;
            let row = &mut grad.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
            for (w, &x) in row.iter_mut().zip(below) {
                *w += d * x;
            }
        }
        if l > 0 {
            let prev_layer = &net.layers[l - 1];
            let mut next_delta = vec![0.0; layer.in_dim];
            for (o, &d) in delta.iter().enumerate() {
                let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (nd, &w) in next_delta.iter_mut().zip(row) {
                    *nd += d * w;
                }
            }
            for (nd, &z) in next_delta.iter_mut().zip(&cache.pre[l - 1]) {
                *nd *= prev_layer.activation.derivative(z);
            }
            delta = next_delta;
        }
    }
    Ok(())
}

/// Optimizer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub loss_kind: LossKind,
    /// Tube half-width for the epsilon-insensitive loss, in [-1, 1] units.
    pub eps_insensitive: f64,
    /// Optional step decay: every `lr_step_epochs` epochs the rate is
    /// multiplied by `lr_step_factor`. Zero disables the schedule.
    pub lr_step_epochs: usize,
    pub lr_step_factor: f64,
}

impl TrainConfig {
    /// Optimizer defaults: lr 0.01, momentum 0.9, weight decay 0.0005,
    /// mini-batches of 128.
    pub fn new(loss_kind: LossKind, epochs: usize, seed: u64) -> Self {
        TrainConfig {
            learning_rate: 0.01,
            momentum: 0.9,
            weight_decay: 0.0005,
            batch_size: 128,
            epochs,
            seed,
            loss_kind,
            eps_insensitive: 0.1,
            lr_step_epochs: 0,
            lr_step_factor: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::invalid("momentum must lie in [0, 1)"));
        }
        if self.weight_decay < 0.0 {
            return Err(Error::invalid("weight_decay must be nonnegative"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        if self.eps_insensitive < 0.0 {
            return Err(Error::invalid("eps_insensitive must be nonnegative"));
        }
        if self.lr_step_factor <= 0.0 {
            return Err(Error::invalid("lr_step_factor must be positive"));
        }
        Ok(())
    }

    fn learning_rate_at(&self, epoch: usize) -> f64 {
        if self.lr_step_epochs == 0 {
            self.learning_rate
        } else {
            self.learning_rate * self.lr_step_factor.powi((epoch / self.lr_step_epochs) as i32)
        }
    }
}

/// Momentum buffers matching the network's parameter shapes.
#[derive(Debug, Clone)]
pub struct Velocity {
    layers: Vec<LayerGradient>,
}

impl Velocity {
    pub fn zeros_like(net: &NetworkParams) -> Self {
        Velocity {
            layers: Gradients::zeros_like(net).layers,
        }
    }
}

/// One momentum-SGD update:
/// `v <- momentum * v - lr * (grad + weight_decay * param)`, `param <- param + v`.
/// Weight decay applies to weights only, never to biases.
pub fn sgd_step(
    net: &mut NetworkParams,
    grads: &Gradients,
    config: &TrainConfig,
    velocity: &mut Velocity,
) -> Result<()> {
    sgd_step_with_lr(net, grads, config, velocity, config.learning_rate)
}

fn sgd_step_with_lr(
    net: &mut NetworkParams,
    grads: &Gradients,
    config: &TrainConfig,
    velocity: &mut Velocity,
    lr: f64,
) -> Result<()> {
    if grads.layers.len() != net.layers.len() {
        return Err(Error::dims("gradient shape does not match network"));
    }
    if !grads.is_finite() {
        return Err(Error::numerical(
            "non-finite gradient encountered; aborting the update",
        ));
    }
    for ((layer, grad), vel) in net
        .layers
        .iter_mut()
        .zip(&grads.layers)
        .zip(&mut velocity.layers)
    {
        for ((w, &g), v) in layer
            .weights
            .iter_mut()
            .zip(&grad.weights)
            .zip(&mut vel.weights)
        {
            *v = config.momentum * *v - lr * (g + config.weight_decay * *w);
            *w += *v;
        }
        for ((b, &g), v) in layer
            .biases
            .iter_mut()
            .zip(&grad.biases)
            .zip(&mut vel.biases)
        {
            *v = config.momentum * *v - lr * g;
            *b += *v;
        }
    }
    Ok(())
}

/// A training target: a full label distribution or a normalized scalar.
#[derive(Debug, Clone)]
pub enum Target {
    Distribution(LabelDistribution),
    Scalar(f64),
}

/// Features with aligned training targets.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<Target>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    fn validate(&self, arch: &Architecture, loss: LossKind) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::invalid("dataset must be non-empty"));
        }
        if self.features.len() != self.targets.len() {
            return Err(Error::dims(format!(
                "{} feature rows but {} targets",
                self.features.len(),
                self.targets.len()
            )));
        }
        for (i, f) in self.features.iter().enumerate() {
            if f.len() != arch.input_width() {
                return Err(Error::dims(format!(
                    "sample {i} has {} features, architecture expects {}",
                    f.len(),
                    arch.input_width()
                )));
            }
        }
        for (i, t) in self.targets.iter().enumerate() {
            match (t, loss.is_distribution()) {
                (Target::Distribution(d), true) => {
                    if d.len() != arch.output_width() {
                        return Err(Error::dims(format!(
                            "sample {i} target has {} classes, head has {}",
                            d.len(),
                            arch.output_width()
                        )));
                    }
                }
                (Target::Scalar(_), false) => {}
                _ => {
                    return Err(Error::invalid(format!(
                        "sample {i}: target shape does not match loss kind {}",
                        loss.name()
                    )))
                }
            }
        }
        if loss.is_distribution() && arch.head != Head::Distribution {
            return Err(Error::invalid("distribution loss requires a distribution head"));
        }
        if !loss.is_distribution() && arch.head != Head::ScalarRegression {
            return Err(Error::invalid("regression loss requires a scalar head"));
        }
        Ok(())
    }
}

/// Loss value and gradient with respect to the network output.
pub fn loss_and_output_grad(
    loss: LossKind,
    eps_insensitive: f64,
    target: &Target,
    output: &[f64],
) -> Result<(f64, Vec<f64>)> {
    match (loss, target) {
        (LossKind::Kl, Target::Distribution(y)) => {
            let yhat = softmax(output)?;
            Ok((kl_loss(y, &yhat)?, kl_grad_logits(y, &yhat)?))
        }
        (LossKind::AlphaDiv, Target::Distribution(y)) => {
            let yhat = softmax(output)?;
            Ok((alpha_div_loss(y, &yhat)?, alpha_div_grad_logits(y, &yhat)?))
        }
        (LossKind::SquaredL2, Target::Scalar(t)) => {
            let (v, g) = regression_loss(RegressionKind::SquaredL2, *t, output[0], 0.0)?;
            Ok((v, vec![g]))
        }
        (LossKind::L1, Target::Scalar(t)) => {
            let (v, g) = regression_loss(RegressionKind::L1, *t, output[0], 0.0)?;
            Ok((v, vec![g]))
        }
        (LossKind::EpsInsensitive, Target::Scalar(t)) => {
            let (v, g) =
                regression_loss(RegressionKind::EpsInsensitive, *t, output[0], eps_insensitive)?;
            Ok((v, vec![g]))
        }
        _ => Err(Error::invalid("target shape does not match loss kind")),
    }
}

/// Per-epoch training record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_mae: Option<f64>,
    pub val_mae: Option<f64>,
}

/// One record per completed epoch.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

/// Ground truth and decoder wiring for per-epoch MAE tracking.
pub struct MaeTracking<'a> {
    pub decoder: &'a OutputDecoder,
    pub train_truths: &'a [Value],
    pub val_features: &'a [Vec<f64>],
    pub val_truths: &'a [Value],
}

/// Trains a freshly initialized network on `data`.
///
/// Epoch order is a seeded shuffle; the whole run is a pure function of
/// (data, architecture, config): reruns match bit for bit. When `tracking`
/// is provided, the history also records decoded train/validation MAE after
/// every epoch.
pub fn train(
    data: &Dataset,
    arch: &Architecture,
    config: &TrainConfig,
    tracking: Option<&MaeTracking<'_>>,
) -> Result<(NetworkParams, TrainHistory)> {
    config.validate()?;
    data.validate(arch, config.loss_kind)?;
    if let Some(t) = tracking {
        if t.train_truths.len() != data.len() {
            return Err(Error::dims("train truth count does not match dataset"));
        }
        if t.val_features.len() != t.val_truths.len() {
            return Err(Error::dims("validation truth count does not match features"));
        }
    }

    let mut net = init_gaussian(arch, config.seed)?;
    let mut velocity = Velocity::zeros_like(&net);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed ^ SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = TrainHistory::default();

    for epoch in 0..config.epochs {
        let lr = config.learning_rate_at(epoch);
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut grads = Gradients::zeros_like(&net);
            for &i in batch {
                let (output, cache) = net.forward_cached(&data.features[i])?;
                let (value, grad_out) = loss_and_output_grad(
                    config.loss_kind,
                    config.eps_insensitive,
                    &data.targets[i],
                    &output,
                )?;
                loss_sum += value;
                backward_into(&net, &data.features[i], &cache, &grad_out, &mut grads)?;
            }
            grads.scale(1.0 / batch.len() as f64);
            sgd_step_with_lr(&mut net, &grads, config, &mut velocity, lr).map_err(|e| {
                Error::numerical(format!("epoch {epoch}: {e}"))
            })?;
        }
        let train_loss = loss_sum / data.len() as f64;
        if !train_loss.is_finite() {
            return Err(Error::numerical(format!(
                "epoch {epoch}: training loss became non-finite"
            )));
        }
        let (train_mae, val_mae) = match tracking {
            Some(t) => (
                Some(mean_abs_error(&net, t.decoder, &data.features, t.train_truths)?),
                Some(mean_abs_error(&net, t.decoder, t.val_features, t.val_truths)?),
            ),
            None => (None, None),
        };
        history.epochs.push(EpochRecord {
            epoch: epoch + 1,
            train_loss,
            train_mae,
            val_mae,
        });
    }
    Ok((net, history))
}

/// Mean decoded absolute error over a feature/truth set.
pub fn mean_abs_error(
    net: &NetworkParams,
    decoder: &OutputDecoder,
    features: &[Vec<f64>],
    truths: &[Value],
) -> Result<f64> {
    if features.is_empty() {
        return Err(Error::invalid("cannot evaluate on an empty set"));
    }
    let mut total = 0.0;
    for (f, t) in features.iter().zip(truths) {
        let output = net.forward(f)?;
        total += decoder.predict(&output)?.abs_error(t);
    }
    Ok(total / features.len() as f64)
}

/// Versioned checkpoint: architecture, seed, optimizer settings, parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema: String,
    pub config: TrainConfig,
    pub net: NetworkParams,
}

pub const CHECKPOINT_SCHEMA: &str = "dldl-checkpoint-v1";

impl Checkpoint {
    pub fn new(config: TrainConfig, net: NetworkParams) -> Self {
        Checkpoint {
            schema: CHECKPOINT_SCHEMA.to_string(),
            config,
            net,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        if ck.schema != CHECKPOINT_SCHEMA {
            return Err(Error::invalid(format!(
                "unsupported checkpoint schema {:?}, expected {CHECKPOINT_SCHEMA:?}",
                ck.schema
            )));
        }
        for (i, layer) in ck.net.layers.iter().enumerate() {
            if layer.weights.len() != layer.in_dim * layer.out_dim
                || layer.biases.len() != layer.out_dim
            {
                return Err(Error::invalid(format!("layer {i} has inconsistent shapes")));
            }
        }
        Ok(ck)
    }
}
