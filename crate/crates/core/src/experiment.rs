//! The comparison harness: trains the distribution-learning method against
//! the classification, regression, label-smoothing and alpha-divergence
//! baselines on a synthetic task, scores every decoder, and assembles a
//! deterministic report with per-epoch error curves. Also hosts the target
//! sigma sweep.

use serde::{Deserialize, Serialize};

use crate::construct::{
    gaussian_1d, gaussian_2d, gaussian_kernel, label_smoothing, multilabel, one_hot,
    smooth_segmentation, ClassLevel,
};
use crate::decode::{OutputDecoder, Value};
use crate::error::{Error, Result};
use crate::label_space::{LabelDistribution, LabelGrid2D, LabelSet1D, SpatialLabelField};
use crate::loss::{normalize_target, softmax, LossKind};
use crate::metrics::{average_precision, cs, eps_error, mae, mean_iu, pose_acc, pose_mae, MetricReport};
use crate::net::{
    train, Architecture, Dataset, Head, MaeTracking, NetworkParams, Target, TrainConfig,
};
use crate::synth::{SynthAgeTask, SynthMultiLabelTask, SynthPoseTask, SynthSegTask};

/// A training method in a comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Distribution targets with the KL objective.
    Dldl,
    /// One-hot targets with the KL objective (softmax classification).
    CConvNet,
    /// Label-smoothed one-hot targets with the KL objective.
    ConvNetLs,
    /// Distribution targets with the alpha-divergence objective.
    ConvNetAlphaDiv,
    /// Scalar tanh head under squared l2.
    RConvNetL2,
    /// Scalar tanh head under l1.
    RConvNetL1,
    /// Scalar tanh head under the epsilon-insensitive loss.
    RConvNetEps,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Dldl,
        Method::CConvNet,
        Method::ConvNetLs,
        Method::ConvNetAlphaDiv,
        Method::RConvNetL2,
        Method::RConvNetL1,
        Method::RConvNetEps,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Dldl => "dldl",
            Method::CConvNet => "c-convnet",
            Method::ConvNetLs => "convnet-ls",
            Method::ConvNetAlphaDiv => "convnet-alpha-div",
            Method::RConvNetL2 => "r-convnet-l2",
            Method::RConvNetL1 => "r-convnet-l1",
            Method::RConvNetEps => "r-convnet-eps",
        }
    }

    pub fn parse(name: &str) -> Result<Method> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| Error::invalid(format!("unknown method {name:?}")))
    }

    pub fn loss_kind(self) -> LossKind {
        match self {
            Method::Dldl | Method::CConvNet | Method::ConvNetLs => LossKind::Kl,
            Method::ConvNetAlphaDiv => LossKind::AlphaDiv,
            Method::RConvNetL2 => LossKind::SquaredL2,
            Method::RConvNetL1 => LossKind::L1,
            Method::RConvNetEps => LossKind::EpsInsensitive,
        }
    }

    /// Loss label as reported in the comparison table.
    pub fn loss_label(self) -> &'static str {
        match self {
            Method::CConvNet => "softmax",
            other => other.loss_kind().name(),
        }
    }

    pub fn is_regression(self) -> bool {
        !self.loss_kind().is_distribution()
    }
}

/// Harness settings shared by every method in one comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSettings {
    /// Optimizer settings; `loss_kind` is overridden per method.
    pub train: TrainConfig,
    /// Hidden layer widths.
    pub hidden: Vec<usize>,
    /// Target sigma for age-style tasks; `None` uses each sample's own
    /// annotation sigma.
    pub age_sigma: Option<f64>,
    /// Target sigma (degrees) for pose-style tasks.
    pub pose_sigma: f64,
    /// Mixing weight for the label-smoothing baseline.
    pub ls_epsilon: f64,
    /// Three-level multi-label weights and uniform mixture.
    pub p_positive: f64,
    pub p_difficult: f64,
    pub p_negative: f64,
    pub multilabel_epsilon: f64,
    /// Segmentation smoothing kernel.
    pub seg_kernel_size: usize,
    pub seg_kernel_sigma: f64,
    /// Decoder used for the sigma sweep curve: "max" or "exp".
    pub sweep_decoder: String,
}

impl CompareSettings {
    /// Desk-scale experiment defaults: the optimizer keeps the momentum and
    /// weight-decay defaults but runs 80 epochs at learning rate 0.1, which
    /// the tiny-fan-in initialization needs to converge on small dense nets.
    pub fn desk_default(seed: u64) -> Self {
        let mut train = TrainConfig::new(LossKind::Kl, 80, seed);
        train.learning_rate = 0.1;
        CompareSettings::new(train)
    }

    pub fn new(train: TrainConfig) -> Self {
        CompareSettings {
            train,
            hidden: vec![64, 64],
            age_sigma: None,
            pose_sigma: 15.0,
            ls_epsilon: 0.1,
            p_positive: 1.0,
            p_difficult: 0.3,
            p_negative: 0.0,
            multilabel_epsilon: 0.01,
            seg_kernel_size: 5,
            seg_kernel_sigma: 1.0,
            sweep_decoder: "exp".to_string(),
        }
    }

    fn arch(&self, input: usize, output: usize, head: Head) -> Result<Architecture> {
        let mut widths = vec![input];
        widths.extend(&self.hidden);
        widths.push(output);
        Architecture::new(widths, head)
    }

    fn config_for(&self, method: Method) -> TrainConfig {
        let mut config = self.train.clone();
        config.loss_kind = method.loss_kind();
        config
    }
}

/// A synthetic task a comparison can run on.
#[derive(Debug, Clone)]
pub enum Task {
    Age(SynthAgeTask),
    Pose(SynthPoseTask),
    MultiLabel(SynthMultiLabelTask),
    Seg(SynthSegTask),
}

impl Task {
    pub fn kind(&self) -> &'static str {
        match self {
            Task::Age(_) => "age",
            Task::Pose(_) => "pose",
            Task::MultiLabel(_) => "multilabel",
            Task::Seg(_) => "seg",
        }
    }
}

/// One method x decoder line of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub loss: String,
    pub decoder: String,
    pub metrics: MetricReport,
}

/// Per-epoch curves of one trained network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodCurve {
    pub method: String,
    pub history: crate::net::TrainHistory,
}

pub const REPORT_SCHEMA: &str = "dldl-report-v1";

/// Full comparison output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub task: String,
    pub seed: u64,
    pub rows: Vec<ReportRow>,
    pub curves: Vec<MethodCurve>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn row(&self, method: &str, decoder: &str) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.decoder == decoder)
    }

    pub fn curve(&self, method: &str) -> Option<&MethodCurve> {
        self.curves.iter().find(|c| c.method == method)
    }
}

/// A method trained on one task: its networks (pose regression trains one
/// per angle), the per-method optimizer config, and the training curves.
#[derive(Debug, Clone)]
pub struct FittedMethod {
    pub method: Method,
    pub config: TrainConfig,
    /// Named parameter sets; a single `"net"` for every method except pose
    /// regression, which carries `"pitch"` and `"yaw"`.
    pub nets: Vec<(String, NetworkParams)>,
    pub curves: Vec<MethodCurve>,
}

/// Trains one method on the task.
pub fn fit_method(task: &Task, method: Method, settings: &CompareSettings) -> Result<FittedMethod> {
    match task {
        Task::Age(t) => fit_age(t, method, settings),
        Task::Pose(t) => fit_pose(t, method, settings),
        Task::MultiLabel(t) => fit_multilabel(t, method, settings),
        Task::Seg(t) => fit_seg(t, method, settings),
    }
}

/// Evaluates already-trained networks on the task's validation split,
/// producing one table row per applicable decoder.
pub fn evaluate_method(
    task: &Task,
    method: Method,
    nets: &[(String, NetworkParams)],
    settings: &CompareSettings,
) -> Result<Vec<ReportRow>> {
    match task {
        Task::Age(t) => evaluate_age(t, method, nets, settings),
        Task::Pose(t) => evaluate_pose(t, method, nets),
        Task::MultiLabel(t) => evaluate_multilabel(t, method, nets),
        Task::Seg(t) => evaluate_seg(t, method, nets),
    }
}

/// Trains every method on the task from the identical seed and architecture
/// family, evaluates each applicable decoder on the validation split, and
/// returns the metric table plus per-epoch curves.
pub fn run_comparison(
    task: &Task,
    methods: &[Method],
    settings: &CompareSettings,
) -> Result<ExperimentReport> {
    if methods.is_empty() {
        return Err(Error::invalid("method list must be non-empty"));
    }
    let mut report = ExperimentReport {
        schema: REPORT_SCHEMA.to_string(),
        task: task.kind().to_string(),
        seed: settings.train.seed,
        rows: Vec::new(),
        curves: Vec::new(),
    };
    for &method in methods {
        let fitted = fit_method(task, method, settings)?;
        report
            .rows
            .extend(evaluate_method(task, method, &fitted.nets, settings)?);
        report.curves.extend(fitted.curves);
    }
    Ok(report)
}

fn scalar_values(values: &[f64]) -> Vec<Value> {
    values.iter().map(|&v| Value::Scalar(v)).collect()
}

fn single_net(nets: &[(String, NetworkParams)]) -> Result<&NetworkParams> {
    match nets {
        [(_, net)] => Ok(net),
        _ => Err(Error::invalid(format!(
            "expected one network, got {}",
            nets.len()
        ))),
    }
}

// ---------------------------------------------------------------------------
// Age-style task
// ---------------------------------------------------------------------------

fn age_distribution_target(
    method: Method,
    set: &LabelSet1D,
    mu: f64,
    sigma: f64,
    settings: &CompareSettings,
) -> Result<LabelDistribution> {
    match method {
        Method::Dldl | Method::ConvNetAlphaDiv => gaussian_1d(set, mu, sigma),
        Method::CConvNet => one_hot(set, mu),
        Method::ConvNetLs => label_smoothing(&one_hot(set, mu)?, settings.ls_epsilon),
        _ => Err(Error::invalid("not a distribution method")),
    }
}

/// Canonical decoder for a method's per-epoch curve: expectation for the
/// distribution-target methods (the better age decoder), max for the
/// classification-style baselines.
fn age_curve_decoder(method: Method, set: &LabelSet1D) -> OutputDecoder {
    match method {
        Method::Dldl | Method::ConvNetAlphaDiv => OutputDecoder::ExpectedLabel(set.clone()),
        _ => OutputDecoder::MaxLabel(set.clone()),
    }
}

fn age_row_metrics(preds: &[f64], truths: &[f64], sigmas: &[f64]) -> Result<MetricReport> {
    let mut metrics = MetricReport::new(preds.len());
    metrics.insert("mae", mae(preds, truths)?);
    metrics.insert("eps_error", eps_error(preds, truths, sigmas)?);
    for g in [1.0, 5.0, 10.0] {
        metrics.insert(&format!("cs_{g}"), cs(preds, truths, g)?);
    }
    Ok(metrics)
}

fn fit_age(t: &SynthAgeTask, method: Method, settings: &CompareSettings) -> Result<FittedMethod> {
    let set = &t.label_set;
    let config = settings.config_for(method);
    let train_truths = scalar_values(&t.train.mu);
    let val_truths = scalar_values(&t.val.mu);

    let (data, arch, decoder) = if method.is_regression() {
        let (lo, hi) = (set.min(), set.max());
        let targets = t
            .train
            .mu
            .iter()
            .map(|&mu| Ok(Target::Scalar(normalize_target(mu, lo, hi)?)))
            .collect::<Result<Vec<_>>>()?;
        (
            Dataset {
                features: t.train.features.clone(),
                targets,
            },
            settings.arch(t.feature_dim, 1, Head::ScalarRegression)?,
            OutputDecoder::Regression { min: lo, max: hi },
        )
    } else {
        let targets = t
            .train
            .mu
            .iter()
            .zip(&t.train.sigma)
            .map(|(&mu, &s)| {
                let sigma = settings.age_sigma.unwrap_or(s);
                Ok(Target::Distribution(age_distribution_target(
                    method, set, mu, sigma, settings,
                )?))
            })
            .collect::<Result<Vec<_>>>()?;
        (
            Dataset {
                features: t.train.features.clone(),
                targets,
            },
            settings.arch(t.feature_dim, set.len(), Head::Distribution)?,
            age_curve_decoder(method, set),
        )
    };
    let tracking = MaeTracking {
        decoder: &decoder,
        train_truths: &train_truths,
        val_features: &t.val.features,
        val_truths: &val_truths,
    };
    let (net, history) = train(&data, &arch, &config, Some(&tracking))?;
    Ok(FittedMethod {
        method,
        config,
        nets: vec![("net".to_string(), net)],
        curves: vec![MethodCurve {
            method: method.name().to_string(),
            history,
        }],
    })
}

fn evaluate_age(
    t: &SynthAgeTask,
    method: Method,
    nets: &[(String, NetworkParams)],
    _settings: &CompareSettings,
) -> Result<Vec<ReportRow>> {
    let set = &t.label_set;
    let net = single_net(nets)?;
    let decoders: Vec<OutputDecoder> = if method.is_regression() {
        vec![OutputDecoder::Regression {
            min: set.min(),
            max: set.max(),
        }]
    } else {
        vec![
            OutputDecoder::MaxLabel(set.clone()),
            OutputDecoder::ExpectedLabel(set.clone()),
        ]
    };
    decoders
        .into_iter()
        .map(|decoder| {
            let preds = decode_scalars(net, &decoder, &t.val.features)?;
            Ok(ReportRow {
                method: method.name().to_string(),
                loss: method.loss_label().to_string(),
                decoder: decoder.name().to_string(),
                metrics: age_row_metrics(&preds, &t.val.mu, &t.val.sigma)?,
            })
        })
        .collect()
}

/// Cumulative-score curve of a trained age network: one (g, percent) point
/// per integer threshold in `1..=max_g`.
pub fn age_cs_curve(
    t: &SynthAgeTask,
    net: &NetworkParams,
    decoder: &OutputDecoder,
    max_g: usize,
) -> Result<Vec<(f64, f64)>> {
    let preds = decode_scalars(net, decoder, &t.val.features)?;
    (1..=max_g)
        .map(|g| Ok((g as f64, cs(&preds, &t.val.mu, g as f64)?)))
        .collect()
}

fn decode_scalars(
    net: &NetworkParams,
    decoder: &OutputDecoder,
    features: &[Vec<f64>],
) -> Result<Vec<f64>> {
    features
        .iter()
        .map(|f| match decoder.predict(&net.forward(f)?)? {
            Value::Scalar(v) => Ok(v),
            Value::Pair(..) => Err(Error::invalid("expected a scalar decoder")),
        })
        .collect()
}

fn decode_pairs(
    net: &NetworkParams,
    decoder: &OutputDecoder,
    features: &[Vec<f64>],
) -> Result<Vec<(f64, f64)>> {
    features
        .iter()
        .map(|f| match decoder.predict(&net.forward(f)?)? {
            Value::Pair(p, y) => Ok((p, y)),
            Value::Scalar(_) => Err(Error::invalid("expected a pair decoder")),
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Pose-style task
// ---------------------------------------------------------------------------

fn grid_cell_index(grid: &LabelGrid2D, pitch: f64, yaw: f64) -> usize {
    let row = nearest_position(grid.pitch_values(), pitch);
    let col = nearest_position(grid.yaw_values(), yaw);
    row * grid.yaw_values().len() + col
}

fn nearest_position(values: &[f64], v: f64) -> usize {
    let mut best = 0;
    for (i, &x) in values.iter().enumerate().skip(1) {
        if (x - v).abs() < (values[best] - v).abs() {
            best = i;
        }
    }
    best
}

fn snap_to_grid(grid: &LabelGrid2D, pred: (f64, f64)) -> (f64, f64) {
    (
        grid.pitch_values()[nearest_position(grid.pitch_values(), pred.0)],
        grid.yaw_values()[nearest_position(grid.yaw_values(), pred.1)],
    )
}

fn pose_row_metrics(
    preds: &[(f64, f64)],
    truths: &[(f64, f64)],
    grid: Option<&LabelGrid2D>,
) -> Result<MetricReport> {
    let mut metrics = MetricReport::new(preds.len());
    let (p, y, j) = pose_mae(preds, truths)?;
    metrics.insert("pitch_mae", p);
    metrics.insert("yaw_mae", y);
    metrics.insert("joint_mae", j);
    // Accuracy treats every grid value as a class, so continuous predictions
    // snap to the grid first; regression rows skip accuracy entirely.
    if let Some(grid) = grid {
        let snapped: Vec<(f64, f64)> = preds.iter().map(|&p| snap_to_grid(grid, p)).collect();
        let (pa, ya, ja) = pose_acc(&snapped, truths)?;
        metrics.insert("pitch_acc", pa);
        metrics.insert("yaw_acc", ya);
        metrics.insert("joint_acc", ja);
    }
    Ok(metrics)
}

fn fit_pose(t: &SynthPoseTask, method: Method, settings: &CompareSettings) -> Result<FittedMethod> {
    let grid = &t.grid;
    let cells = grid.cell_count();
    let config = settings.config_for(method);

    if method.is_regression() {
        // Two independent scalar networks, one per angle.
        let mut nets = Vec::new();
        let mut curves = Vec::new();
        for (axis, values) in [("pitch", grid.pitch_values()), ("yaw", grid.yaw_values())] {
            let (lo, hi) = (values[0], *values.last().unwrap());
            let pick = |t: &(f64, f64)| if axis == "pitch" { t.0 } else { t.1 };
            let targets = t
                .train
                .targets
                .iter()
                .map(|pair| Ok(Target::Scalar(normalize_target(pick(pair), lo, hi)?)))
                .collect::<Result<Vec<_>>>()?;
            let data = Dataset {
                features: t.train.features.clone(),
                targets,
            };
            let arch = settings.arch(t.feature_dim, 1, Head::ScalarRegression)?;
            let decoder = OutputDecoder::Regression { min: lo, max: hi };
            let train_truths: Vec<Value> = t
                .train
                .targets
                .iter()
                .map(|pair| Value::Scalar(pick(pair)))
                .collect();
            let val_truths: Vec<Value> = t
                .val
                .targets
                .iter()
                .map(|pair| Value::Scalar(pick(pair)))
                .collect();
            let tracking = MaeTracking {
                decoder: &decoder,
                train_truths: &train_truths,
                val_features: &t.val.features,
                val_truths: &val_truths,
            };
            let (net, history) = train(&data, &arch, &config, Some(&tracking))?;
            nets.push((axis.to_string(), net));
            curves.push(MethodCurve {
                method: format!("{}[{axis}]", method.name()),
                history,
            });
        }
        return Ok(FittedMethod {
            method,
            config,
            nets,
            curves,
        });
    }

    let targets = t
        .train
        .targets
        .iter()
        .map(|&(p, y)| {
            let dist = match method {
                Method::Dldl | Method::ConvNetAlphaDiv => {
                    gaussian_2d(grid, (p, y), settings.pose_sigma)?.flatten()
                }
                Method::CConvNet => LabelDistribution::one_hot(cells, grid_cell_index(grid, p, y))?,
                Method::ConvNetLs => label_smoothing(
                    &LabelDistribution::one_hot(cells, grid_cell_index(grid, p, y))?,
                    settings.ls_epsilon,
                )?,
                _ => unreachable!("regression handled above"),
            };
            Ok(Target::Distribution(dist))
        })
        .collect::<Result<Vec<_>>>()?;
    let data = Dataset {
        features: t.train.features.clone(),
        targets,
    };
    let arch = settings.arch(t.feature_dim, cells, Head::Distribution)?;
    // The joint mode is the pose decoder of record; curves track it.
    let curve_decoder = OutputDecoder::JointMax(grid.clone());
    let pair_truths_train: Vec<Value> =
        t.train.targets.iter().map(|&(p, y)| Value::Pair(p, y)).collect();
    let pair_truths_val: Vec<Value> =
        t.val.targets.iter().map(|&(p, y)| Value::Pair(p, y)).collect();
    let tracking = MaeTracking {
        decoder: &curve_decoder,
        train_truths: &pair_truths_train,
        val_features: &t.val.features,
        val_truths: &pair_truths_val,
    };
    let (net, history) = train(&data, &arch, &config, Some(&tracking))?;
    Ok(FittedMethod {
        method,
        config,
        nets: vec![("net".to_string(), net)],
        curves: vec![MethodCurve {
            method: method.name().to_string(),
            history,
        }],
    })
}

fn evaluate_pose(
    t: &SynthPoseTask,
    method: Method,
    nets: &[(String, NetworkParams)],
) -> Result<Vec<ReportRow>> {
    let grid = &t.grid;
    if method.is_regression() {
        if nets.len() != 2 {
            return Err(Error::invalid(
                "pose regression needs a pitch and a yaw network",
            ));
        }
        let mut axis_preds = Vec::new();
        for (axis, values) in [("pitch", grid.pitch_values()), ("yaw", grid.yaw_values())] {
            let net = nets
                .iter()
                .find(|(name, _)| name == axis)
                .map(|(_, n)| n)
                .ok_or_else(|| Error::invalid(format!("missing {axis} network")))?;
            let decoder = OutputDecoder::Regression {
                min: values[0],
                max: *values.last().unwrap(),
            };
            axis_preds.push(decode_scalars(net, &decoder, &t.val.features)?);
        }
        let preds: Vec<(f64, f64)> = axis_preds[0]
            .iter()
            .zip(&axis_preds[1])
            .map(|(&p, &y)| (p, y))
            .collect();
        return Ok(vec![ReportRow {
            method: method.name().to_string(),
            loss: method.loss_label().to_string(),
            decoder: "scalar".to_string(),
            metrics: pose_row_metrics(&preds, &t.val.targets, None)?,
        }]);
    }
    let net = single_net(nets)?;
    [
        OutputDecoder::JointMax(grid.clone()),
        OutputDecoder::JointExpectation(grid.clone()),
    ]
    .into_iter()
    .map(|decoder| {
        let preds = decode_pairs(net, &decoder, &t.val.features)?;
        Ok(ReportRow {
            method: method.name().to_string(),
            loss: method.loss_label().to_string(),
            decoder: decoder.name().to_string(),
            metrics: pose_row_metrics(&preds, &t.val.targets, Some(grid))?,
        })
    })
    .collect()
}

// ---------------------------------------------------------------------------
// Multi-label task
// ---------------------------------------------------------------------------

/// Uniform distribution over the Positive classes; the multi-label analogue
/// of a one-hot target (Difficult treated as Negative).
fn positives_uniform(levels: &crate::construct::MultiLabelLevels) -> Result<LabelDistribution> {
    let weights: Vec<f64> = levels
        .levels()
        .iter()
        .map(|&l| if l == ClassLevel::Positive { 1.0 } else { 0.0 })
        .collect();
    LabelDistribution::from_weights(weights)
}

fn fit_multilabel(
    t: &SynthMultiLabelTask,
    method: Method,
    settings: &CompareSettings,
) -> Result<FittedMethod> {
    if method.is_regression() {
        return Err(Error::invalid(format!(
            "method {} is incompatible with the multilabel task",
            method.name()
        )));
    }
    let config = settings.config_for(method);
    let targets = t
        .train
        .levels
        .iter()
        .map(|levels| {
            let dist = match method {
                Method::Dldl | Method::ConvNetAlphaDiv => multilabel(
                    levels,
                    settings.p_positive,
                    settings.p_difficult,
                    settings.p_negative,
                    settings.multilabel_epsilon,
                )?,
                Method::CConvNet => positives_uniform(levels)?,
                Method::ConvNetLs => {
                    label_smoothing(&positives_uniform(levels)?, settings.ls_epsilon)?
                }
                _ => unreachable!(),
            };
            Ok(Target::Distribution(dist))
        })
        .collect::<Result<Vec<_>>>()?;
    let data = Dataset {
        features: t.train.features.clone(),
        targets,
    };
    let arch = settings.arch(t.feature_dim, t.classes, Head::Distribution)?;
    let (net, history) = train(&data, &arch, &config, None)?;
    Ok(FittedMethod {
        method,
        config,
        nets: vec![("net".to_string(), net)],
        curves: vec![MethodCurve {
            method: method.name().to_string(),
            history,
        }],
    })
}

fn evaluate_multilabel(
    t: &SynthMultiLabelTask,
    method: Method,
    nets: &[(String, NetworkParams)],
) -> Result<Vec<ReportRow>> {
    if method.is_regression() {
        return Err(Error::invalid(format!(
            "method {} is incompatible with the multilabel task",
            method.name()
        )));
    }
    let net = single_net(nets)?;
    // Per-class ranking scores are the softmax masses. Following the VOC
    // protocol, samples annotated Difficult for a class are excluded from
    // that class's ranking: they count neither for nor against it.
    let mut scores = Vec::with_capacity(t.val.features.len());
    for f in &t.val.features {
        scores.push(softmax(&net.forward(f)?)?.mass().to_vec());
    }
    let mut ap_sum = 0.0;
    let mut ap_classes = 0usize;
    for k in 0..t.classes {
        let mut class_scores = Vec::new();
        let mut class_pos = Vec::new();
        for (s, levels) in scores.iter().zip(&t.val.levels) {
            match levels.levels()[k] {
                ClassLevel::Difficult => {}
                level => {
                    class_scores.push(s[k]);
                    class_pos.push(level == ClassLevel::Positive);
                }
            }
        }
        if class_pos.iter().any(|&p| p) {
            ap_sum += average_precision(&class_scores, &class_pos)?;
            ap_classes += 1;
        }
    }
    if ap_classes == 0 {
        return Err(Error::invalid("no class has a positive validation sample"));
    }
    let mut metrics = MetricReport::new(t.val.features.len());
    metrics.insert("mean_ap", ap_sum / ap_classes as f64);
    Ok(vec![ReportRow {
        method: method.name().to_string(),
        loss: method.loss_label().to_string(),
        decoder: "scores".to_string(),
        metrics,
    }])
}

// ---------------------------------------------------------------------------
// Segmentation task
// ---------------------------------------------------------------------------

fn fit_seg(t: &SynthSegTask, method: Method, settings: &CompareSettings) -> Result<FittedMethod> {
    if method.is_regression() {
        return Err(Error::invalid(format!(
            "method {} is incompatible with the segmentation task",
            method.name()
        )));
    }
    let config = settings.config_for(method);
    let kernel = gaussian_kernel(settings.seg_kernel_size, settings.seg_kernel_sigma)?;
    let smooth_targets = matches!(method, Method::Dldl | Method::ConvNetAlphaDiv);

    let mut features = Vec::new();
    let mut targets = Vec::new();
    for sample in &t.train {
        let field = SpatialLabelField::from_label_map(&sample.labels, t.channels)?;
        let target_field = if smooth_targets {
            smooth_segmentation(&field, &kernel)?
        } else {
            field
        };
        for i in 0..t.height {
            for j in 0..t.width {
                features.push(sample.pixel_features(t.height, t.width, i, j));
                let pixel = target_field.pixel(i, j).to_vec();
                let dist = if method == Method::ConvNetLs {
                    label_smoothing(&LabelDistribution::new(pixel)?, settings.ls_epsilon)?
                } else {
                    LabelDistribution::new(pixel)?
                };
                targets.push(Target::Distribution(dist));
            }
        }
    }
    let data = Dataset { features, targets };
    let arch = settings.arch(crate::synth::SEG_FEATURE_DIM, t.channels, Head::Distribution)?;
    let (net, history) = train(&data, &arch, &config, None)?;
    Ok(FittedMethod {
        method,
        config,
        nets: vec![("net".to_string(), net)],
        curves: vec![MethodCurve {
            method: method.name().to_string(),
            history,
        }],
    })
}

fn evaluate_seg(
    t: &SynthSegTask,
    method: Method,
    nets: &[(String, NetworkParams)],
) -> Result<Vec<ReportRow>> {
    if method.is_regression() {
        return Err(Error::invalid(format!(
            "method {} is incompatible with the segmentation task",
            method.name()
        )));
    }
    let net = single_net(nets)?;
    // Decode every validation pixel to its argmax class and score mean IU
    // over the concatenated maps.
    let mut pred_rows = Vec::new();
    let mut truth_rows = Vec::new();
    for sample in &t.val {
        for i in 0..t.height {
            let mut row = Vec::with_capacity(t.width);
            for j in 0..t.width {
                let out = net.forward(&sample.pixel_features(t.height, t.width, i, j))?;
                row.push(argmax(&out));
            }
            pred_rows.push(row);
            truth_rows.push(sample.labels[i].clone());
        }
    }
    let mut metrics = MetricReport::new(t.val.len() * t.height * t.width);
    metrics.insert("mean_iu", mean_iu(&pred_rows, &truth_rows, t.channels)?);
    Ok(vec![ReportRow {
        method: method.name().to_string(),
        loss: method.loss_label().to_string(),
        decoder: "pixel-max".to_string(),
        metrics,
    }])
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Sigma sweep
// ---------------------------------------------------------------------------

/// One point of the sigma sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub sigma: f64,
    pub val_mae: f64,
}

pub const SWEEP_SCHEMA: &str = "dldl-sweep-v1";

/// Validation MAE of the distribution-learning method as a function of the
/// target sigma.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub schema: String,
    pub seed: u64,
    pub decoder: String,
    pub points: Vec<SweepPoint>,
}

impl SweepCurve {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// The default sweep grid `{0, 0.5 s, ..., 3 s}` for a quantization step `s`.
pub fn default_sweep_sigmas(step: f64) -> Vec<f64> {
    (0..=6).map(|i| step * 0.5 * i as f64).collect()
}

/// Trains the KL distribution method once per sigma (sigma 0 collapses to
/// one-hot targets) and records the validation MAE under the configured
/// sweep decoder.
pub fn sigma_sweep(
    task: &SynthAgeTask,
    sigmas: &[f64],
    settings: &CompareSettings,
) -> Result<SweepCurve> {
    if sigmas.is_empty() {
        return Err(Error::invalid("sigma list must be non-empty"));
    }
    if sigmas.iter().any(|&s| s < 0.0) {
        return Err(Error::invalid("sigmas must be nonnegative"));
    }
    let set = &task.label_set;
    let decoder = match settings.sweep_decoder.as_str() {
        "max" => OutputDecoder::MaxLabel(set.clone()),
        "exp" => OutputDecoder::ExpectedLabel(set.clone()),
        other => return Err(Error::invalid(format!("unknown sweep decoder {other:?}"))),
    };
    let mut config = settings.train.clone();
    config.loss_kind = LossKind::Kl;
    let arch = settings.arch(task.feature_dim, set.len(), Head::Distribution)?;
    let mut points = Vec::with_capacity(sigmas.len());
    for &sigma in sigmas {
        let targets = task
            .train
            .mu
            .iter()
            .map(|&mu| Ok(Target::Distribution(gaussian_1d(set, mu, sigma)?)))
            .collect::<Result<Vec<_>>>()?;
        let data = Dataset {
            features: task.train.features.clone(),
            targets,
        };
        let (net, _) = train(&data, &arch, &config, None)?;
        let preds = decode_scalars(&net, &decoder, &task.val.features)?;
        points.push(SweepPoint {
            sigma,
            val_mae: mae(&preds, &task.val.mu)?,
        });
    }
    Ok(SweepCurve {
        schema: SWEEP_SCHEMA.to_string(),
        seed: settings.train.seed,
        decoder: settings.sweep_decoder.clone(),
        points,
    })
}

// ---------------------------------------------------------------------------
// Flat CSV writers
// ---------------------------------------------------------------------------

/// Writes the comparison rows as flat CSV (one row per method x decoder).
pub fn rows_to_csv(report: &ExperimentReport) -> String {
    // Union of metric names, sorted for a stable header.
    let mut names: Vec<String> = Vec::new();
    for row in &report.rows {
        for name in row.metrics.metrics.keys() {
            if !names.contains(name) {
                names.push(name.clone());
            }
        }
    }
    names.sort();
    let mut out = String::from("method,loss,decoder,count");
    for name in &names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{}",
            row.method, row.loss, row.decoder, row.metrics.count
        ));
        for name in &names {
            out.push(',');
            if let Some(v) = row.metrics.get(name) {
                out.push_str(&format!("{v}"));
            }
        }
        out.push('\n');
    }
    out
}

/// Writes the per-epoch curves as flat CSV.
pub fn curves_to_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("method,epoch,train_loss,train_mae,val_mae\n");
    for curve in &report.curves {
        for e in &curve.history.epochs {
            let fmt_opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                curve.method,
                e.epoch,
                e.train_loss,
                fmt_opt(e.train_mae),
                fmt_opt(e.val_mae)
            ));
        }
    }
    out
}

/// Convenience map from metric name to value for a row, used by tests.
pub fn row_metric(report: &ExperimentReport, method: &str, decoder: &str, name: &str) -> Option<f64> {
    report.row(method, decoder).and_then(|r| r.metrics.get(name))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{gen_age, gen_multilabel, gen_pose, gen_seg};

    fn quick_settings(epochs: usize, seed: u64) -> CompareSettings {
        let mut settings = CompareSettings::new(TrainConfig::new(LossKind::Kl, epochs, seed));
        settings.hidden = vec![16];
        settings
    }

    #[test]
    fn age_comparison_has_expected_rows_and_determinism() {
        let task = Task::Age(gen_age(60, 30, 4, 0.5, 5).unwrap());
        let settings = quick_settings(2, 5);
        let methods = [Method::Dldl, Method::CConvNet, Method::RConvNetL2];
        let a = run_comparison(&task, &methods, &settings).unwrap();
        let b = run_comparison(&task, &methods, &settings).unwrap();
        assert_eq!(a, b);
        // Distribution methods contribute a max and an exp row; regression one.
        assert_eq!(a.rows.len(), 5);
        assert!(a.row("dldl", "max").is_some());
        assert!(a.row("dldl", "exp").is_some());
        assert!(a.row("c-convnet", "max").is_some());
        assert!(a.row("r-convnet-l2", "scalar").is_some());
        assert_eq!(a.curves.len(), 3);
        for row in &a.rows {
            assert!(row.metrics.get("mae").unwrap() >= 0.0);
            assert!(row.metrics.get("eps_error").unwrap() < 1.0);
        }
    }

    #[test]
    fn full_method_list_row_count() {
        let task = Task::Age(gen_age(40, 20, 4, 0.5, 9).unwrap());
        let settings = quick_settings(1, 9);
        let report = run_comparison(&task, &Method::ALL, &settings).unwrap();
        // 4 distribution methods x 2 decoders + 3 regression methods.
        assert_eq!(report.rows.len(), 11);
        assert_eq!(report.curves.len(), 7);
    }

    #[test]
    fn fit_then_evaluate_matches_comparison() {
        let task = Task::Age(gen_age(40, 20, 4, 0.5, 13).unwrap());
        let settings = quick_settings(2, 13);
        let report = run_comparison(&task, &[Method::Dldl], &settings).unwrap();
        let fitted = fit_method(&task, Method::Dldl, &settings).unwrap();
        let rows = evaluate_method(&task, Method::Dldl, &fitted.nets, &settings).unwrap();
        assert_eq!(rows, report.rows);
    }

    #[test]
    fn pose_comparison_rows() {
        let grid = crate::label_space::LabelGrid2D::square_range(-30.0, 30.0, 15.0).unwrap();
        let task = Task::Pose(gen_pose(50, 25, &grid, 6, 3).unwrap());
        let settings = quick_settings(2, 3);
        let report =
            run_comparison(&task, &[Method::Dldl, Method::RConvNetL1], &settings).unwrap();
        assert_eq!(report.rows.len(), 3); // max + exp + scalar
        let dldl_max = report.row("dldl", "max").unwrap();
        assert!(dldl_max.metrics.get("joint_acc").is_some());
        let reg = report.row("r-convnet-l1", "scalar").unwrap();
        assert!(reg.metrics.get("joint_acc").is_none());
        assert!(reg.metrics.get("joint_mae").is_some());
        // Regression trains one network per axis.
        assert!(report.curve("r-convnet-l1[pitch]").is_some());
        assert!(report.curve("r-convnet-l1[yaw]").is_some());
    }

    #[test]
    fn multilabel_comparison_reports_mean_ap() {
        let task = Task::MultiLabel(gen_multilabel(60, 30, 6, 8, 21).unwrap());
        let settings = quick_settings(3, 21);
        let report = run_comparison(&task, &[Method::Dldl, Method::CConvNet], &settings).unwrap();
        for row in &report.rows {
            let v = row.metrics.get("mean_ap").unwrap();
            assert!((0.0..=1.0).contains(&v));
        }
        assert!(run_comparison(&task, &[Method::RConvNetL2], &settings).is_err());
    }

    #[test]
    fn seg_comparison_reports_mean_iu() {
        let task = Task::Seg(gen_seg(4, 2, 8, 8, 2, 33).unwrap());
        let settings = quick_settings(2, 33);
        let report = run_comparison(&task, &[Method::Dldl, Method::CConvNet], &settings).unwrap();
        for row in &report.rows {
            let v = row.metrics.get("mean_iu").unwrap();
            assert!((0.0..=1.0).contains(&v));
        }
        assert!(run_comparison(&task, &[Method::RConvNetEps], &settings).is_err());
    }

    #[test]
    fn sweep_has_one_point_per_sigma() {
        let task = gen_age(40, 20, 4, 0.5, 2).unwrap();
        let settings = quick_settings(1, 2);
        let sigmas = default_sweep_sigmas(1.0);
        assert_eq!(sigmas, vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]);
        let a = sigma_sweep(&task, &sigmas, &settings).unwrap();
        assert_eq!(a.points.len(), 7);
        let b = sigma_sweep(&task, &sigmas, &settings).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn method_parsing_roundtrip() {
        for m in Method::ALL {
            assert_eq!(Method::parse(m.name()).unwrap(), m);
        }
        assert!(Method::parse("nope").is_err());
    }

    #[test]
    fn cs_curve_is_non_decreasing() {
        let task = gen_age(40, 20, 4, 0.5, 6).unwrap();
        let settings = quick_settings(2, 6);
        let fitted = fit_method(&Task::Age(task.clone()), Method::Dldl, &settings).unwrap();
        let decoder = OutputDecoder::ExpectedLabel(task.label_set.clone());
        let curve = age_cs_curve(&task, &fitted.nets[0].1, &decoder, 30).unwrap();
        assert_eq!(curve.len(), 30);
        for w in curve.windows(2) {
            assert!(w[1].1 >= w[0].1);
        }
        assert_eq!(curve[0].0, 1.0);
        assert_eq!(curve[29].0, 30.0);
    }

    #[test]
    fn csv_outputs_are_populated() {
        let task = Task::Age(gen_age(30, 15, 4, 0.5, 8).unwrap());
        let settings = quick_settings(1, 8);
        let report = run_comparison(&task, &[Method::Dldl], &settings).unwrap();
        let rows = rows_to_csv(&report);
        assert!(rows.starts_with("method,loss,decoder,count"));
        assert!(rows.contains("dldl,kl,max"));
        let curves = curves_to_csv(&report);
        assert!(curves.contains("dldl,1,"));
    }
}
