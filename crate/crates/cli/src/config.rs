//! Flat key-value run configuration (TOML) with a strict schema: unknown
//! keys are rejected, and every run parameter has a documented default so a
//! config file only states what it changes.

use serde::Deserialize;

use dldl::error::{Error, Result};
use dldl::experiment::{CompareSettings, Method, Task};
use dldl::label_space::LabelGrid2D;
use dldl::loss::LossKind;
use dldl::net::TrainConfig;
use dldl::synth::{gen_age, gen_multilabel, gen_pose, gen_seg};

pub const CONFIG_SCHEMA: &str = "dldl-config-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Age,
    Pose,
    Multilabel,
    Seg,
}

/// One experiment run, fully described by flat keys.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Must equal `dldl-config-v1`.
    pub schema: String,
    pub task: TaskKind,
    #[serde(default = "d_seed")]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<String>,

    // Generator parameters. Split sizes, feature width and epoch count
    // default per task; see the resolver methods below.
    #[serde(default)]
    pub n_train: Option<usize>,
    #[serde(default)]
    pub n_val: Option<usize>,
    #[serde(default)]
    pub feature_dim: Option<usize>,
    #[serde(default = "d_noise")]
    pub noise: f64,
    #[serde(default = "d_classes")]
    pub classes: usize,
    #[serde(default = "d_height")]
    pub height: usize,
    #[serde(default = "d_width")]
    pub width: usize,
    #[serde(default = "d_grid_min")]
    pub grid_min: f64,
    #[serde(default = "d_grid_max")]
    pub grid_max: f64,
    #[serde(default = "d_grid_step")]
    pub grid_step: f64,

    // Method selection: `method` for train/eval, `methods` for compare.
    #[serde(default = "d_method")]
    pub method: String,
    #[serde(default = "d_methods")]
    pub methods: Vec<String>,

    // Optimizer.
    #[serde(default = "d_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "d_momentum")]
    pub momentum: f64,
    #[serde(default = "d_weight_decay")]
    pub weight_decay: f64,
    #[serde(default = "d_batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub epochs: Option<usize>,
    #[serde(default = "d_hidden")]
    pub hidden: Vec<usize>,
    #[serde(default = "d_eps_insensitive")]
    pub eps_insensitive: f64,
    #[serde(default)]
    pub lr_step_epochs: usize,
    #[serde(default = "d_one")]
    pub lr_step_factor: f64,

    // Target construction.
    #[serde(default)]
    pub sigma: f64,
    #[serde(default = "d_pose_sigma")]
    pub pose_sigma: f64,
    #[serde(default = "d_ls_epsilon")]
    pub ls_epsilon: f64,
    #[serde(default = "d_p_positive")]
    pub p_positive: f64,
    #[serde(default = "d_p_difficult")]
    pub p_difficult: f64,
    #[serde(default)]
    pub p_negative: f64,
    #[serde(default = "d_multilabel_epsilon")]
    pub multilabel_epsilon: f64,
    #[serde(default = "d_seg_kernel_size")]
    pub seg_kernel_size: usize,
    #[serde(default = "d_seg_kernel_sigma")]
    pub seg_kernel_sigma: f64,

    // Sigma sweep.
    #[serde(default = "d_sweep_sigmas")]
    pub sweep_sigmas: Vec<f64>,
    #[serde(default = "d_sweep_decoder")]
    pub sweep_decoder: String,
}

fn d_seed() -> u64 {
    1
}
fn d_noise() -> f64 {
    dldl::synth::AGE_DEFAULT_NOISE
}
fn d_classes() -> usize {
    10
}
fn d_height() -> usize {
    24
}
fn d_width() -> usize {
    24
}
fn d_grid_min() -> f64 {
    -90.0
}
fn d_grid_max() -> f64 {
    90.0
}
fn d_grid_step() -> f64 {
    15.0
}
fn d_method() -> String {
    "dldl".to_string()
}
fn d_methods() -> Vec<String> {
    Method::ALL.iter().map(|m| m.name().to_string()).collect()
}
fn d_learning_rate() -> f64 {
    0.1
}
fn d_momentum() -> f64 {
    0.9
}
fn d_weight_decay() -> f64 {
    0.0005
}
fn d_batch_size() -> usize {
    128
}
fn d_hidden() -> Vec<usize> {
    vec![64, 64]
}
fn d_eps_insensitive() -> f64 {
    0.1
}
fn d_one() -> f64 {
    1.0
}
fn d_pose_sigma() -> f64 {
    15.0
}
fn d_ls_epsilon() -> f64 {
    0.1
}
fn d_p_positive() -> f64 {
    1.0
}
fn d_p_difficult() -> f64 {
    0.3
}
fn d_multilabel_epsilon() -> f64 {
    0.01
}
fn d_seg_kernel_size() -> usize {
    5
}
fn d_seg_kernel_sigma() -> f64 {
    1.0
}
fn d_sweep_sigmas() -> Vec<f64> {
    dldl::experiment::default_sweep_sigmas(1.0)
}
fn d_sweep_decoder() -> String {
    "exp".to_string()
}

impl RunConfig {
    /// Parses and validates a TOML config; unknown keys and schema
    /// mismatches are rejected with the offending location.
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        let config: RunConfig = toml::from_str(text)
            .map_err(|e| Error::invalid(format!("config parse error: {e}")))?;
        if config.schema != CONFIG_SCHEMA {
            return Err(Error::invalid(format!(
                "unsupported config schema {:?}, expected {CONFIG_SCHEMA:?}",
                config.schema
            )));
        }
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read config {}: {e}", path.display())))?;
        RunConfig::from_toml(&text)
    }

    /// Training samples (images for seg): per-task defaults keep every task
    /// at desk scale.
    pub fn resolved_n_train(&self) -> usize {
        self.n_train.unwrap_or(match self.task {
            TaskKind::Age => dldl::synth::AGE_DEFAULT_TRAIN,
            TaskKind::Pose | TaskKind::Multilabel => 800,
            TaskKind::Seg => 16,
        })
    }

    pub fn resolved_n_val(&self) -> usize {
        self.n_val.unwrap_or(match self.task {
            TaskKind::Age => dldl::synth::AGE_DEFAULT_VAL,
            TaskKind::Pose | TaskKind::Multilabel => 400,
            TaskKind::Seg => 8,
        })
    }

    pub fn resolved_feature_dim(&self) -> usize {
        self.feature_dim.unwrap_or(match self.task {
            TaskKind::Age | TaskKind::Pose => dldl::synth::AGE_DEFAULT_DIM,
            TaskKind::Multilabel => 16,
            TaskKind::Seg => dldl::synth::SEG_FEATURE_DIM,
        })
    }

    pub fn resolved_epochs(&self) -> usize {
        self.epochs.unwrap_or(match self.task {
            TaskKind::Age | TaskKind::Pose => 80,
            TaskKind::Multilabel => 60,
            TaskKind::Seg => 30,
        })
    }

    /// Builds the synthetic task this config describes. Every generator is
    /// seeded from the run seed.
    pub fn build_task(&self) -> Result<Task> {
        let (n_train, n_val) = (self.resolved_n_train(), self.resolved_n_val());
        match self.task {
            TaskKind::Age => Ok(Task::Age(gen_age(
                n_train,
                n_val,
                self.resolved_feature_dim(),
                self.noise,
                self.seed,
            )?)),
            TaskKind::Pose => {
                let grid = LabelGrid2D::square_range(self.grid_min, self.grid_max, self.grid_step)?;
                Ok(Task::Pose(gen_pose(
                    n_train,
                    n_val,
                    &grid,
                    self.resolved_feature_dim(),
                    self.seed,
                )?))
            }
            TaskKind::Multilabel => Ok(Task::MultiLabel(gen_multilabel(
                n_train,
                n_val,
                self.classes,
                self.resolved_feature_dim(),
                self.seed,
            )?)),
            TaskKind::Seg => Ok(Task::Seg(gen_seg(
                n_train,
                n_val,
                self.height,
                self.width,
                self.classes,
                self.seed,
            )?)),
        }
    }

    pub fn build_settings(&self) -> Result<CompareSettings> {
        let mut train = TrainConfig::new(LossKind::Kl, self.resolved_epochs(), self.seed);
        train.learning_rate = self.learning_rate;
        train.momentum = self.momentum;
        train.weight_decay = self.weight_decay;
        train.batch_size = self.batch_size;
        train.eps_insensitive = self.eps_insensitive;
        train.lr_step_epochs = self.lr_step_epochs;
        train.lr_step_factor = self.lr_step_factor;
        train.validate()?;
        let mut settings = CompareSettings::new(train);
        settings.hidden = self.hidden.clone();
        settings.age_sigma = if self.sigma > 0.0 { Some(self.sigma) } else { None };
        settings.pose_sigma = self.pose_sigma;
        settings.ls_epsilon = self.ls_epsilon;
        settings.p_positive = self.p_positive;
        settings.p_difficult = self.p_difficult;
        settings.p_negative = self.p_negative;
        settings.multilabel_epsilon = self.multilabel_epsilon;
        settings.seg_kernel_size = self.seg_kernel_size;
        settings.seg_kernel_sigma = self.seg_kernel_sigma;
        settings.sweep_decoder = self.sweep_decoder.clone();
        Ok(settings)
    }

    pub fn parse_method(&self) -> Result<Method> {
        Method::parse(&self.method)
    }

    pub fn parse_methods(&self) -> Result<Vec<Method>> {
        self.methods.iter().map(|m| Method::parse(m)).collect()
    }
}
