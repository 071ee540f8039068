//! Seeded synthetic task generators.
//!
//! Each generator stands in for a real corpus with the same label structure:
//! an age-style task with per-sample annotation means and standard
//! deviations, a pose-style task with targets on a 2-D angle grid, a
//! multi-label task with three-level annotations, and a segmentation task
//! of colored rectangles with known boundaries. Features are deterministic
//! functions of a ChaCha8 stream, so a seed pins the whole task byte for
//! byte, and the noiseless target is always recoverable from the features
//! through the published generating function.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::construct::MultiLabelLevels;
use crate::error::{Error, Result};
use crate::label_space::{LabelGrid2D, LabelSet1D};

/// Feature rows with aligned per-sample mean and standard deviation labels.
#[derive(Debug, Clone, PartialEq)]
pub struct AgeSplit {
    pub features: Vec<Vec<f64>>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

/// Age-style estimation task over the label set {1..85}.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthAgeTask {
    pub label_set: LabelSet1D,
    pub feature_dim: usize,
    pub noise: f64,
    pub train: AgeSplit,
    pub val: AgeSplit,
    mix_linear: Vec<f64>,
    mix_sine: Vec<f64>,
}

impl SynthAgeTask {
    /// The noiseless generating function: a linear score plus a sinusoidal
    /// term, shifted to the middle of the label range and clamped to it.
    pub fn mean_function(&self, features: &[f64]) -> f64 {
        let s1: f64 = features.iter().zip(&self.mix_linear).map(|(x, u)| x * u).sum();
        let s2: f64 = features.iter().zip(&self.mix_sine).map(|(x, v)| x * v).sum();
        let raw = 43.0 + 16.0 * s1 + 8.0 * (1.5 * s2).sin();
        raw.clamp(self.label_set.min(), self.label_set.max())
    }
}

fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).expect("valid std");
    let mut v: Vec<f64> = (0..dim).map(|_| normal.sample(rng)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut v {
        *x /= norm;
    }
    v
}

/// Default desk-scale age fixture: 1000 train / 500 validation samples,
/// 8 features, label jitter bounded by 1.5 (about one quantization step of
/// intrinsic ambiguity).
pub const AGE_DEFAULT_TRAIN: usize = 1000;
pub const AGE_DEFAULT_VAL: usize = 500;
pub const AGE_DEFAULT_DIM: usize = 8;
pub const AGE_DEFAULT_NOISE: f64 = 1.5;

/// The default age fixture at the given seed.
pub fn gen_age_default(seed: u64) -> Result<SynthAgeTask> {
    gen_age(
        AGE_DEFAULT_TRAIN,
        AGE_DEFAULT_VAL,
        AGE_DEFAULT_DIM,
        AGE_DEFAULT_NOISE,
        seed,
    )
}

/// Generates an age-style task: `n_train` training and `n_val` validation
/// samples of `dim`-dimensional standard-normal features, with means from
/// the task's generating function plus `noise`-bounded uniform jitter and
/// per-sample sigma drawn from [1, 4].
pub fn gen_age(
    n_train: usize,
    n_val: usize,
    dim: usize,
    noise: f64,
    seed: u64,
) -> Result<SynthAgeTask> {
    if n_train == 0 || n_val == 0 {
        return Err(Error::invalid("split sizes must be positive"));
    }
    if dim == 0 {
        return Err(Error::invalid("feature dimension must be positive"));
    }
    if noise < 0.0 {
        return Err(Error::invalid("noise must be nonnegative"));
    }
    let label_set = LabelSet1D::range(1.0, 85.0, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mix_linear = unit_vector(&mut rng, dim);
    let mix_sine = unit_vector(&mut rng, dim);
    let mut task = SynthAgeTask {
        label_set,
        feature_dim: dim,
        noise,
        train: AgeSplit {
            features: Vec::new(),
            mu: Vec::new(),
            sigma: Vec::new(),
        },
        val: AgeSplit {
            features: Vec::new(),
            mu: Vec::new(),
            sigma: Vec::new(),
        },
        mix_linear,
        mix_sine,
    };
    let normal = Normal::new(0.0, 1.0).expect("valid std");
    let (lo, hi) = (task.label_set.min(), task.label_set.max());
    for (count, into_val) in [(n_train, false), (n_val, true)] {
        for _ in 0..count {
            let x: Vec<f64> = (0..dim).map(|_| normal.sample(&mut rng)).collect();
            let jitter = if noise > 0.0 {
                rng.gen_range(-noise..noise)
            } else {
                0.0
            };
            let mu = (task.mean_function(&x) + jitter).clamp(lo, hi);
            let sigma = rng.gen_range(1.0..4.0);
            let split = if into_val { &mut task.val } else { &mut task.train };
            split.features.push(x);
            split.mu.push(mu);
            split.sigma.push(sigma);
        }
    }
    Ok(task)
}

/// Feature rows with aligned (pitch, yaw) targets on grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseSplit {
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<(f64, f64)>,
}

/// Pose-style estimation task on a 2-D angle grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthPoseTask {
    pub grid: LabelGrid2D,
    pub feature_dim: usize,
    pub train: PoseSplit,
    pub val: PoseSplit,
}

/// Generates a pose-style task: targets are uniformly drawn grid nodes and
/// features are a seeded random projection of smooth angle descriptors plus
/// mild noise.
pub fn gen_pose(
    n_train: usize,
    n_val: usize,
    grid: &LabelGrid2D,
    dim: usize,
    seed: u64,
) -> Result<SynthPoseTask> {
    if n_train == 0 || n_val == 0 {
        return Err(Error::invalid("split sizes must be positive"));
    }
    if dim == 0 {
        return Err(Error::invalid("feature dimension must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("valid std");
    const BASE_DIM: usize = 8;
    let projection: Vec<f64> = (0..dim * BASE_DIM)
        .map(|_| normal.sample(&mut rng) / (BASE_DIM as f64).sqrt())
        .collect();
    let (n1, n2) = grid.shape();
    let make_split = |count: usize, rng: &mut ChaCha8Rng| -> PoseSplit {
        let mut features = Vec::with_capacity(count);
        let mut targets = Vec::with_capacity(count);
        for _ in 0..count {
            let j = rng.gen_range(0..n1);
            let k = rng.gen_range(0..n2);
            let pitch = grid.pitch_values()[j];
            let yaw = grid.yaw_values()[k];
            let (pr, yr) = (pitch.to_radians(), yaw.to_radians());
            let base = [
                pitch / 90.0,
                yaw / 90.0,
                pr.sin(),
                pr.cos(),
                yr.sin(),
                yr.cos(),
                pitch * yaw / 8100.0,
                (pr + yr).sin(),
            ];
            let x: Vec<f64> = (0..dim)
                .map(|r| {
                    let row = &projection[r * BASE_DIM..(r + 1) * BASE_DIM];
                    let clean: f64 = row.iter().zip(&base).map(|(m, b)| m * b).sum();
                    clean + 0.1 * normal.sample(rng)
                })
                .collect();
            features.push(x);
            targets.push((pitch, yaw));
        }
        PoseSplit { features, targets }
    };
    let train = make_split(n_train, &mut rng);
    let val = make_split(n_val, &mut rng);
    Ok(SynthPoseTask {
        grid: grid.clone(),
        feature_dim: dim,
        train,
        val,
    })
}

/// Feature rows with aligned three-level annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiLabelSplit {
    pub features: Vec<Vec<f64>>,
    pub levels: Vec<MultiLabelLevels>,
}

/// Multi-label task: features are sums of class prototypes.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthMultiLabelTask {
    pub classes: usize,
    pub feature_dim: usize,
    pub train: MultiLabelSplit,
    pub val: MultiLabelSplit,
}

/// Generates a multi-label task: every sample carries 1-3 positive classes
/// and 0-2 difficult ones; its features are the positive prototypes plus a
/// discounted difficult contribution plus noise.
pub fn gen_multilabel(
    n_train: usize,
    n_val: usize,
    classes: usize,
    dim: usize,
    seed: u64,
) -> Result<SynthMultiLabelTask> {
    if n_train == 0 || n_val == 0 {
        return Err(Error::invalid("split sizes must be positive"));
    }
    if classes < 2 {
        return Err(Error::invalid("need at least two classes"));
    }
    if dim == 0 {
        return Err(Error::invalid("feature dimension must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("valid std");
    let prototypes: Vec<Vec<f64>> = (0..classes)
        .map(|_| {
            (0..dim)
                .map(|_| normal.sample(&mut rng) / (dim as f64).sqrt())
                .collect()
        })
        .collect();
    let make_split = |count: usize, rng: &mut ChaCha8Rng| -> Result<MultiLabelSplit> {
        let mut features = Vec::with_capacity(count);
        let mut levels = Vec::with_capacity(count);
        for _ in 0..count {
            let mut order: Vec<usize> = (0..classes).collect();
            order.shuffle(rng);
            let n_pos = rng.gen_range(1..=3.min(classes));
            let n_diff = rng.gen_range(0..=2.min(classes - n_pos));
            let positive = &order[..n_pos];
            let difficult = &order[n_pos..n_pos + n_diff];
            let mut x = vec![0.0; dim];
            for &k in positive {
                for (xi, p) in x.iter_mut().zip(&prototypes[k]) {
                    *xi += p;
                }
            }
            // Difficult objects are clearly visible, just hard to score:
            // their prototypes enter the features at nearly full strength.
            for &k in difficult {
                for (xi, p) in x.iter_mut().zip(&prototypes[k]) {
                    *xi += 0.7 * p;
                }
            }
            for xi in &mut x {
                *xi += 0.3 * normal.sample(rng);
            }
            features.push(x);
            levels.push(MultiLabelLevels::from_index_sets(classes, positive, difficult)?);
        }
        Ok(MultiLabelSplit { features, levels })
    };
    let train = make_split(n_train, &mut rng)?;
    let val = make_split(n_val, &mut rng)?;
    Ok(SynthMultiLabelTask {
        classes,
        feature_dim: dim,
        train,
        val,
    })
}

/// One segmentation image: a label map and its noisy 3-channel rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct SegSample {
    /// `labels[i][j]` in `0..channels`, 0 = background.
    pub labels: Vec<Vec<usize>>,
    /// Row-major `height * width * 3` rendering of the label map.
    pub image: Vec<f64>,
}

/// Segmentation task of rectangles on background.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSegTask {
    pub height: usize,
    pub width: usize,
    /// Class channels including the background class 0.
    pub channels: usize,
    pub train: Vec<SegSample>,
    pub val: Vec<SegSample>,
}

/// Side length of the square pixel patch used as the per-pixel feature.
pub const SEG_PATCH: usize = 3;

/// Per-pixel feature dimension: a SEG_PATCH x SEG_PATCH patch of 3 channels.
pub const SEG_FEATURE_DIM: usize = SEG_PATCH * SEG_PATCH * 3;

impl SegSample {
    /// Flattened zero-padded patch of the rendering centered at (i, j).
    pub fn pixel_features(&self, height: usize, width: usize, i: usize, j: usize) -> Vec<f64> {
        let half = (SEG_PATCH / 2) as isize;
        let mut out = Vec::with_capacity(SEG_FEATURE_DIM);
        for di in -half..=half {
            for dj in -half..=half {
                let si = i as isize + di;
                let sj = j as isize + dj;
                if si < 0 || sj < 0 || si >= height as isize || sj >= width as isize {
                    out.extend_from_slice(&[0.0, 0.0, 0.0]);
                } else {
                    let base = ((si as usize) * width + sj as usize) * 3;
                    out.extend_from_slice(&self.image[base..base + 3]);
                }
            }
        }
        out
    }
}

/// Fraction of pixels with at least one 4-neighbor of a different class.
pub fn boundary_fraction(labels: &[Vec<usize>]) -> f64 {
    let h = labels.len();
    let w = labels[0].len();
    let mut boundary = 0usize;
    for i in 0..h {
        for j in 0..w {
            let l = labels[i][j];
            let differs = (i > 0 && labels[i - 1][j] != l)
                || (i + 1 < h && labels[i + 1][j] != l)
                || (j > 0 && labels[i][j - 1] != l)
                || (j + 1 < w && labels[i][j + 1] != l);
            if differs {
                boundary += 1;
            }
        }
    }
    boundary as f64 / (h * w) as f64
}

/// 3x3 box blur of a row-major h*w*3 image, clamped at the borders. Mixes
/// colors across class boundaries so boundary pixels are genuinely
/// ambiguous in feature space, the regime the smoothed targets address.
fn blur_image(image: &[f64], height: usize, width: usize) -> Vec<f64> {
    let mut out = vec![0.0; image.len()];
    for i in 0..height as isize {
        for j in 0..width as isize {
            for c in 0..3 {
                let mut acc = 0.0;
                for di in -1..=1 {
                    for dj in -1..=1 {
                        let si = (i + di).clamp(0, height as isize - 1) as usize;
                        let sj = (j + dj).clamp(0, width as isize - 1) as usize;
                        acc += image[(si * width + sj) * 3 + c];
                    }
                }
                out[(i as usize * width + j as usize) * 3 + c] = acc / 9.0;
            }
        }
    }
    out
}

/// Generates a segmentation task: each image places 1-2 rectangles of
/// distinct foreground classes on background, renders every pixel as its
/// class color, blurs the rendering across boundaries, and adds noise.
pub fn gen_seg(
    n_train: usize,
    n_val: usize,
    height: usize,
    width: usize,
    foreground_classes: usize,
    seed: u64,
) -> Result<SynthSegTask> {
    if n_train == 0 || n_val == 0 {
        return Err(Error::invalid("split sizes must be positive"));
    }
    if height < 4 || width < 4 {
        return Err(Error::invalid("segmentation maps must be at least 4x4"));
    }
    if foreground_classes == 0 {
        return Err(Error::invalid("need at least one foreground class"));
    }
    let channels = foreground_classes + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("valid std");
    // A distinctive color per class, background included.
    let colors: Vec<[f64; 3]> = (0..channels)
        .map(|_| {
            [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ]
        })
        .collect();
    // Rectangles span a quarter to a half of each axis so the 5x5 target
    // smoothing perturbs boundaries without erasing whole objects.
    let min_rect_h = (height / 4).max(2);
    let min_rect_w = (width / 4).max(2);
    let make_sample = |rng: &mut ChaCha8Rng| -> SegSample {
        let mut labels = vec![vec![0usize; width]; height];
        let n_rects = rng.gen_range(1..=2.min(foreground_classes));
        let mut classes: Vec<usize> = (1..channels).collect();
        classes.shuffle(rng);
        for &class in classes.iter().take(n_rects) {
            let rect_h = rng.gen_range(min_rect_h..=height / 2);
            let rect_w = rng.gen_range(min_rect_w..=width / 2);
            let top = rng.gen_range(0..=height - rect_h);
            let left = rng.gen_range(0..=width - rect_w);
            for row in labels.iter_mut().skip(top).take(rect_h) {
                for cell in row.iter_mut().skip(left).take(rect_w) {
                    *cell = class;
                }
            }
        }
        let mut clean = Vec::with_capacity(height * width * 3);
        for row in &labels {
            for &l in row {
                clean.extend_from_slice(&colors[l]);
            }
        }
        let mut image = blur_image(&clean, height, width);
        for v in &mut image {
            *v += 0.3 * normal.sample(rng);
        }
        SegSample { labels, image }
    };
    let train = (0..n_train).map(|_| make_sample(&mut rng)).collect();
    let val = (0..n_val).map(|_| make_sample(&mut rng)).collect();
    Ok(SynthSegTask {
        height,
        width,
        channels,
        train,
        val,
    })
}
