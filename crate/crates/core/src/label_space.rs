//! Ordered label sets and the probability-mass containers built over them.
//!
//! A label set quantizes a continuous target (years, degrees) into an ordered
//! grid; a label distribution assigns probability mass to every grid point.
//! All containers validate their invariants at construction and are immutable
//! afterwards.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for "mass sums to one" checks on 64-bit arithmetic.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// A uniformly spaced, strictly increasing set of real label values.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet1D {
    values: Vec<f64>,
    step: f64,
}

impl LabelSet1D {
    /// Builds the inclusive quantized set `{min, min+step, ..., max}`.
    ///
    /// `max - min` must be an integer multiple of `step` (within 1e-9) so the
    /// endpoint lands exactly on the grid.
    pub fn range(min: f64, max: f64, step: f64) -> Result<Self> {
        if !min.is_finite() || !max.is_finite() || !step.is_finite() {
            return Err(Error::invalid("label range bounds must be finite"));
        }
        if step <= 0.0 {
            return Err(Error::invalid(format!("step must be positive, got {step}")));
        }
        if max <= min {
            return Err(Error::invalid(format!(
                "max must exceed min, got min={min} max={max}"
            )));
        }
        let span = (max - min) / step;
        let count = span.round();
        if (span - count).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "range ({min}, {max}) is not divisible by step {step}"
            )));
        }
        let count = count as usize;
        let values = (0..=count).map(|i| min + i as f64 * step).collect();
        Ok(LabelSet1D { values, step })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of labels, `C`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: C >= 2
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Index of the label closest to `value`.
    ///
    /// Ties break toward the lower index; values outside the range clamp to
    /// the nearest endpoint.
    pub fn nearest_index(&self, value: f64) -> usize {
        let mut best = 0;
        let mut best_dist = (self.values[0] - value).abs();
        for (i, &l) in self.values.iter().enumerate().skip(1) {
            let d = (l - value).abs();
            if d < best_dist {
                best = i;
                best_dist = d;
            }
        }
        best
    }
}

// Label sets serialize as their defining triple, not the expanded grid.
#[derive(Serialize, Deserialize)]
struct LabelSet1DRepr {
    min: f64,
    max: f64,
    step: f64,
}

impl Serialize for LabelSet1D {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        LabelSet1DRepr {
            min: self.min(),
            max: self.max(),
            step: self.step,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LabelSet1D {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = LabelSet1DRepr::deserialize(deserializer)?;
        LabelSet1D::range(repr.min, repr.max, repr.step).map_err(serde::de::Error::custom)
    }
}

/// A two-axis label grid (pitch rows x yaw columns), axes strictly increasing.
///
/// Axes need not be uniformly spaced; pose datasets often are not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelGrid2D {
    pitch_values: Vec<f64>,
    yaw_values: Vec<f64>,
}

impl LabelGrid2D {
    pub fn new(pitch_values: Vec<f64>, yaw_values: Vec<f64>) -> Result<Self> {
        for (name, axis) in [("pitch", &pitch_values), ("yaw", &yaw_values)] {
            if axis.len() < 2 {
                return Err(Error::invalid(format!("{name} axis needs at least 2 values")));
            }
            if axis.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("{name} axis contains non-finite value")));
            }
            if axis.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::invalid(format!("{name} axis must be strictly increasing")));
            }
        }
        Ok(LabelGrid2D {
            pitch_values,
            yaw_values,
        })
    }

    /// Uniform grid on both axes with the same bounds and step.
    pub fn square_range(min: f64, max: f64, step: f64) -> Result<Self> {
        let axis = LabelSet1D::range(min, max, step)?;
        LabelGrid2D::new(axis.values().to_vec(), axis.values().to_vec())
    }

    pub fn pitch_values(&self) -> &[f64] {
        &self.pitch_values
    }

    pub fn yaw_values(&self) -> &[f64] {
        &self.yaw_values
    }

    /// (n1, n2) = (pitch count, yaw count).
    pub fn shape(&self) -> (usize, usize) {
        (self.pitch_values.len(), self.yaw_values.len())
    }

    pub fn cell_count(&self) -> usize {
        self.pitch_values.len() * self.yaw_values.len()
    }
}

/// Probability mass over a 1-D label set: every entry nonnegative, total 1.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelDistribution {
    mass: Vec<f64>,
}

impl LabelDistribution {
    pub fn new(mass: Vec<f64>) -> Result<Self> {
        validate_mass(&mass)?;
        Ok(LabelDistribution { mass })
    }

    /// Normalizes arbitrary nonnegative weights into a distribution.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !total.is_finite() || total <= 0.0 {
            return Err(Error::invalid(format!(
                "weights must have a positive finite sum, got {total}"
            )));
        }
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::invalid("weights must be nonnegative and finite"));
        }
        let mass = weights.into_iter().map(|w| w / total).collect();
        Ok(LabelDistribution { mass })
    }

    /// One-hot distribution of length `len` with all mass at `index`.
    pub fn one_hot(len: usize, index: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::invalid("distribution length must be positive"));
        }
        if index >= len {
            return Err(Error::invalid(format!(
                "one-hot index {index} out of range for length {len}"
            )));
        }
        let mut mass = vec![0.0; len];
        mass[index] = 1.0;
        Ok(LabelDistribution { mass })
    }

    pub fn uniform(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::invalid("distribution length must be positive"));
        }
        Ok(LabelDistribution {
            mass: vec![1.0 / len as f64; len],
        })
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    /// Index of the largest entry; ties break toward the lower index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &m) in self.mass.iter().enumerate().skip(1) {
            if m > self.mass[best] {
                best = i;
            }
        }
        best
    }
}

impl Serialize for LabelDistribution {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.mass.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LabelDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let mass = Vec::<f64>::deserialize(deserializer)?;
        LabelDistribution::new(mass).map_err(serde::de::Error::custom)
    }
}

/// Joint probability mass over a 2-D grid, stored row-major with pitch rows.
#[derive(Debug, Clone, PartialEq)]
pub struct JointLabelDistribution {
    rows: usize,
    cols: usize,
    mass: Vec<f64>,
}

impl JointLabelDistribution {
    pub fn new(rows: usize, cols: usize, mass: Vec<f64>) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(Error::invalid("joint distribution needs a grid of at least 2x2"));
        }
        if mass.len() != rows * cols {
            return Err(Error::dims(format!(
                "joint mass has {} entries, expected {}x{}",
                mass.len(),
                rows,
                cols
            )));
        }
        validate_mass(&mass)?;
        Ok(JointLabelDistribution { rows, cols, mass })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.mass[row * self.cols + col]
    }

    /// Row-major flat view; a valid 1-D distribution of length rows*cols.
    pub fn flat(&self) -> &[f64] {
        &self.mass
    }

    /// Converts to a 1-D distribution over flattened cells.
    pub fn flatten(&self) -> LabelDistribution {
        LabelDistribution {
            mass: self.mass.clone(),
        }
    }

    /// Flat index of the largest entry, ties toward the lower index.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &m) in self.mass.iter().enumerate().skip(1) {
            if m > self.mass[best] {
                best = i;
            }
        }
        (best / self.cols, best % self.cols)
    }

    /// Marginal mass per pitch row.
    pub fn pitch_marginal(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|r| self.mass[r * self.cols..(r + 1) * self.cols].iter().sum())
            .collect()
    }

    /// Marginal mass per yaw column.
    pub fn yaw_marginal(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self.get(r, c)).sum())
            .collect()
    }
}

impl Serialize for JointLabelDistribution {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let matrix: Vec<&[f64]> = (0..self.rows)
            .map(|r| &self.mass[r * self.cols..(r + 1) * self.cols])
            .collect();
        matrix.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for JointLabelDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let matrix = Vec::<Vec<f64>>::deserialize(deserializer)?;
        let rows = matrix.len();
        let cols = matrix.first().map_or(0, Vec::len);
        if matrix.iter().any(|row| row.len() != cols) {
            return Err(serde::de::Error::custom("ragged joint distribution matrix"));
        }
        let mass: Vec<f64> = matrix.into_iter().flatten().collect();
        JointLabelDistribution::new(rows, cols, mass).map_err(serde::de::Error::custom)
    }
}

/// Per-pixel label distributions for a segmentation target.
///
/// `classes` counts the background as class 0, so a task with C foreground
/// categories stores C+1 channels. Pixel (i, j) holds a distribution over
/// classes at flat offset `(i * width + j) * classes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialLabelField {
    height: usize,
    width: usize,
    classes: usize,
    mass: Vec<f64>,
}

impl SpatialLabelField {
    pub fn new(height: usize, width: usize, classes: usize, mass: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || classes == 0 {
            return Err(Error::invalid("field dimensions must be positive"));
        }
        if mass.len() != height * width * classes {
            return Err(Error::dims(format!(
                "field mass has {} entries, expected {}x{}x{}",
                mass.len(),
                height,
                width,
                classes
            )));
        }
        for i in 0..height {
            for j in 0..width {
                let base = (i * width + j) * classes;
                validate_mass(&mass[base..base + classes]).map_err(|e| {
                    Error::invalid(format!("pixel ({i}, {j}): {e}"))
                })?;
            }
        }
        Ok(SpatialLabelField {
            height,
            width,
            classes,
            mass,
        })
    }

    /// Builds a one-hot field from a label map (`labels[i][j] in 0..classes`).
    pub fn from_label_map(labels: &[Vec<usize>], classes: usize) -> Result<Self> {
        let height = labels.len();
        if height == 0 {
            return Err(Error::invalid("label map must be non-empty"));
        }
        let width = labels[0].len();
        if width == 0 || labels.iter().any(|row| row.len() != width) {
            return Err(Error::invalid("label map rows must be non-empty and equal length"));
        }
        let mut mass = vec![0.0; height * width * classes];
        for (i, row) in labels.iter().enumerate() {
            for (j, &k) in row.iter().enumerate() {
                if k >= classes {
                    return Err(Error::invalid(format!(
                        "label {k} at ({i}, {j}) out of range for {classes} classes"
                    )));
                }
                mass[(i * width + j) * classes + k] = 1.0;
            }
        }
        Ok(SpatialLabelField {
            height,
            width,
            classes,
            mass,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    /// The distribution at pixel (i, j).
    pub fn pixel(&self, i: usize, j: usize) -> &[f64] {
        let base = (i * self.width + j) * self.classes;
        &self.mass[base..base + self.classes]
    }

    /// Per-pixel argmax label map (ties toward the lower class index).
    pub fn label_map(&self) -> Vec<Vec<usize>> {
        (0..self.height)
            .map(|i| {
                (0..self.width)
                    .map(|j| {
                        let p = self.pixel(i, j);
                        let mut best = 0;
                        for (k, &m) in p.iter().enumerate().skip(1) {
                            if m > p[best] {
                                best = k;
                            }
                        }
                        best
                    })
                    .collect()
            })
            .collect()
    }

    pub(crate) fn from_raw_unchecked(
        height: usize,
        width: usize,
        classes: usize,
        mass: Vec<f64>,
    ) -> Self {
        SpatialLabelField {
            height,
            width,
            classes,
            mass,
        }
    }
}

fn validate_mass(mass: &[f64]) -> Result<()> {
    if mass.is_empty() {
        return Err(Error::invalid("distribution must be non-empty"));
    }
    let mut total = 0.0;
    for (i, &m) in mass.iter().enumerate() {
        if !m.is_finite() {
            return Err(Error::invalid(format!("mass[{i}] is not finite")));
        }
        if m < 0.0 {
            return Err(Error::invalid(format!("mass[{i}] = {m} is negative")));
        }
        total += m;
    }
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::invalid(format!(
            "mass sums to {total}, expected 1 within {MASS_TOLERANCE}"
        )));
    }
    Ok(())
}

/// Convenience wrapper mirroring `LabelSet1D::range`.
pub fn make_range(min: f64, max: f64, step: f64) -> Result<LabelSet1D> {
    LabelSet1D::range(min, max, step)
}
