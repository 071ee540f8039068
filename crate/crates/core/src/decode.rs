//! Decoding predicted distributions into task outputs.
//!
//! A trained distribution head can be read three ways: the mode (max), the
//! expectation over label values, or the set of labels above a threshold.
//! Joint grids decode to (pitch, yaw) pairs. `OutputDecoder` bundles the
//! decode choice with its label space so trainers and evaluators can map raw
//! network outputs straight to task-space values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label_space::{JointLabelDistribution, LabelDistribution, LabelGrid2D, LabelSet1D};
use crate::loss::{denormalize_target, softmax};

/// Label value at the distribution's mode; ties break to the lower index.
pub fn decode_max(yhat: &LabelDistribution, set: &LabelSet1D) -> f64 {
    set.values()[yhat.argmax()]
}

/// Expectation of the label value under the distribution.
pub fn decode_expectation(yhat: &LabelDistribution, set: &LabelSet1D) -> f64 {
    yhat.mass()
        .iter()
        .zip(set.values())
        .map(|(&p, &l)| p * l)
        .sum()
}

/// All labels whose mass strictly exceeds `threshold`. May be empty.
pub fn decode_threshold(yhat: &LabelDistribution, set: &LabelSet1D, threshold: f64) -> Vec<f64> {
    yhat.mass()
        .iter()
        .zip(set.values())
        .filter(|(&p, _)| p > threshold)
        .map(|(_, &l)| l)
        .collect()
}

/// (pitch, yaw) at the joint mode; ties break to the lower flat index.
pub fn decode_joint_max(yhat: &JointLabelDistribution, grid: &LabelGrid2D) -> (f64, f64) {
    let (r, c) = yhat.argmax();
    (grid.pitch_values()[r], grid.yaw_values()[c])
}

/// Marginal expectations of pitch and yaw under the joint distribution.
pub fn decode_joint_expectation(yhat: &JointLabelDistribution, grid: &LabelGrid2D) -> (f64, f64) {
    let pitch = yhat
        .pitch_marginal()
        .iter()
        .zip(grid.pitch_values())
        .map(|(&p, &v)| p * v)
        .sum();
    let yaw = yhat
        .yaw_marginal()
        .iter()
        .zip(grid.yaw_values())
        .map(|(&p, &v)| p * v)
        .sum();
    (pitch, yaw)
}

/// A decoded prediction or a ground-truth value in task units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Scalar(f64),
    Pair(f64, f64),
}

impl Value {
    /// Absolute error: |difference| for scalars, Euclidean distance for pairs.
    pub fn abs_error(&self, other: &Value) -> f64 {
        match (self, other) {
            (Value::Scalar(a), Value::Scalar(b)) => (a - b).abs(),
            (Value::Pair(a1, a2), Value::Pair(b1, b2)) => {
                ((a1 - b1).powi(2) + (a2 - b2).powi(2)).sqrt()
            }
            _ => panic!("cannot compare a scalar with a pair"),
        }
    }
}

/// Maps raw network outputs (logits or a tanh scalar) to task-space values.
#[derive(Debug, Clone)]
pub enum OutputDecoder {
    /// Argmax label of the softmaxed logits.
    MaxLabel(LabelSet1D),
    /// Expected label value under the softmaxed logits.
    ExpectedLabel(LabelSet1D),
    /// Joint argmax cell of the softmaxed logits reshaped onto the grid.
    JointMax(LabelGrid2D),
    /// Marginal expectations of the softmaxed logits reshaped onto the grid.
    JointExpectation(LabelGrid2D),
    /// Tanh output mapped back from [-1, 1] to the original label range.
    Regression { min: f64, max: f64 },
}

impl OutputDecoder {
    pub fn name(&self) -> &'static str {
        match self {
            OutputDecoder::MaxLabel(_) | OutputDecoder::JointMax(_) => "max",
            OutputDecoder::ExpectedLabel(_) | OutputDecoder::JointExpectation(_) => "exp",
            OutputDecoder::Regression { .. } => "scalar",
        }
    }

    /// Width the network's output layer must have for this decoder.
    pub fn expected_width(&self) -> usize {
        match self {
            OutputDecoder::MaxLabel(set) | OutputDecoder::ExpectedLabel(set) => set.len(),
            OutputDecoder::JointMax(grid) | OutputDecoder::JointExpectation(grid) => {
                grid.cell_count()
            }
            OutputDecoder::Regression { .. } => 1,
        }
    }

    pub fn predict(&self, output: &[f64]) -> Result<Value> {
        if output.len() != self.expected_width() {
            return Err(Error::dims(format!(
                "decoder expects width {}, output has {}",
                self.expected_width(),
                output.len()
            )));
        }
        match self {
            OutputDecoder::MaxLabel(set) => Ok(Value::Scalar(decode_max(&softmax(output)?, set))),
            OutputDecoder::ExpectedLabel(set) => {
                Ok(Value::Scalar(decode_expectation(&softmax(output)?, set)))
            }
            OutputDecoder::JointMax(grid) => {
                let joint = reshape_joint(output, grid)?;
                Ok(Value::Pair(
                    decode_joint_max(&joint, grid).0,
                    decode_joint_max(&joint, grid).1,
                ))
            }
            OutputDecoder::JointExpectation(grid) => {
                let joint = reshape_joint(output, grid)?;
                let (p, y) = decode_joint_expectation(&joint, grid);
                Ok(Value::Pair(p, y))
            }
            OutputDecoder::Regression { min, max } => {
                Ok(Value::Scalar(denormalize_target(output[0], *min, *max)?))
            }
        }
    }
}

fn reshape_joint(logits: &[f64], grid: &LabelGrid2D) -> Result<JointLabelDistribution> {
    let (n1, n2) = grid.shape();
    let flat = softmax(logits)?;
    JointLabelDistribution::new(n1, n2, flat.mass().to_vec())
}
