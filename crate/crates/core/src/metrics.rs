//! Evaluation metrics: MAE, cumulative score, the per-sample-sigma error
//! measure, pose MAE/accuracy, ranked average precision, and mean IU.
//!
//! Every metric reduces in a fixed order so repeated runs produce identical
//! bytes in reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Named scalar metrics with the batch size they were computed over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub count: usize,
    pub metrics: BTreeMap<String, f64>,
}

impl MetricReport {
    pub fn new(count: usize) -> Self {
        MetricReport {
            count,
            metrics: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied()
    }
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a == 0 {
        return Err(Error::invalid("metric input must be non-empty"));
    }
    if a != b {
        return Err(Error::dims(format!("{a} predictions but {b} ground-truth values")));
    }
    Ok(())
}

/// Mean absolute error.
pub fn mae(preds: &[f64], truths: &[f64]) -> Result<f64> {
    check_lengths(preds.len(), truths.len())?;
    Ok(preds
        .iter()
        .zip(truths)
        .map(|(&p, &t)| (p - t).abs())
        .sum::<f64>()
        / preds.len() as f64)
}

/// Cumulative score: percentage of samples with `|pred - truth| <= g`.
pub fn cs(preds: &[f64], truths: &[f64], g: f64) -> Result<f64> {
    check_lengths(preds.len(), truths.len())?;
    let hits = preds
        .iter()
        .zip(truths)
        .filter(|(&p, &t)| (p - t).abs() <= g)
        .count();
    Ok(hits as f64 / preds.len() as f64 * 100.0)
}

/// Mean of `1 - exp(-(pred - truth)^2 / (2 sigma_n^2))` over samples, each
/// sample weighted by its own annotation standard deviation.
pub fn eps_error(preds: &[f64], truths: &[f64], sigmas: &[f64]) -> Result<f64> {
    check_lengths(preds.len(), truths.len())?;
    check_lengths(preds.len(), sigmas.len())?;
    if sigmas.iter().any(|&s| s <= 0.0) {
        return Err(Error::invalid("per-sample sigma must be positive"));
    }
    Ok(preds
        .iter()
        .zip(truths)
        .zip(sigmas)
        .map(|((&p, &t), &s)| 1.0 - (-(p - t) * (p - t) / (2.0 * s * s)).exp())
        .sum::<f64>()
        / preds.len() as f64)
}

/// Pose errors: (pitch MAE, yaw MAE, joint MAE), where the joint error of a
/// sample is the Euclidean distance between predicted and true (pitch, yaw).
pub fn pose_mae(preds: &[(f64, f64)], truths: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    check_lengths(preds.len(), truths.len())?;
    let n = preds.len() as f64;
    let mut pitch = 0.0;
    let mut yaw = 0.0;
    let mut joint = 0.0;
    for (&(pp, py), &(tp, ty)) in preds.iter().zip(truths) {
        pitch += (pp - tp).abs();
        yaw += (py - ty).abs();
        joint += ((pp - tp).powi(2) + (py - ty).powi(2)).sqrt();
    }
    Ok((pitch / n, yaw / n, joint / n))
}

const POSE_MATCH_TOLERANCE: f64 = 1e-9;

/// Pose accuracies in percent: (pitch, yaw, joint), treating each grid value
/// (and each (pitch, yaw) pair) as a class.
pub fn pose_acc(preds: &[(f64, f64)], truths: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    check_lengths(preds.len(), truths.len())?;
    let n = preds.len() as f64;
    let mut pitch = 0usize;
    let mut yaw = 0usize;
    let mut joint = 0usize;
    for (&(pp, py), &(tp, ty)) in preds.iter().zip(truths) {
        let pitch_ok = (pp - tp).abs() <= POSE_MATCH_TOLERANCE;
        let yaw_ok = (py - ty).abs() <= POSE_MATCH_TOLERANCE;
        pitch += pitch_ok as usize;
        yaw += yaw_ok as usize;
        joint += (pitch_ok && yaw_ok) as usize;
    }
    Ok((
        pitch as f64 / n * 100.0,
        yaw as f64 / n * 100.0,
        joint as f64 / n * 100.0,
    ))
}

/// Ranked (information-retrieval) average precision: precision averaged at
/// each positive's rank, scores sorted descending with ties broken by the
/// lower original index.
pub fn average_precision(scores: &[f64], positives: &[bool]) -> Result<f64> {
    check_lengths(scores.len(), positives.len())?;
    let total_positives = positives.iter().filter(|&&p| p).count();
    if total_positives == 0 {
        return Err(Error::invalid("average precision needs at least one positive"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::invalid("scores must be finite"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("finite scores")
            .then(a.cmp(&b))
    });
    let mut hits = 0usize;
    let mut ap = 0.0;
    for (rank, &idx) in order.iter().enumerate() {
        if positives[idx] {
            hits += 1;
            ap += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(ap / total_positives as f64)
}

/// Mean AP over classes: `scores[sample][class]`, `positives[sample][class]`.
/// Classes with no positive sample are skipped; at least one class must have
/// a positive.
pub fn mean_ap(scores: &[Vec<f64>], positives: &[Vec<bool>]) -> Result<f64> {
    check_lengths(scores.len(), positives.len())?;
    let classes = scores[0].len();
    if classes == 0 || scores.iter().any(|s| s.len() != classes) {
        return Err(Error::dims("score rows must share a positive class count"));
    }
    if positives.iter().any(|p| p.len() != classes) {
        return Err(Error::dims("positive rows must match the class count"));
    }
    let mut total = 0.0;
    let mut counted = 0usize;
    for k in 0..classes {
        let class_scores: Vec<f64> = scores.iter().map(|s| s[k]).collect();
        let class_pos: Vec<bool> = positives.iter().map(|p| p[k]).collect();
        if class_pos.iter().any(|&p| p) {
            total += average_precision(&class_scores, &class_pos)?;
            counted += 1;
        }
    }
    if counted == 0 {
        return Err(Error::invalid("no class has a positive sample"));
    }
    Ok(total / counted as f64)
}

/// Mean intersection-over-union across the classes present in either map.
///
/// Labels must lie in `0..classes` (0 is the background class). Per-class
/// IU is `TP / (TP + FP + FN)`; the mean runs over classes that appear in
/// the ground truth or the prediction.
pub fn mean_iu(pred_map: &[Vec<usize>], truth_map: &[Vec<usize>], classes: usize) -> Result<f64> {
    check_lengths(pred_map.len(), truth_map.len())?;
    if classes == 0 {
        return Err(Error::invalid("class count must be positive"));
    }
    let mut tp = vec![0u64; classes];
    let mut fp = vec![0u64; classes];
    let mut fng = vec![0u64; classes];
    for (pr, tr) in pred_map.iter().zip(truth_map) {
        if pr.len() != tr.len() {
            return Err(Error::dims("prediction and truth maps differ in shape"));
        }
        for (&p, &t) in pr.iter().zip(tr) {
            if p >= classes || t >= classes {
                return Err(Error::invalid(format!(
                    "label out of range: pred {p}, truth {t}, classes {classes}"
                )));
            }
            if p == t {
                tp[p] += 1;
            } else {
                fp[p] += 1;
                fng[t] += 1;
            }
        }
    }
    let mut total = 0.0;
    let mut counted = 0usize;
    for k in 0..classes {
        let denom = tp[k] + fp[k] + fng[k];
        if denom > 0 {
            total += tp[k] as f64 / denom as f64;
            counted += 1;
        }
    }
    if counted == 0 {
        return Err(Error::invalid("maps contain no pixels"));
    }
    Ok(total / counted as f64)
}
