//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with its measured margin (run with `--nocapture` to see them).
//!
//! Reference values are computed by independent brute-force routines inside
//! this file, never by the code under test.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dldl::construct::{
    gaussian_1d, gaussian_2d, gaussian_kernel, multilabel, smooth_segmentation, ClassLevel,
    MultiLabelLevels,
};
use dldl::experiment::{
    curves_to_csv, default_sweep_sigmas, rows_to_csv, run_comparison, sigma_sweep,
    CompareSettings, Method, Task,
};
use dldl::gradcheck::run_gradcheck;
use dldl::label_space::{LabelDistribution, LabelGrid2D, LabelSet1D, SpatialLabelField};
use dldl::loss::{kl_grad_logits, kl_loss, softmax};
use dldl::metrics;
use dldl::synth::gen_age_default;

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values[values.len() / 2]
}

/// Criterion 1: analytic gradients of every loss (KL, sign-corrected alpha
/// divergence, l2/l1/eps-insensitive) agree with central finite differences
/// at the logit/prediction level and through a 2-hidden-layer network, over
/// 100 seeded cases per loss, to max relative error 1e-4, in under 10 s.
#[test]
fn criterion_gradient_fidelity() {
    let start = Instant::now();
    let report = run_gradcheck(2024, 100, 100).expect("gradcheck runs");
    let elapsed = start.elapsed();
    for entry in &report.entries {
        assert!(
            entry.pass,
            "{} exceeded tolerance: max rel error {}",
            entry.name, entry.max_rel_error
        );
    }
    assert_eq!(report.entries.len(), 10);
    assert!(
        elapsed.as_secs_f64() < 10.0,
        "gradient fidelity took {elapsed:?}, budget 10 s"
    );
    println!(
        "ACCEPT gradient-fidelity: PASS (max rel err {:.3e}, {:?})",
        report.max_rel_error(),
        elapsed
    );
}

/// Criterion 2: 10^4 randomized constructor calls produce valid
/// distributions (mass sums to 1 within 1e-9, nonnegative), place the mode
/// at the nearest label, factorize the 2-D construction into its axis
/// marginals to 1e-12, and leave interior pixels of constant regions
/// one-hot after smoothing. Under 10 s.
#[test]
fn criterion_construction_invariants() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut calls = 0usize;

    // Gaussian on a 1-D label set (3000 calls).
    for _ in 0..3000 {
        let step = [0.5, 1.0, 2.0, 3.0][rng.gen_range(0..4)];
        let count = rng.gen_range(2..120) as f64;
        let min = rng.gen_range(-50.0..50.0);
        let set = LabelSet1D::range(min, min + count * step, step).unwrap();
        let mu = rng.gen_range(min - 10.0..min + count * step + 10.0);
        let sigma = rng.gen_range(0.0..6.0);
        let d = gaussian_1d(&set, mu, sigma).unwrap();
        check_valid_mass(d.mass());
        if mu >= set.min() && mu <= set.max() {
            assert_eq!(d.argmax(), set.nearest_index(mu), "mode must sit at the nearest label");
        }
        calls += 1;
    }

    // Joint Gaussian on a 2-D grid (3000 calls), with the outer-product
    // factorization checked against independently computed axis marginals.
    for _ in 0..3000 {
        let pitch = random_axis(&mut rng);
        let yaw = random_axis(&mut rng);
        let grid = LabelGrid2D::new(pitch.clone(), yaw.clone()).unwrap();
        let mu = (
            rng.gen_range(pitch[0]..*pitch.last().unwrap()),
            rng.gen_range(yaw[0]..*yaw.last().unwrap()),
        );
        let sigma = rng.gen_range(1.0..30.0);
        let joint = gaussian_2d(&grid, mu, sigma).unwrap();
        check_valid_mass(joint.flat());
        // Independent route: normalized 1-D densities on each axis.
        let px = normalized_gaussian(&pitch, mu.0, sigma);
        let py = normalized_gaussian(&yaw, mu.1, sigma);
        for (r, &p) in px.iter().enumerate() {
            for (c, &q) in py.iter().enumerate() {
                assert!(
                    (joint.get(r, c) - p * q).abs() <= 1e-12,
                    "outer-product factorization violated at ({r}, {c})"
                );
            }
        }
        calls += 1;
    }

    // Three-level multi-label construction (3000 calls).
    for _ in 0..3000 {
        let classes = rng.gen_range(2..30);
        let levels: Vec<ClassLevel> = (0..classes)
            .map(|_| match rng.gen_range(0..3) {
                0 => ClassLevel::Positive,
                1 => ClassLevel::Difficult,
                _ => ClassLevel::Negative,
            })
            .collect();
        let mut levels = levels;
        levels[rng.gen_range(0..classes)] = ClassLevel::Positive;
        let levels = MultiLabelLevels::new(levels).unwrap();
        let p_n = rng.gen_range(0.0..0.2);
        let p_d = p_n + rng.gen_range(0.05..0.5);
        let p_p = p_d + rng.gen_range(0.05..0.5);
        let eps = rng.gen_range(0.0..0.2);
        let d = multilabel(&levels, p_p, p_d, p_n, eps).unwrap();
        check_valid_mass(d.mass());
        calls += 1;
    }

    // Segmentation smoothing (1000 calls): the smoothed field stays a field
    // of distributions and constant-region interiors keep their one-hot.
    for _ in 0..1000 {
        let h = rng.gen_range(8..14);
        let w = rng.gen_range(8..14);
        let classes = rng.gen_range(2..5);
        let split = rng.gen_range(3..w - 3);
        let labels: Vec<Vec<usize>> = (0..h)
            .map(|_| {
                (0..w)
                    .map(|j| if j < split { 0 } else { classes - 1 })
                    .collect()
            })
            .collect();
        let field = SpatialLabelField::from_label_map(&labels, classes).unwrap();
        let size = if rng.gen_bool(0.5) { 3 } else { 5 };
        let kernel = gaussian_kernel(size, rng.gen_range(0.5..2.0)).unwrap();
        let smoothed = smooth_segmentation(&field, &kernel).unwrap();
        let radius = size / 2;
        for i in 0..h {
            for j in 0..w {
                check_valid_mass(smoothed.pixel(i, j));
                let interior = j + radius < split || j >= split + radius;
                if interior {
                    let k = labels[i][j];
                    assert_eq!(
                        smoothed.pixel(i, j)[k],
                        1.0,
                        "interior pixel ({i}, {j}) must stay one-hot"
                    );
                }
            }
        }
        calls += 1;
    }

    let elapsed = start.elapsed();
    assert_eq!(calls, 10_000);
    assert!(
        elapsed.as_secs_f64() < 10.0,
        "construction invariants took {elapsed:?}, budget 10 s"
    );
    println!("ACCEPT construction-invariants: PASS ({calls} calls, {elapsed:?})");
}

fn check_valid_mass(mass: &[f64]) {
    assert!(mass.iter().all(|&m| m >= 0.0), "mass must be nonnegative");
    let total: f64 = mass.iter().sum();
    assert!((total - 1.0).abs() <= 1e-9, "mass sums to {total}");
}

fn random_axis(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let len = rng.gen_range(3..15);
    let start = rng.gen_range(-90.0..0.0);
    let mut axis = vec![start];
    for _ in 1..len {
        let last = *axis.last().unwrap();
        axis.push(last + rng.gen_range(1.0..20.0));
    }
    axis
}

fn normalized_gaussian(axis: &[f64], mu: f64, sigma: f64) -> Vec<f64> {
    let weights: Vec<f64> = axis
        .iter()
        .map(|&l| (-(l - mu) * (l - mu) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Criterion 3: on the default age fixture over 5 seeds, the
/// distribution-learning method (KL, expectation decode) reaches a median
/// validation MAE no worse than softmax classification (max decode), and
/// its median epoch-1 training MAE is strictly lower. Under 2 minutes.
#[test]
fn criterion_distribution_beats_classification() {
    let start = Instant::now();
    let mut dldl_val = Vec::new();
    let mut cc_val = Vec::new();
    let mut dldl_epoch1 = Vec::new();
    let mut cc_epoch1 = Vec::new();
    for seed in [1u64, 2, 3, 4, 5] {
        let task = Task::Age(gen_age_default(seed).unwrap());
        let settings = CompareSettings::desk_default(seed);
        let report =
            run_comparison(&task, &[Method::Dldl, Method::CConvNet], &settings).unwrap();
        dldl_val.push(report.row("dldl", "exp").unwrap().metrics.get("mae").unwrap());
        cc_val.push(report.row("c-convnet", "max").unwrap().metrics.get("mae").unwrap());
        dldl_epoch1.push(
            report.curve("dldl").unwrap().history.epochs[0]
                .train_mae
                .unwrap(),
        );
        cc_epoch1.push(
            report.curve("c-convnet").unwrap().history.epochs[0]
                .train_mae
                .unwrap(),
        );
    }
    let elapsed = start.elapsed();
    let dldl_med = median(&mut dldl_val);
    let cc_med = median(&mut cc_val);
    let dldl_e1 = median(&mut dldl_epoch1);
    let cc_e1 = median(&mut cc_epoch1);
    assert!(
        dldl_med <= cc_med,
        "median val MAE: distribution {dldl_med} vs classification {cc_med}"
    );
    assert!(
        dldl_e1 < cc_e1,
        "median epoch-1 train MAE: distribution {dldl_e1} vs classification {cc_e1}"
    );
    assert!(
        elapsed.as_secs_f64() < 120.0,
        "comparison took {elapsed:?}, budget 2 min"
    );
    println!(
        "ACCEPT distribution-beats-classification: PASS (val {dldl_med:.3} <= {cc_med:.3}, epoch-1 {dldl_e1:.3} < {cc_e1:.3}, {elapsed:?})"
    );
}

/// Criterion 4: the target-sigma sweep over {0, 0.5, ..., 3} (quantization
/// step 1) is V-shaped in the median over 3 seeds: MAE at sigma = step is
/// no worse than at sigma = 0 and at sigma = 3 steps. Under 3 minutes.
#[test]
fn criterion_sigma_sweep_v_shape() {
    let start = Instant::now();
    let sigmas = default_sweep_sigmas(1.0);
    let step_idx = sigmas.iter().position(|&s| s == 1.0).unwrap();
    let mut at_zero = Vec::new();
    let mut at_step = Vec::new();
    let mut at_triple = Vec::new();
    for seed in [1u64, 2, 3] {
        let task = gen_age_default(seed).unwrap();
        let settings = CompareSettings::desk_default(seed);
        let curve = sigma_sweep(&task, &sigmas, &settings).unwrap();
        assert_eq!(curve.points.len(), sigmas.len());
        at_zero.push(curve.points[0].val_mae);
        at_step.push(curve.points[step_idx].val_mae);
        at_triple.push(curve.points.last().unwrap().val_mae);
    }
    let elapsed = start.elapsed();
    let zero = median(&mut at_zero);
    let step = median(&mut at_step);
    let triple = median(&mut at_triple);
    assert!(
        step <= zero,
        "median MAE at sigma=step ({step}) must not exceed sigma=0 ({zero})"
    );
    assert!(
        step <= triple,
        "median MAE at sigma=step ({step}) must not exceed sigma=3*step ({triple})"
    );
    assert!(
        elapsed.as_secs_f64() < 180.0,
        "sweep took {elapsed:?}, budget 3 min"
    );
    println!(
        "ACCEPT sigma-sweep-v-shape: PASS ({zero:.3} >= {step:.3} <= {triple:.3}, {elapsed:?})"
    );
}

/// Criterion 5: with one-hot targets the KL objective collapses exactly to
/// softmax classification: identical losses and logit gradients, computed
/// here through an independent cross-entropy formula.
#[test]
fn criterion_one_hot_reduction() {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    for _ in 0..100 {
        let classes = rng.gen_range(2..40);
        let hot = rng.gen_range(0..classes);
        let logits: Vec<f64> = (0..classes).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let target = LabelDistribution::one_hot(classes, hot).unwrap();
        let yhat = softmax(&logits).unwrap();

        // Independent softmax classification: loss -ln yhat_l, gradient
        // yhat - e_l, computed without the loss module.
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        let reference_loss = -(exps[hot] / total).ln();
        let reference_grad: Vec<f64> = exps
            .iter()
            .enumerate()
            .map(|(j, &e)| e / total - if j == hot { 1.0 } else { 0.0 })
            .collect();

        let loss = kl_loss(&target, &yhat).unwrap();
        let grad = kl_grad_logits(&target, &yhat).unwrap();
        assert_eq!(loss, reference_loss, "losses must match bit for bit");
        assert_eq!(grad, reference_grad, "gradients must match bit for bit");
    }
    println!("ACCEPT one-hot-reduction: PASS (100 random batches, exact equality)");
}

/// Criterion 6: every metric matches a brute-force reference on 100 random
/// small batches to 1e-12, and the per-sample-sigma error at an error of
/// exactly one sigma equals 1 - exp(-1/2) to 1e-12.
#[test]
fn criterion_metric_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    for _ in 0..100 {
        let n = rng.gen_range(1..20);
        let preds: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..30.0)).collect();
        let truths: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..30.0)).collect();
        let sigmas: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..4.0)).collect();
        let g = rng.gen_range(0.0..10.0);

        let brute_mae = preds
            .iter()
            .zip(&truths)
            .map(|(&p, &t)| (p - t).abs())
            .sum::<f64>()
            / n as f64;
        assert!((metrics::mae(&preds, &truths).unwrap() - brute_mae).abs() <= 1e-12);

        let brute_cs = 100.0
            * preds
                .iter()
                .zip(&truths)
                .filter(|(&p, &t)| (p - t).abs() <= g)
                .count() as f64
            / n as f64;
        assert!((metrics::cs(&preds, &truths, g).unwrap() - brute_cs).abs() <= 1e-12);

        let brute_eps = preds
            .iter()
            .zip(&truths)
            .zip(&sigmas)
            .map(|((&p, &t), &s)| 1.0 - (-((p - t) * (p - t)) / (2.0 * s * s)).exp())
            .sum::<f64>()
            / n as f64;
        assert!((metrics::eps_error(&preds, &truths, &sigmas).unwrap() - brute_eps).abs() <= 1e-12);

        let pose_preds: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.gen_range(-90.0..90.0), rng.gen_range(-90.0..90.0)))
            .collect();
        let pose_truths: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.gen_range(-90.0..90.0), rng.gen_range(-90.0..90.0)))
            .collect();
        let (pm, ym, jm) = metrics::pose_mae(&pose_preds, &pose_truths).unwrap();
        let brute_pitch = pose_preds
            .iter()
            .zip(&pose_truths)
            .map(|(a, b)| (a.0 - b.0).abs())
            .sum::<f64>()
            / n as f64;
        let brute_yaw = pose_preds
            .iter()
            .zip(&pose_truths)
            .map(|(a, b)| (a.1 - b.1).abs())
            .sum::<f64>()
            / n as f64;
        let brute_joint = pose_preds
            .iter()
            .zip(&pose_truths)
            .map(|(a, b)| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt())
            .sum::<f64>()
            / n as f64;
        assert!((pm - brute_pitch).abs() <= 1e-12);
        assert!((ym - brute_yaw).abs() <= 1e-12);
        assert!((jm - brute_joint).abs() <= 1e-12);

        // Ranked average precision against a quadratic re-scan: for every
        // positive, count better-or-equal-scored items (ties resolved by
        // index) to find its rank, then take precision at that rank.
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let mut positives: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
        positives[rng.gen_range(0..n)] = true;
        let brute_ap = {
            let total_pos = positives.iter().filter(|&&p| p).count() as f64;
            let mut sum = 0.0;
            for i in 0..n {
                if !positives[i] {
                    continue;
                }
                let rank = (0..n)
                    .filter(|&j| scores[j] > scores[i] || (scores[j] == scores[i] && j <= i))
                    .count();
                let hits = (0..n)
                    .filter(|&j| {
                        positives[j]
                            && (scores[j] > scores[i] || (scores[j] == scores[i] && j <= i))
                    })
                    .count();
                sum += hits as f64 / rank as f64;
            }
            sum / total_pos
        };
        assert!((metrics::average_precision(&scores, &positives).unwrap() - brute_ap).abs() <= 1e-12);

        // Mean IU against naive per-class pixel scans.
        let h = rng.gen_range(2..8);
        let w = rng.gen_range(2..8);
        let classes = rng.gen_range(2..5);
        let pred_map: Vec<Vec<usize>> = (0..h)
            .map(|_| (0..w).map(|_| rng.gen_range(0..classes)).collect())
            .collect();
        let truth_map: Vec<Vec<usize>> = (0..h)
            .map(|_| (0..w).map(|_| rng.gen_range(0..classes)).collect())
            .collect();
        let brute_iu = {
            let mut total = 0.0;
            let mut counted = 0;
            for k in 0..classes {
                let mut tp = 0.0;
                let mut fp = 0.0;
                let mut fn_ = 0.0;
                for i in 0..h {
                    for j in 0..w {
                        let p = pred_map[i][j] == k;
                        let t = truth_map[i][j] == k;
                        if p && t {
                            tp += 1.0;
                        } else if p {
                            fp += 1.0;
                        } else if t {
                            fn_ += 1.0;
                        }
                    }
                }
                if tp + fp + fn_ > 0.0 {
                    total += tp / (tp + fp + fn_);
                    counted += 1;
                }
            }
            total / counted as f64
        };
        assert!((metrics::mean_iu(&pred_map, &truth_map, classes).unwrap() - brute_iu).abs() <= 1e-12);
    }

    // The closed-form point of the per-sample-sigma error measure.
    let v = metrics::eps_error(&[27.0], &[25.0], &[2.0]).unwrap();
    assert!((v - (1.0 - (-0.5f64).exp())).abs() <= 1e-12);
    println!("ACCEPT metric-oracles: PASS (100 batches per metric to 1e-12)");
}

/// Criterion 7: running the comparison pipeline twice with the same
/// configuration yields byte-identical reports (JSON and CSV).
#[test]
fn criterion_report_determinism() {
    let task = Task::Age(gen_age_default(11).unwrap());
    let mut settings = CompareSettings::desk_default(11);
    settings.train.epochs = 10;
    let methods = [Method::Dldl, Method::CConvNet, Method::RConvNetL1];
    let a = run_comparison(&task, &methods, &settings).unwrap();
    let b = run_comparison(&task, &methods, &settings).unwrap();
    assert_eq!(a.to_json().unwrap().into_bytes(), b.to_json().unwrap().into_bytes());
    assert_eq!(rows_to_csv(&a).into_bytes(), rows_to_csv(&b).into_bytes());
    assert_eq!(curves_to_csv(&a).into_bytes(), curves_to_csv(&b).into_bytes());
    println!("ACCEPT report-determinism: PASS (byte-identical JSON and CSV)");
}
