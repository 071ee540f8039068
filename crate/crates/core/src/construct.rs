//! Ground-truth label distribution construction.
//!
//! Four constructions cover the four task families: a normal density sampled
//! on a 1-D label set (age), a bivariate normal with diagonal covariance on a
//! 2-D grid (pose), a three-level weighting for multi-label annotations, and
//! Gaussian smoothing of one-hot pixel maps for segmentation. One-hot and
//! label-smoothing targets for the classification baselines live here too.

use crate::error::{Error, Result};
use crate::label_space::{
    JointLabelDistribution, LabelDistribution, LabelGrid2D, LabelSet1D, SpatialLabelField,
};

/// Annotation level of a class in a multi-label image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassLevel {
    Positive,
    Difficult,
    Negative,
}

/// Per-class annotation levels for one multi-label sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiLabelLevels {
    levels: Vec<ClassLevel>,
}

impl MultiLabelLevels {
    /// Requires at least one `Positive` class.
    pub fn new(levels: Vec<ClassLevel>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::invalid("level vector must be non-empty"));
        }
        if !levels.contains(&ClassLevel::Positive) {
            return Err(Error::invalid("at least one class must be Positive"));
        }
        Ok(MultiLabelLevels { levels })
    }

    /// Builds levels from positive/difficult class index lists.
    pub fn from_index_sets(classes: usize, positive: &[usize], difficult: &[usize]) -> Result<Self> {
        let mut levels = vec![ClassLevel::Negative; classes];
        for &k in difficult {
            if k >= classes {
                return Err(Error::invalid(format!("difficult index {k} out of range")));
            }
            levels[k] = ClassLevel::Difficult;
        }
        for &k in positive {
            if k >= classes {
                return Err(Error::invalid(format!("positive index {k} out of range")));
            }
            levels[k] = ClassLevel::Positive;
        }
        MultiLabelLevels::new(levels)
    }

    pub fn levels(&self) -> &[ClassLevel] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

/// A normalized nonnegative K x K convolution kernel with padding and stride.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingKernel {
    size: usize,
    weights: Vec<f64>,
    padding: usize,
    stride: usize,
}

impl SmoothingKernel {
    pub fn new(size: usize, weights: Vec<f64>, padding: usize, stride: usize) -> Result<Self> {
        if size % 2 == 0 || size == 0 {
            return Err(Error::invalid(format!("kernel size must be odd, got {size}")));
        }
        if weights.len() != size * size {
            return Err(Error::dims(format!(
                "kernel has {} weights, expected {}",
                weights.len(),
                size * size
            )));
        }
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::invalid("kernel weights must be nonnegative and finite"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("kernel weights sum to {total}, expected 1")));
        }
        if stride == 0 {
            return Err(Error::invalid("stride must be positive"));
        }
        Ok(SmoothingKernel {
            size,
            weights,
            padding,
            stride,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.size + col]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn padding(&self) -> usize {
        self.padding
    }

    pub fn stride(&self) -> usize {
        self.stride
    }
}

/// Samples the normal density at every label and normalizes to total mass 1.
///
/// `sigma = 0` degenerates to a one-hot at the label nearest `mu`.
pub fn gaussian_1d(set: &LabelSet1D, mu: f64, sigma: f64) -> Result<LabelDistribution> {
    if !mu.is_finite() || !sigma.is_finite() {
        return Err(Error::invalid("mu and sigma must be finite"));
    }
    if sigma < 0.0 {
        return Err(Error::invalid(format!("sigma must be nonnegative, got {sigma}")));
    }
    if sigma == 0.0 {
        return one_hot(set, mu);
    }
    // The 1/(sqrt(2*pi)*sigma) factor cancels in the normalization; shifting
    // by the smallest squared distance keeps distant mu from underflowing
    // every weight to zero.
    let two_sigma_sq = 2.0 * sigma * sigma;
    let min_sq = set
        .values()
        .iter()
        .map(|&l| (l - mu) * (l - mu))
        .fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = set
        .values()
        .iter()
        .map(|&l| (-((l - mu) * (l - mu) - min_sq) / two_sigma_sq).exp())
        .collect();
    LabelDistribution::from_weights(weights)
}

/// Samples a bivariate normal with covariance `sigma^2 * I` on the grid and
/// normalizes. Equivalent to the renormalized outer product of the two axis
/// constructions.
pub fn gaussian_2d(grid: &LabelGrid2D, mu: (f64, f64), sigma: f64) -> Result<JointLabelDistribution> {
    if !mu.0.is_finite() || !mu.1.is_finite() || !sigma.is_finite() {
        return Err(Error::invalid("mu and sigma must be finite"));
    }
    if sigma <= 0.0 {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    let two_sigma_sq = 2.0 * sigma * sigma;
    let (n1, n2) = grid.shape();
    let mut sq = Vec::with_capacity(n1 * n2);
    let mut min_sq = f64::INFINITY;
    for &p in grid.pitch_values() {
        for &y in grid.yaw_values() {
            let d = (p - mu.0) * (p - mu.0) + (y - mu.1) * (y - mu.1);
            min_sq = min_sq.min(d);
            sq.push(d);
        }
    }
    let weights: Vec<f64> = sq.into_iter().map(|d| (-(d - min_sq) / two_sigma_sq).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mass = weights.into_iter().map(|w| w / total).collect();
    JointLabelDistribution::new(n1, n2, mass)
}

/// Three-level multi-label construction: per-class weights by level,
/// normalized, then mixed with a uniform `epsilon / C` component and
/// renormalized by `1 + epsilon`.
pub fn multilabel(
    levels: &MultiLabelLevels,
    p_positive: f64,
    p_difficult: f64,
    p_negative: f64,
    epsilon: f64,
) -> Result<LabelDistribution> {
    if !(p_positive > p_difficult && p_difficult > p_negative && p_negative >= 0.0) {
        return Err(Error::invalid(format!(
            "level weights must satisfy pP > pD > pN >= 0, got {p_positive} {p_difficult} {p_negative}"
        )));
    }
    if epsilon < 0.0 || !epsilon.is_finite() {
        return Err(Error::invalid(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    let c = levels.len() as f64;
    let weights: Vec<f64> = levels
        .levels()
        .iter()
        .map(|l| match l {
            ClassLevel::Positive => p_positive,
            ClassLevel::Difficult => p_difficult,
            ClassLevel::Negative => p_negative,
        })
        .collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::invalid("level weights normalize to zero"));
    }
    let mass = weights
        .into_iter()
        .map(|w| (w / total + epsilon / c) / (1.0 + epsilon))
        .collect();
    LabelDistribution::new(mass)
}

/// One-hot target at the label nearest `value`.
pub fn one_hot(set: &LabelSet1D, value: f64) -> Result<LabelDistribution> {
    LabelDistribution::one_hot(set.len(), set.nearest_index(value))
}

/// Mixes a target with the uniform distribution: `(1-eps) * y + eps / C`.
pub fn label_smoothing(target: &LabelDistribution, epsilon: f64) -> Result<LabelDistribution> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::invalid(format!("epsilon must lie in [0, 1], got {epsilon}")));
    }
    let c = target.len() as f64;
    let mass = target
        .mass()
        .iter()
        .map(|&y| (1.0 - epsilon) * y + epsilon / c)
        .collect();
    LabelDistribution::new(mass)
}

/// Isotropic Gaussian kernel sampled at integer offsets, normalized to sum 1,
/// with shape-preserving padding `(K-1)/2` and stride 1.
pub fn gaussian_kernel(size: usize, kernel_sigma: f64) -> Result<SmoothingKernel> {
    if size % 2 == 0 || size == 0 {
        return Err(Error::invalid(format!("kernel size must be odd, got {size}")));
    }
    if kernel_sigma <= 0.0 || !kernel_sigma.is_finite() {
        return Err(Error::invalid(format!("kernel sigma must be positive, got {kernel_sigma}")));
    }
    let half = (size / 2) as isize;
    let two_sigma_sq = 2.0 * kernel_sigma * kernel_sigma;
    let mut weights = Vec::with_capacity(size * size);
    for di in -half..=half {
        for dj in -half..=half {
            let d = (di * di + dj * dj) as f64;
            weights.push((-d / two_sigma_sq).exp());
        }
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    SmoothingKernel::new(size, weights, size / 2, 1)
}

/// Smooths a per-pixel label field: per-class spatial convolution with zero
/// padding, then per-pixel renormalization.
///
/// Requires the shape-preserving setting `P = (K-1)/2`, `S = 1`.
pub fn smooth_segmentation(field: &SpatialLabelField, kernel: &SmoothingKernel) -> Result<SpatialLabelField> {
    let k = kernel.size();
    if kernel.stride() != 1 || kernel.padding() != k / 2 {
        return Err(Error::invalid(
            "smoothing requires stride 1 and padding (K-1)/2 to preserve shape",
        ));
    }
    let (h, w, c) = (field.height(), field.width(), field.classes());
    if k > h || k > w {
        return Err(Error::invalid(format!(
            "kernel size {k} exceeds field dimensions {h}x{w}"
        )));
    }
    let pad = kernel.padding() as isize;
    let mut out = vec![0.0; h * w * c];
    for i in 0..h {
        for j in 0..w {
            let base = (i * w + j) * c;
            for a in 0..k {
                for b in 0..k {
                    let si = i as isize + a as isize - pad;
                    let sj = j as isize + b as isize - pad;
                    if si < 0 || sj < 0 || si >= h as isize || sj >= w as isize {
                        continue; // zero padding
                    }
                    let f = kernel.weight(a, b);
                    if f == 0.0 {
                        continue;
                    }
                    let src = field.pixel(si as usize, sj as usize);
                    for (kk, &m) in src.iter().enumerate() {
                        out[base + kk] += f * m;
                    }
                }
            }
            let total: f64 = out[base..base + c].iter().sum();
            if total <= 0.0 {
                return Err(Error::numerical(format!(
                    "pixel ({i}, {j}) received no mass from the kernel support"
                )));
            }
            for v in &mut out[base..base + c] {
                *v /= total;
            }
        }
    }
    Ok(SpatialLabelField::from_raw_unchecked(h, w, c, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label_space::MASS_TOLERANCE;

    fn age_set() -> LabelSet1D {
        LabelSet1D::range(1.0, 85.0, 1.0).unwrap()
    }

    /// Shannon entropy in nats, with 0 ln 0 = 0.
    fn entropy(d: &LabelDistribution) -> f64 {
        d.mass()
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.ln())
            .sum()
    }

    #[test]
    fn gaussian_1d_three_point_values() {
        let set = LabelSet1D::range(1.0, 3.0, 1.0).unwrap();
        let d = gaussian_1d(&set, 2.0, 1.0).unwrap();
        // exp(-1/2) / (1 + 2 exp(-1/2)) and 1 / (1 + 2 exp(-1/2))
        assert!((d.mass()[0] - 0.2741).abs() < 1e-4);
        assert!((d.mass()[1] - 0.4519).abs() < 1e-4);
        assert!((d.mass()[2] - 0.2741).abs() < 1e-4);
    }

    #[test]
    fn gaussian_1d_mode_and_symmetry() {
        let d = gaussian_1d(&age_set(), 25.0, 2.0).unwrap();
        assert_eq!(d.argmax(), 24); // label 25
        assert!((d.mass()[23] - d.mass()[25]).abs() < 1e-15); // y(24) = y(26)
    }

    #[test]
    fn gaussian_1d_zero_sigma_is_one_hot() {
        let d = gaussian_1d(&age_set(), 25.0, 0.0).unwrap();
        assert_eq!(d.mass()[24], 1.0);
        assert_eq!(d.mass().iter().filter(|&&m| m > 0.0).count(), 1);
    }

    #[test]
    fn gaussian_1d_rejects_negative_sigma() {
        assert!(gaussian_1d(&age_set(), 25.0, -1.0).is_err());
    }

    #[test]
    fn gaussian_1d_survives_distant_mu() {
        // Without the min-distance shift these weights would all underflow.
        let d = gaussian_1d(&age_set(), 1e6, 0.5).unwrap();
        assert_eq!(d.argmax(), 84);
        assert!((d.mass().iter().sum::<f64>() - 1.0).abs() <= MASS_TOLERANCE);
    }

    #[test]
    fn gaussian_1d_is_unimodal_from_the_mode() {
        let d = gaussian_1d(&age_set(), 30.4, 3.0).unwrap();
        let m = d.argmax();
        for i in m..d.len() - 1 {
            assert!(d.mass()[i + 1] <= d.mass()[i] + 1e-15);
        }
        for i in (1..=m).rev() {
            assert!(d.mass()[i - 1] <= d.mass()[i] + 1e-15);
        }
    }

    #[test]
    fn gaussian_1d_entropy_grows_with_sigma() {
        let narrow = gaussian_1d(&age_set(), 40.0, 1.0).unwrap();
        let wide = gaussian_1d(&age_set(), 40.0, 3.0).unwrap();
        assert!(entropy(&narrow) < entropy(&wide));
    }

    #[test]
    fn gaussian_2d_center_is_unique_mode_and_symmetric() {
        let grid = LabelGrid2D::square_range(-15.0, 15.0, 15.0).unwrap();
        let joint = gaussian_2d(&grid, (0.0, 0.0), 15.0).unwrap();
        assert_eq!(joint.argmax(), (1, 1));
        for r in 0..3 {
            for c in 0..3 {
                if (r, c) != (1, 1) {
                    assert!(joint.get(r, c) < joint.get(1, 1));
                }
                // pitch <-> yaw and sign-flip symmetry
                assert!((joint.get(r, c) - joint.get(c, r)).abs() < 1e-15);
                assert!((joint.get(r, c) - joint.get(2 - r, 2 - c)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn gaussian_2d_factorizes_into_axis_marginals() {
        let grid = LabelGrid2D::new(
            vec![-30.0, -15.0, 0.0, 15.0, 30.0],
            vec![-60.0, -30.0, 0.0, 30.0, 60.0],
        )
        .unwrap();
        let joint = gaussian_2d(&grid, (15.0, -30.0), 20.0).unwrap();
        // Independent route: outer product of the two 1-D constructions.
        let pitch_set = LabelSet1D::range(-30.0, 30.0, 15.0).unwrap();
        let yaw_set = LabelSet1D::range(-60.0, 60.0, 30.0).unwrap();
        let dp = gaussian_1d(&pitch_set, 15.0, 20.0).unwrap();
        let dy = gaussian_1d(&yaw_set, -30.0, 20.0).unwrap();
        for (r, &p) in dp.mass().iter().enumerate() {
            for (c, &y) in dy.mass().iter().enumerate() {
                assert!((joint.get(r, c) - p * y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gaussian_2d_pointing04_mode() {
        // Pointing'04 discretization: non-uniform pitch, uniform yaw.
        let grid = LabelGrid2D::new(
            vec![-90.0, -60.0, -30.0, -15.0, 0.0, 15.0, 30.0, 60.0, 90.0],
            (-6..=6).map(|i| 15.0 * i as f64).collect(),
        )
        .unwrap();
        let joint = gaussian_2d(&grid, (0.0, 60.0), 15.0).unwrap();
        let (r, c) = joint.argmax();
        assert_eq!(grid.pitch_values()[r], 0.0);
        assert_eq!(grid.yaw_values()[c], 60.0);
    }

    #[test]
    fn gaussian_2d_rejects_nonpositive_sigma() {
        let grid = LabelGrid2D::square_range(-15.0, 15.0, 15.0).unwrap();
        assert!(gaussian_2d(&grid, (0.0, 0.0), 0.0).is_err());
        assert!(gaussian_2d(&grid, (0.0, 0.0), -1.0).is_err());
    }

    #[test]
    fn multilabel_matches_hand_computed_values() {
        let levels = MultiLabelLevels::from_index_sets(20, &[0], &[1]).unwrap();
        let d = multilabel(&levels, 1.0, 0.3, 0.0, 0.0).unwrap();
        assert!((d.mass()[0] - 1.0 / 1.3).abs() < 1e-12);
        assert!((d.mass()[1] - 0.3 / 1.3).abs() < 1e-12);
        assert!(d.mass()[2..].iter().all(|&m| m == 0.0));
    }

    #[test]
    fn multilabel_epsilon_mixture() {
        let levels = MultiLabelLevels::from_index_sets(20, &[0], &[1]).unwrap();
        let plain = multilabel(&levels, 1.0, 0.3, 0.0, 0.0).unwrap();
        let mixed = multilabel(&levels, 1.0, 0.3, 0.0, 0.01).unwrap();
        for (m, p) in mixed.mass().iter().zip(plain.mass()) {
            assert!((m - (p + 0.0005) / 1.01).abs() < 1e-12);
        }
    }

    #[test]
    fn multilabel_single_positive_is_one_hot() {
        let levels = MultiLabelLevels::from_index_sets(5, &[3], &[]).unwrap();
        let d = multilabel(&levels, 1.0, 0.3, 0.0, 0.0).unwrap();
        assert_eq!(d.mass()[3], 1.0);
    }

    #[test]
    fn multilabel_levels_are_constant_and_ordered() {
        let levels = MultiLabelLevels::from_index_sets(10, &[0, 4], &[2, 7]).unwrap();
        let d = multilabel(&levels, 1.0, 0.3, 0.1, 0.0).unwrap();
        assert_eq!(d.mass()[0], d.mass()[4]);
        assert_eq!(d.mass()[2], d.mass()[7]);
        assert!(d.mass()[0] > d.mass()[2]);
        assert!(d.mass()[2] > d.mass()[1]);
    }

    #[test]
    fn multilabel_rejects_bad_ordering_and_all_negative() {
        let levels = MultiLabelLevels::from_index_sets(5, &[0], &[]).unwrap();
        assert!(multilabel(&levels, 0.3, 1.0, 0.0, 0.0).is_err());
        assert!(multilabel(&levels, 1.0, 1.0, 0.0, 0.0).is_err());
        assert!(multilabel(&levels, 1.0, 0.3, -0.1, 0.0).is_err());
        assert!(MultiLabelLevels::new(vec![ClassLevel::Negative; 4]).is_err());
    }

    #[test]
    fn one_hot_snaps_to_nearest_label() {
        let set = age_set();
        let d = one_hot(&set, 30.0).unwrap();
        assert_eq!(d.mass()[29], 1.0);
        let snapped = one_hot(&set, 30.4).unwrap();
        assert_eq!(snapped.mass()[29], 1.0);
        assert!((snapped.mass().iter().sum::<f64>() - 1.0).abs() <= MASS_TOLERANCE);
    }

    #[test]
    fn label_smoothing_examples() {
        let target = LabelDistribution::one_hot(10, 3).unwrap();
        let same = label_smoothing(&target, 0.0).unwrap();
        assert_eq!(same.mass(), target.mass());
        let smoothed = label_smoothing(&target, 0.1).unwrap();
        assert!((smoothed.mass()[3] - 0.91).abs() < 1e-12);
        assert!((smoothed.mass()[0] - 0.01).abs() < 1e-12);
        let uniform = LabelDistribution::uniform(10).unwrap();
        let fixed = label_smoothing(&uniform, 0.7).unwrap();
        for &m in fixed.mass() {
            assert!((m - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn label_smoothing_keeps_one_hot_argmax_below_one() {
        let target = LabelDistribution::one_hot(7, 2).unwrap();
        for eps in [0.1, 0.5, 0.9, 0.999] {
            assert_eq!(label_smoothing(&target, eps).unwrap().argmax(), 2);
        }
    }

    #[test]
    fn label_smoothing_rejects_out_of_range_epsilon() {
        let target = LabelDistribution::one_hot(4, 0).unwrap();
        assert!(label_smoothing(&target, -0.1).is_err());
        assert!(label_smoothing(&target, 1.1).is_err());
    }

    #[test]
    fn gaussian_kernel_trivial_and_symmetric() {
        let k1 = gaussian_kernel(1, 2.0).unwrap();
        assert_eq!(k1.weights(), &[1.0]);
        let k5 = gaussian_kernel(5, 1.0).unwrap();
        assert!((k5.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let center = k5.weight(2, 2);
        for a in 0..5 {
            for b in 0..5 {
                assert!(k5.weight(a, b) <= center);
                assert!((k5.weight(a, b) - k5.weight(4 - a, b)).abs() < 1e-15);
                assert!((k5.weight(a, b) - k5.weight(a, 4 - b)).abs() < 1e-15);
                assert!((k5.weight(a, b) - k5.weight(b, a)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn gaussian_kernel_rejects_even_size() {
        assert!(gaussian_kernel(4, 1.0).is_err());
        assert!(gaussian_kernel(5, 0.0).is_err());
    }

    #[test]
    fn smoothing_constant_field_is_identity() {
        let labels = vec![vec![1; 6]; 6];
        let field = SpatialLabelField::from_label_map(&labels, 3).unwrap();
        let kernel = gaussian_kernel(5, 1.0).unwrap();
        let smoothed = smooth_segmentation(&field, &kernel).unwrap();
        assert_eq!(smoothed, field);
    }

    /// Brute-force reference: pad-with-zero convolution then renormalize,
    /// written directly from the index arithmetic without reuse of the
    /// implementation's loops.
    fn smooth_reference(field: &SpatialLabelField, kernel: &SmoothingKernel) -> Vec<Vec<Vec<f64>>> {
        let (h, w, c) = (field.height(), field.width(), field.classes());
        let k = kernel.size() as isize;
        let p = kernel.padding() as isize;
        let mut out = vec![vec![vec![0.0; c]; w]; h];
        for i in 0..h as isize {
            for j in 0..w as isize {
                for kk in 0..c {
                    let mut acc = 0.0;
                    for a in 0..k {
                        for b in 0..k {
                            let si = i + a - p;
                            let sj = j + b - p;
                            if si >= 0 && sj >= 0 && si < h as isize && sj < w as isize {
                                acc += kernel.weight(a as usize, b as usize)
                                    * field.pixel(si as usize, sj as usize)[kk];
                            }
                        }
                    }
                    out[i as usize][j as usize][kk] = acc;
                }
                let total: f64 = out[i as usize][j as usize].iter().sum();
                for v in &mut out[i as usize][j as usize] {
                    *v /= total;
                }
            }
        }
        out
    }

    #[test]
    fn smoothing_split_field_matches_brute_force() {
        // Two classes split down the middle of an 8x8 map.
        let labels: Vec<Vec<usize>> = (0..8)
            .map(|_| (0..8).map(|j| if j < 4 { 1 } else { 2 }).collect())
            .collect();
        let field = SpatialLabelField::from_label_map(&labels, 3).unwrap();
        let kernel = gaussian_kernel(5, 1.0).unwrap();
        let smoothed = smooth_segmentation(&field, &kernel).unwrap();
        let reference = smooth_reference(&field, &kernel);
        for i in 0..8 {
            for j in 0..8 {
                for kk in 0..3 {
                    assert!(
                        (smoothed.pixel(i, j)[kk] - reference[i][j][kk]).abs() < 1e-12,
                        "pixel ({i}, {j}) class {kk}"
                    );
                }
            }
        }
        // Pixels at least 3 columns from the boundary keep their one-hot.
        for i in 0..8 {
            assert_eq!(smoothed.pixel(i, 0)[1], 1.0);
            assert_eq!(smoothed.pixel(i, 1)[1], 1.0);
            assert_eq!(smoothed.pixel(i, 7)[2], 1.0);
            // Boundary pixels carry mass on both classes.
            assert!(smoothed.pixel(i, 3)[1] > 0.0 && smoothed.pixel(i, 3)[2] > 0.0);
            assert!(smoothed.pixel(i, 4)[1] > 0.0 && smoothed.pixel(i, 4)[2] > 0.0);
        }
    }

    #[test]
    fn smoothing_never_invents_absent_classes() {
        let labels = vec![vec![0, 0, 1, 1, 1], vec![0, 0, 1, 1, 1], vec![0, 0, 1, 1, 1]];
        let field = SpatialLabelField::from_label_map(&labels, 4).unwrap();
        let kernel = gaussian_kernel(3, 1.0).unwrap();
        let smoothed = smooth_segmentation(&field, &kernel).unwrap();
        for i in 0..3 {
            for j in 0..5 {
                assert_eq!(smoothed.pixel(i, j)[2], 0.0);
                assert_eq!(smoothed.pixel(i, j)[3], 0.0);
                let total: f64 = smoothed.pixel(i, j).iter().sum();
                assert!((total - 1.0).abs() <= MASS_TOLERANCE);
            }
        }
    }

    #[test]
    fn smoothing_rejects_oversized_kernel() {
        let labels = vec![vec![0, 1], vec![1, 0]];
        let field = SpatialLabelField::from_label_map(&labels, 2).unwrap();
        let kernel = gaussian_kernel(5, 1.0).unwrap();
        assert!(smooth_segmentation(&field, &kernel).is_err());
    }
}
