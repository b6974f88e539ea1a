//! Fourier-feature embedding of raw samples.
//!
//! A sample `x` (length `d`) is mapped to `z(x)` of length `D` with
//! `z_j = sqrt(2/D) * cos(<w_j, x> + b_j)`, where `w_j ~ N(0, I/σ²)` and
//! `b_j ~ U[0, 2π)`. The inner product `<z(x), z(y)>` is an unbiased estimate
//! of the Gaussian kernel `exp(-|x - y|² / (2σ²))`. The adaptive variant refines
//! `W` and `b` by gradient descent on a pairwise kernel-matching loss, and
//! [`embed`] rescales the result to unit norm.

use std::collections::HashSet;
use std::f64::consts::TAU;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{DmkdeError, Result};
use crate::rng::{streams, SeededStream};

/// Learned (or sampled) parameters of the Fourier map.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingParams {
    /// `D × d` spectral frequencies, one row per feature.
    weights: Array2<f64>,
    /// Phase offsets in `[0, 2π)`.
    offsets: Array1<f64>,
    sigma: f64,
}

impl EmbeddingParams {
    /// Assemble parameters from explicit parts, validating every invariant.
    pub fn from_parts(weights: Array2<f64>, offsets: Array1<f64>, sigma: f64) -> Result<Self> {
        let (embed_dim, input_dim) = weights.dim();
        if embed_dim == 0 || input_dim == 0 {
            return Err(DmkdeError::InvalidArgument(format!(
                "weights must be non-empty, got {embed_dim}x{input_dim}"
            )));
        }
        if offsets.len() != embed_dim {
            return Err(DmkdeError::InvalidArgument(format!(
                "expected {embed_dim} offsets, got {}",
                offsets.len()
            )));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(DmkdeError::InvalidArgument(format!(
                "sigma must be positive and finite, got {sigma}"
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(DmkdeError::InvalidArgument("non-finite frequency".into()));
        }
        if offsets.iter().any(|b| !(0.0..TAU).contains(b)) {
            return Err(DmkdeError::InvalidArgument(
                "offsets must lie in [0, 2π)".into(),
            ));
        }
        Ok(EmbeddingParams {
            weights,
            offsets,
            sigma,
        })
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn offsets(&self) -> &Array1<f64> {
        &self.offsets
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn input_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn embed_dim(&self) -> usize {
        self.weights.nrows()
    }

    fn scale(&self) -> f64 {
        (2.0 / self.embed_dim() as f64).sqrt()
    }
}

/// A unit-norm embedded sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Array1<f64>);

impl FeatureVector {
    /// Tolerance on `|‖φ‖ - 1|` accepted by [`FeatureVector::new`].
    pub const NORM_TOLERANCE: f64 = 1e-9;

    /// Wrap a vector that is already unit norm.
    pub fn new(values: Array1<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(DmkdeError::InvalidArgument(
                "feature vector must be non-empty and finite".into(),
            ));
        }
        let norm = values.dot(&values).sqrt();
        if (norm - 1.0).abs() > Self::NORM_TOLERANCE {
            return Err(DmkdeError::InvalidArgument(format!(
                "feature vector norm is {norm}, expected 1"
            )));
        }
        Ok(FeatureVector(values))
    }

    /// Rescale an arbitrary nonzero vector to unit norm.
    pub fn normalized(values: Array1<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(DmkdeError::InvalidArgument(
                "feature vector must be non-empty and finite".into(),
            ));
        }
        let norm = values.dot(&values).sqrt();
        if norm == 0.0 {
            return Err(DmkdeError::DegenerateEmbedding);
        }
        Ok(FeatureVector(values / norm))
    }

    pub fn values(&self) -> ArrayView1<'_, f64> {
        self.0.view()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Array1<f64> {
        self.0
    }
}

fn check_positive(name: &str, value: usize) -> Result<()> {
    if value == 0 {
        return Err(DmkdeError::InvalidArgument(format!("{name} must be >= 1")));
    }
    Ok(())
}

/// Draw random Fourier-feature parameters for a Gaussian kernel of bandwidth `sigma`.
///
/// Frequencies come from stream [`streams::FREQUENCIES`] in row-major order and
/// offsets from [`streams::OFFSETS`], both keyed by `seed`.
pub fn sample_rff_params(
    input_dim: usize,
    embed_dim: usize,
    sigma: f64,
    seed: u64,
) -> Result<EmbeddingParams> {
    check_positive("input_dim", input_dim)?;
    check_positive("embed_dim", embed_dim)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(DmkdeError::InvalidArgument(format!(
            "sigma must be positive and finite, got {sigma}"
        )));
    }
    let mut freq = SeededStream::new(seed, streams::FREQUENCIES);
    let weights =
        Array2::from_shape_simple_fn((embed_dim, input_dim), || freq.standard_normal() / sigma);
    let mut phase = SeededStream::new(seed, streams::OFFSETS);
    let offsets = Array1::from_shape_simple_fn(embed_dim, || phase.uniform() * TAU);
    // uniform() < 1, but the product can still round up to TAU.
    let offsets = offsets.mapv(|b| if b >= TAU { 0.0 } else { b });
    EmbeddingParams::from_parts(weights, offsets, sigma)
}

fn check_input(params: &EmbeddingParams, x: ArrayView1<f64>) -> Result<()> {
    if x.len() != params.input_dim() {
        return Err(DmkdeError::InvalidArgument(format!(
            "sample has {} features, embedding expects {}",
            x.len(),
            params.input_dim()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(DmkdeError::InvalidArgument(
            "sample has non-finite entries".into(),
        ));
    }
    Ok(())
}

/// Unnormalized Fourier map `z(x)`.
pub fn embed_raw(params: &EmbeddingParams, x: ArrayView1<f64>) -> Result<Array1<f64>> {
    check_input(params, x)?;
    let scale = params.scale();
    let mut z = params.weights.dot(&x);
    Zip::from(&mut z)
        .and(&params.offsets)
        .for_each(|z, &b| *z = scale * (*z + b).cos());
    Ok(z)
}

/// Normalized Fourier map `φ(x) = z(x) / ‖z(x)‖`.
pub fn embed(params: &EmbeddingParams, x: ArrayView1<f64>) -> Result<FeatureVector> {
    FeatureVector::normalized(embed_raw(params, x)?)
}

/// Embed every row of `rows`, preserving order.
pub fn embed_rows(params: &EmbeddingParams, rows: ArrayView2<f64>) -> Result<Vec<FeatureVector>> {
    rows.outer_iter().map(|x| embed(params, x)).collect()
}

/// Exact Gaussian kernel with bandwidth `sigma`.
pub fn gaussian_kernel(x: ArrayView1<f64>, y: ArrayView1<f64>, sigma: f64) -> f64 {
    let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-sq / (2.0 * sigma * sigma)).exp()
}

/// Adaptive Fourier-feature training settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AffConfig {
    /// Training pairs drawn from the training rows.
    pub num_pairs: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Seed for pair sampling.
    pub seed: u64,
    /// Size of the disjoint pair sample used for the no-regression check.
    pub heldout_pairs: usize,
    /// Restarts (each with half the previous learning rate) if training regresses.
    pub max_retries: usize,
}

impl Default for AffConfig {
    fn default() -> Self {
        AffConfig {
            num_pairs: 10_000,
            epochs: 1000,
            learning_rate: 1e-3,
            seed: 0,
            heldout_pairs: 1000,
            max_retries: 4,
        }
    }
}

impl AffConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_pairs == 0 {
            return Err(DmkdeError::InvalidArgument("num_pairs must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(DmkdeError::InvalidArgument(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Gathered sample pairs with their exact kernel targets.
#[derive(Debug, Clone)]
pub struct PairSet {
    left: Array2<f64>,
    right: Array2<f64>,
    targets: Array1<f64>,
    indices: Vec<(usize, usize)>,
}

impl PairSet {
    /// Build from explicit index pairs into `data`.
    pub fn from_indices(
        data: ArrayView2<f64>,
        indices: Vec<(usize, usize)>,
        sigma: f64,
    ) -> Result<Self> {
        if indices.is_empty() {
            return Err(DmkdeError::InsufficientData("empty pair set".into()));
        }
        let m = data.nrows();
        if let Some(&(i, j)) = indices.iter().find(|(i, j)| *i >= m || *j >= m) {
            return Err(DmkdeError::InvalidArgument(format!(
                "pair ({i}, {j}) out of range for {m} rows"
            )));
        }
        let left_idx: Vec<usize> = indices.iter().map(|p| p.0).collect();
        let right_idx: Vec<usize> = indices.iter().map(|p| p.1).collect();
        let left = data.select(Axis(0), &left_idx);
        let right = data.select(Axis(0), &right_idx);
        let targets = Array1::from_iter(
            left.outer_iter()
                .zip(right.outer_iter())
                .map(|(x, y)| gaussian_kernel(x, y, sigma)),
        );
        Ok(PairSet {
            left,
            right,
            targets,
            indices,
        })
    }

    /// Sample `count` unordered pairs `(i, j)`, `i < j`, uniformly with replacement.
    pub fn sample(data: ArrayView2<f64>, count: usize, sigma: f64, seed: u64) -> Result<Self> {
        let mut rng = SeededStream::new(seed, streams::AFF_TRAIN_PAIRS);
        let indices = sample_pair_indices(data.nrows(), count, &mut rng, None)?;
        Self::from_indices(data, indices, sigma)
    }

    /// Sample pairs that do not occur in `exclude`. Falls back to allowing
    /// overlap only when the data has too few distinct pairs to avoid it.
    pub fn sample_disjoint(
        data: ArrayView2<f64>,
        count: usize,
        sigma: f64,
        seed: u64,
        exclude: &PairSet,
    ) -> Result<Self> {
        let mut rng = SeededStream::new(seed, streams::AFF_HELDOUT_PAIRS);
        let taken: HashSet<(usize, usize)> = exclude.indices.iter().copied().collect();
        let mut indices = sample_pair_indices(data.nrows(), count, &mut rng, Some(&taken))?;
        if indices.is_empty() {
            indices = sample_pair_indices(data.nrows(), count, &mut rng, None)?;
        }
        Self::from_indices(data, indices, sigma)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[(usize, usize)] {
        &self.indices
    }

    pub fn targets(&self) -> ArrayView1<'_, f64> {
        self.targets.view()
    }
}

fn sample_pair_indices(
    rows: usize,
    count: usize,
    rng: &mut SeededStream,
    exclude: Option<&HashSet<(usize, usize)>>,
) -> Result<Vec<(usize, usize)>> {
    if rows < 2 {
        return Err(DmkdeError::InsufficientData(format!(
            "need at least 2 training samples for pair sampling, got {rows}"
        )));
    }
    let mut out = Vec::with_capacity(count);
    let max_attempts = count.saturating_mul(64).max(64);
    let mut attempts = 0;
    while out.len() < count && attempts < max_attempts {
        attempts += 1;
        let i = rng.below(rows as u64) as usize;
        let j = rng.below(rows as u64 - 1) as usize;
        // j skips i so the pair is never a self-pair.
        let j = if j >= i { j + 1 } else { j };
        let pair = (i.min(j), i.max(j));
        if exclude.is_some_and(|ex| ex.contains(&pair)) {
            continue;
        }
        out.push(pair);
    }
    Ok(out)
}

struct Projection {
    cos: Array2<f64>,
    sin: Array2<f64>,
}

fn project(params: &EmbeddingParams, rows: &Array2<f64>) -> Projection {
    let mut phase = rows.dot(&params.weights.t());
    phase += &params.offsets;
    Projection {
        cos: phase.mapv(f64::cos),
        sin: phase.mapv(f64::sin),
    }
}

fn residuals(
    params: &EmbeddingParams,
    pairs: &PairSet,
    u: &Projection,
    v: &Projection,
) -> Array1<f64> {
    let s2 = params.scale() * params.scale();
    let approx = (&u.cos * &v.cos).sum_axis(Axis(1)) * s2;
    approx - &pairs.targets
}

/// Mean squared error between `<z(x), z(y)>` and the exact kernel over `pairs`.
pub fn kernel_mse(params: &EmbeddingParams, pairs: &PairSet) -> f64 {
    let u = project(params, &pairs.left);
    let v = project(params, &pairs.right);
    let e = residuals(params, pairs, &u, &v);
    e.dot(&e) / pairs.len() as f64
}

/// Gradient of [`kernel_mse`] with respect to the frequencies and offsets.
#[derive(Debug, Clone)]
pub struct KernelGradient {
    pub loss: f64,
    pub weights: Array2<f64>,
    pub offsets: Array1<f64>,
}

/// Analytic gradient of the pairwise kernel-matching loss.
///
/// With `u = Wx + b`, `v = Wy + b` and residual `e_p = s²Σ cos u_j cos v_j - k_p`,
/// `∂L/∂W_j = -(2s²/P) Σ_p e_p (sin u_j cos v_j x + cos u_j sin v_j y)` and
/// `∂L/∂b_j = -(2s²/P) Σ_p e_p sin(u_j + v_j)`.
pub fn kernel_mse_gradient(params: &EmbeddingParams, pairs: &PairSet) -> KernelGradient {
    let u = project(params, &pairs.left);
    let v = project(params, &pairs.right);
    let e = residuals(params, pairs, &u, &v);
    let p = pairs.len() as f64;
    let loss = e.dot(&e) / p;
    let s2 = params.scale() * params.scale();
    let coef = e.mapv(|e| -2.0 * s2 * e / p).insert_axis(Axis(1));
    let dl = &u.sin * &v.cos * &coef;
    let dr = &u.cos * &v.sin * &coef;
    let weights = dl.t().dot(&pairs.left) + dr.t().dot(&pairs.right);
    let offsets = (dl + dr).sum_axis(Axis(0));
    KernelGradient {
        loss,
        weights,
        offsets,
    }
}

fn descend(
    init: &EmbeddingParams,
    pairs: &PairSet,
    epochs: usize,
    lr: f64,
) -> Option<EmbeddingParams> {
    let mut weights = init.weights.clone();
    let mut offsets = init.offsets.clone();
    for _ in 0..epochs {
        let current = EmbeddingParams {
            weights,
            offsets,
            sigma: init.sigma,
        };
        let grad = kernel_mse_gradient(&current, pairs);
        if !grad.loss.is_finite() {
            return None;
        }
        weights = current.weights - &(grad.weights * lr);
        offsets = current.offsets - &(grad.offsets * lr);
    }
    let offsets = offsets.mapv(|b| {
        let r = b.rem_euclid(TAU);
        if r >= TAU {
            0.0
        } else {
            r
        }
    });
    EmbeddingParams::from_parts(weights, offsets, init.sigma).ok()
}

/// Refine `init` by full-batch gradient descent on the kernel-matching loss.
///
/// The result never has a worse loss than `init` on a held-out pair sample
/// disjoint from the training pairs: when it would, training restarts from
/// `init` with half the learning rate, and after `max_retries` failed restarts
/// `init` itself is returned.
pub fn train_aff(
    init: &EmbeddingParams,
    data: ArrayView2<f64>,
    cfg: &AffConfig,
) -> Result<EmbeddingParams> {
    cfg.validate()?;
    if data.nrows() < 2 {
        return Err(DmkdeError::InsufficientData(format!(
            "adaptive features need at least 2 training samples, got {}",
            data.nrows()
        )));
    }
    if data.ncols() != init.input_dim() {
        return Err(DmkdeError::InvalidArgument(format!(
            "training data has {} features, embedding expects {}",
            data.ncols(),
            init.input_dim()
        )));
    }
    if cfg.epochs == 0 {
        return Ok(init.clone());
    }
    let train = PairSet::sample(data, cfg.num_pairs, init.sigma, cfg.seed)?;
    let heldout =
        PairSet::sample_disjoint(data, cfg.heldout_pairs.max(1), init.sigma, cfg.seed, &train)?;
    let baseline = kernel_mse(init, &heldout);

    let mut lr = cfg.learning_rate;
    for _ in 0..=cfg.max_retries {
        if let Some(trained) = descend(init, &train, cfg.epochs, lr) {
            let loss = kernel_mse(&trained, &heldout);
            if loss.is_finite() && loss <= baseline {
                return Ok(trained);
            }
        }
        lr *= 0.5;
    }
    Ok(init.clone())
}

/// Median Euclidean distance over all pairs of (at most) `max_rows` rows,
/// subsampled without replacement by `seed` when the data is larger.
pub fn median_pairwise_distance(data: ArrayView2<f64>, max_rows: usize, seed: u64) -> Result<f64> {
    let m = data.nrows();
    if m < 2 {
        return Err(DmkdeError::InsufficientData(format!(
            "median distance needs at least 2 rows, got {m}"
        )));
    }
    let mut rows: Vec<usize> = (0..m).collect();
    if m > max_rows {
        SeededStream::new(seed, streams::SUBSAMPLE).shuffle(&mut rows);
        rows.truncate(max_rows.max(2));
        rows.sort_unstable();
    }
    let mut dists = Vec::with_capacity(rows.len() * (rows.len() - 1) / 2);
    for (a, &i) in rows.iter().enumerate() {
        for &j in &rows[a + 1..] {
            let xi = data.row(i);
            let xj = data.row(j);
            let sq: f64 = xi.iter().zip(xj).map(|(p, q)| (p - q) * (p - q)).sum();
            dists.push(sq.sqrt());
        }
    }
    dists.sort_unstable_by(f64::total_cmp);
    let n = dists.len();
    Ok(if n % 2 == 1 {
        dists[n / 2]
    } else {
        0.5 * (dists[n / 2 - 1] + dists[n / 2])
    })
}

/// Bandwidth grid `{2^k · median : k = -2..=2}` centered on the data scale.
pub fn median_sigma_grid(data: ArrayView2<f64>, seed: u64) -> Result<Vec<f64>> {
    let median = median_pairwise_distance(data, 1000, seed)?;
    if median.is_nan() || median <= 0.0 {
        return Err(DmkdeError::InvalidArgument(
            "median pairwise distance is zero; cannot derive a bandwidth grid".into(),
        ));
    }
    Ok((-2..=2).map(|k| median * 2f64.powi(k)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn sampled_shapes_and_ranges() {
        let p = sample_rff_params(2, 4, 1.0, 42).unwrap();
        assert_eq!(p.weights().dim(), (4, 2));
        assert!(p.offsets().iter().all(|b| (0.0..TAU).contains(b)));
        assert_eq!(p, sample_rff_params(2, 4, 1.0, 42).unwrap());
        assert_ne!(p, sample_rff_params(2, 4, 1.0, 43).unwrap());
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(matches!(
            sample_rff_params(0, 4, 1.0, 0),
            Err(DmkdeError::InvalidArgument(_))
        ));
        assert!(matches!(
            sample_rff_params(2, 0, 1.0, 0),
            Err(DmkdeError::InvalidArgument(_))
        ));
        assert!(matches!(
            sample_rff_params(2, 4, 0.0, 0),
            Err(DmkdeError::InvalidArgument(_))
        ));
        assert!(matches!(
            sample_rff_params(2, 4, -1.0, 0),
            Err(DmkdeError::InvalidArgument(_))
        ));
    }

    #[test]
    fn frequency_variance_is_inverse_sigma_squared() {
        let draws: Vec<f64> = (0..10_000u64)
            .map(|seed| sample_rff_params(1, 1, 2.0, seed).unwrap().weights()[[0, 0]])
            .collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / draws.len() as f64;
        assert!((var - 0.25).abs() <= 0.02, "variance {var}");
    }

    #[test]
    fn zero_params_give_constant_features() {
        let p = EmbeddingParams::from_parts(Array2::zeros((4, 3)), Array1::zeros(4), 1.0).unwrap();
        let x = array![0.3, -2.0, 5.0];
        let z = embed_raw(&p, x.view()).unwrap();
        for v in &z {
            assert_abs_diff_eq!(*v, (2.0f64 / 4.0).sqrt(), epsilon = 1e-15);
        }
        let phi = embed(&p, x.view()).unwrap();
        for v in phi.values() {
            assert_abs_diff_eq!(*v, 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn hand_evaluated_raw_map() {
        let p = EmbeddingParams::from_parts(
            array![[1.0], [2.0]],
            array![0.0, std::f64::consts::FRAC_PI_2],
            1.0,
        )
        .unwrap();
        let z = embed_raw(&p, array![0.0].view()).unwrap();
        assert_abs_diff_eq!(z[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(z[1], 0.0, epsilon = 1e-15);
        let phi = embed(&p, array![0.0].view()).unwrap();
        assert_abs_diff_eq!(phi.values()[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(phi.values()[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let p = sample_rff_params(3, 8, 1.0, 1).unwrap();
        assert!(matches!(
            embed_raw(&p, array![1.0, 2.0].view()),
            Err(DmkdeError::InvalidArgument(_))
        ));
    }

    #[test]
    fn all_zero_raw_vector_is_degenerate() {
        assert!(matches!(
            FeatureVector::normalized(Array1::zeros(3)),
            Err(DmkdeError::DegenerateEmbedding)
        ));
    }

    #[test]
    fn epochs_zero_is_identity() {
        let data = array![[0.0, 0.0], [1.0, 0.5], [0.2, -0.3]];
        let init = sample_rff_params(2, 8, 1.0, 5).unwrap();
        let cfg = AffConfig {
            epochs: 0,
            ..AffConfig::default()
        };
        assert_eq!(train_aff(&init, data.view(), &cfg).unwrap(), init);
    }

    #[test]
    fn training_needs_two_rows() {
        let init = sample_rff_params(2, 8, 1.0, 5).unwrap();
        let data = array![[0.0, 0.0]];
        assert!(matches!(
            train_aff(&init, data.view(), &AffConfig::default()),
            Err(DmkdeError::InsufficientData(_))
        ));
    }

    #[test]
    fn heldout_pairs_avoid_training_pairs() {
        let data = Array2::from_shape_fn((30, 2), |(i, j)| (i * 2 + j) as f64 * 0.1);
        let train = PairSet::sample(data.view(), 50, 1.0, 9).unwrap();
        let held = PairSet::sample_disjoint(data.view(), 50, 1.0, 9, &train).unwrap();
        let taken: HashSet<_> = train.indices().iter().collect();
        assert!(held.indices().iter().all(|p| !taken.contains(p)));
        assert!(train.indices().iter().all(|(i, j)| i < j));
    }

    #[test]
    fn median_of_known_points() {
        // distances: 1, 2, 3 -> median 2
        let data = array![[0.0], [1.0], [3.0]];
        assert_abs_diff_eq!(median_pairwise_distance(data.view(), 1000, 0).unwrap(), 2.0);
        let grid = median_sigma_grid(data.view(), 0).unwrap();
        assert_eq!(grid, vec![0.5, 1.0, 2.0, 4.0, 8.0]);
    }
}
