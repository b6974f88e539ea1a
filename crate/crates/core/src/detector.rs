//! Threshold calibration and the end-to-end fit / predict pipeline.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::{fit_standardizer, Standardizer};
use crate::density::{
    build_density_matrix, estimate_density, estimate_density_batch, DensityMatrix,
};
use crate::embedding::{
    embed, embed_rows, sample_rff_params, train_aff, AffConfig, EmbeddingParams,
};
use crate::error::{DmkdeError, Result};
use crate::metrics;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Normal,
    Anomaly,
}

impl Label {
    /// 0 for normal, 1 for anomaly.
    pub fn as_u8(self) -> u8 {
        match self {
            Label::Normal => 0,
            Label::Anomaly => 1,
        }
    }
}

/// The `rate`-quantile of `densities` with linear interpolation between order
/// statistics: `h = rate·(m-1)`, `θ = v[⌊h⌋] + (h-⌊h⌋)(v[⌊h⌋+1] - v[⌊h⌋])`.
/// Rate 0 gives `-∞`, rate 1 the maximum.
pub fn compute_threshold(densities: &[f64], rate: f64) -> Result<f64> {
    if densities.is_empty() {
        return Err(DmkdeError::InsufficientData(
            "no validation densities".into(),
        ));
    }
    if !(0.0..=1.0).contains(&rate) {
        return Err(DmkdeError::InvalidArgument(format!(
            "anomaly rate must lie in [0, 1], got {rate}"
        )));
    }
    if densities.iter().any(|v| !v.is_finite()) {
        return Err(DmkdeError::InvalidArgument("non-finite density".into()));
    }
    if rate == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let mut sorted = densities.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let m = sorted.len();
    if rate == 1.0 {
        return Ok(sorted[m - 1]);
    }
    let h = rate * (m - 1) as f64;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    let hi = (lo + 1).min(m - 1);
    Ok(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

/// Densities at or above `theta` are normal.
pub fn classify(density: f64, theta: f64) -> Label {
    if density >= theta {
        Label::Normal
    } else {
        Label::Anomaly
    }
}

/// Hyperparameters of a single fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub sigma: f64,
    pub embed_dim: usize,
    pub use_aff: bool,
    pub aff: AffConfig,
    pub seed: u64,
    pub standardize: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            sigma: 1.0,
            embed_dim: 1024,
            use_aff: false,
            aff: AffConfig::default(),
            seed: 42,
            standardize: true,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 {
            return Err(DmkdeError::InvalidArgument("embed_dim must be >= 1".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(DmkdeError::InvalidArgument(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if self.use_aff {
            self.aff.validate()?;
        }
        Ok(())
    }
}

/// A fitted detector: embedding, density matrix, threshold and the
/// standardization applied before embedding. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorModel {
    embedding: EmbeddingParams,
    density: DensityMatrix,
    threshold: f64,
    anomaly_rate: f64,
    standardizer: Option<Standardizer>,
    use_aff: bool,
}

impl DetectorModel {
    pub fn from_parts(
        embedding: EmbeddingParams,
        density: DensityMatrix,
        threshold: f64,
        anomaly_rate: f64,
        standardizer: Option<Standardizer>,
        use_aff: bool,
    ) -> Result<Self> {
        if embedding.embed_dim() != density.embed_dim() {
            return Err(DmkdeError::InvalidArgument(format!(
                "embedding dimension {} does not match density matrix dimension {}",
                embedding.embed_dim(),
                density.embed_dim()
            )));
        }
        if !(0.0..=1.0).contains(&anomaly_rate) {
            return Err(DmkdeError::InvalidArgument(format!(
                "anomaly rate must lie in [0, 1], got {anomaly_rate}"
            )));
        }
        let threshold_ok =
            threshold.is_finite() || (threshold == f64::NEG_INFINITY && anomaly_rate == 0.0);
        if !threshold_ok {
            return Err(DmkdeError::InvalidArgument(format!(
                "threshold {threshold} is invalid for anomaly rate {anomaly_rate}"
            )));
        }
        if let Some(s) = &standardizer {
            if s.dim() != embedding.input_dim() {
                return Err(DmkdeError::InvalidArgument(format!(
                    "standardizer has {} features, embedding expects {}",
                    s.dim(),
                    embedding.input_dim()
                )));
            }
        }
        Ok(DetectorModel {
            embedding,
            density,
            threshold,
            anomaly_rate,
            standardizer,
            use_aff,
        })
    }

    pub fn embedding(&self) -> &EmbeddingParams {
        &self.embedding
    }

    pub fn density(&self) -> &DensityMatrix {
        &self.density
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn anomaly_rate(&self) -> f64 {
        self.anomaly_rate
    }

    pub fn standardizer(&self) -> Option<&Standardizer> {
        self.standardizer.as_ref()
    }

    pub fn use_aff(&self) -> bool {
        self.use_aff
    }

    pub fn input_dim(&self) -> usize {
        self.embedding.input_dim()
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.input_dim() {
            return Err(DmkdeError::DimensionMismatch {
                expected: self.input_dim(),
                found: d,
            });
        }
        Ok(())
    }

    /// Rows as the embedding sees them (standardized if the model standardizes).
    pub fn transform(&self, rows: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_dim(rows.ncols())?;
        Ok(match &self.standardizer {
            Some(s) => s.apply(rows),
            None => rows.to_owned(),
        })
    }

    /// Density score `φ(x)ᵀ R φ(x)`.
    pub fn score(&self, x: ArrayView1<f64>) -> Result<f64> {
        self.check_dim(x.len())?;
        let x: Array1<f64> = match &self.standardizer {
            Some(s) => s.apply_row(x),
            None => x.to_owned(),
        };
        estimate_density(&self.density, &embed(&self.embedding, x.view())?)
    }

    pub fn score_rows(&self, rows: ArrayView2<f64>) -> Result<Vec<f64>> {
        let rows = self.transform(rows)?;
        let phis = embed_rows(&self.embedding, rows.view())?;
        estimate_density_batch(&self.density, &phis)
    }

    pub fn predict(&self, x: ArrayView1<f64>) -> Result<(Label, f64)> {
        let density = self.score(x)?;
        Ok((classify(density, self.threshold), density))
    }

    pub fn predict_rows(&self, rows: ArrayView2<f64>) -> Result<Vec<(Label, f64)>> {
        Ok(self
            .score_rows(rows)?
            .into_iter()
            .map(|d| (classify(d, self.threshold), d))
            .collect())
    }
}

/// Fit the detector: standardize (optional) → sample Fourier features →
/// adapt them (optional) → embed training rows → density matrix →
/// validation densities → threshold at the `anomaly_rate` quantile.
pub fn fit(
    train: ArrayView2<f64>,
    val: ArrayView2<f64>,
    anomaly_rate: f64,
    cfg: &FitConfig,
) -> Result<DetectorModel> {
    cfg.validate()?;
    if train.nrows() == 0 {
        return Err(DmkdeError::InsufficientData("empty training set".into()));
    }
    if val.nrows() == 0 {
        return Err(DmkdeError::InsufficientData("empty validation set".into()));
    }
    if train.ncols() != val.ncols() || train.ncols() == 0 {
        return Err(DmkdeError::InvalidArgument(format!(
            "training rows have {} features, validation rows {}",
            train.ncols(),
            val.ncols()
        )));
    }
    if !(0.0..=1.0).contains(&anomaly_rate) {
        return Err(DmkdeError::InvalidArgument(format!(
            "anomaly rate must lie in [0, 1], got {anomaly_rate}"
        )));
    }

    let standardizer = if cfg.standardize {
        Some(fit_standardizer(train)?)
    } else {
        None
    };
    let (train, val) = match &standardizer {
        Some(s) => (s.apply(train), s.apply(val)),
        None => (train.to_owned(), val.to_owned()),
    };

    let mut embedding = sample_rff_params(train.ncols(), cfg.embed_dim, cfg.sigma, cfg.seed)?;
    if cfg.use_aff {
        embedding = train_aff(&embedding, train.view(), &cfg.aff)?;
    }
    let density = build_density_matrix(&embed_rows(&embedding, train.view())?)?;
    let val_densities = estimate_density_batch(&density, &embed_rows(&embedding, val.view())?)?;
    let threshold = compute_threshold(&val_densities, anomaly_rate)?;
    DetectorModel::from_parts(
        embedding,
        density,
        threshold,
        anomaly_rate,
        standardizer,
        cfg.use_aff,
    )
}

/// Hyperparameter values searched by [`grid_search`]. Configurations are
/// enumerated sigma-major, then embedding size, then the adaptive flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub sigmas: Vec<f64>,
    pub embed_dims: Vec<usize>,
    pub use_aff: Vec<bool>,
}

impl Grid {
    pub fn configs(&self, base: &FitConfig) -> Vec<FitConfig> {
        let mut out =
            Vec::with_capacity(self.sigmas.len() * self.embed_dims.len() * self.use_aff.len());
        for &sigma in &self.sigmas {
            for &embed_dim in &self.embed_dims {
                for &use_aff in &self.use_aff {
                    out.push(FitConfig {
                        sigma,
                        embed_dim,
                        use_aff,
                        ..base.clone()
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub sigma: f64,
    pub embed_dim: usize,
    pub use_aff: bool,
    #[serde(serialize_with = "crate::report::json_float")]
    pub threshold: f64,
    pub f1_weighted: f64,
    pub f1_anomaly: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridReport {
    pub rows: Vec<GridRow>,
    pub best_index: usize,
}

/// Fit every grid configuration on `train`, score weighted F1 on `val`, and
/// return the best configuration (first in grid order on ties).
pub fn grid_search(
    train: ArrayView2<f64>,
    val: ArrayView2<f64>,
    val_labels: &[u8],
    anomaly_rate: f64,
    grid: &Grid,
    base: &FitConfig,
) -> Result<(FitConfig, GridReport)> {
    let configs = grid.configs(base);
    if configs.is_empty() {
        return Err(DmkdeError::InvalidArgument(
            "empty hyperparameter grid".into(),
        ));
    }
    if val_labels.len() != val.nrows() {
        return Err(DmkdeError::InvalidArgument(format!(
            "{} validation labels for {} validation rows",
            val_labels.len(),
            val.nrows()
        )));
    }
    let rows: Vec<GridRow> = configs
        .par_iter()
        .map(|cfg| {
            let model = fit(train, val, anomaly_rate, cfg)?;
            let predicted: Vec<u8> = model
                .predict_rows(val)?
                .into_iter()
                .map(|(label, _)| label.as_u8())
                .collect();
            let summary = metrics::summarize(val_labels, &predicted)?;
            Ok(GridRow {
                sigma: cfg.sigma,
                embed_dim: cfg.embed_dim,
                use_aff: cfg.use_aff,
                threshold: model.threshold(),
                f1_weighted: summary.f1_weighted,
                f1_anomaly: summary.f1_anomaly,
                accuracy: summary.accuracy,
            })
        })
        .collect::<Result<_>>()?;
    let mut best_index = 0;
    for (i, row) in rows.iter().enumerate() {
        if row.f1_weighted > rows[best_index].f1_weighted {
            best_index = i;
        }
    }
    Ok((configs[best_index].clone(), GridReport { rows, best_index }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn hand_evaluated_quantiles() {
        let d: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        assert_abs_diff_eq!(compute_threshold(&d, 0.10).unwrap(), 0.19, epsilon = 1e-12);
        assert_abs_diff_eq!(compute_threshold(&[1.0, 2.0, 3.0, 4.0], 0.5).unwrap(), 2.5);
        assert_abs_diff_eq!(compute_threshold(&[4.0, 1.0, 3.0, 2.0], 0.5).unwrap(), 2.5);
        for rate in [0.01, 0.5, 1.0] {
            assert_eq!(compute_threshold(&[0.7; 9], rate).unwrap(), 0.7);
        }
    }

    #[test]
    fn degenerate_rates() {
        assert_eq!(
            compute_threshold(&[1.0, 2.0], 0.0).unwrap(),
            f64::NEG_INFINITY
        );
        assert_eq!(compute_threshold(&[1.0, 5.0, 2.0], 1.0).unwrap(), 5.0);
        assert!(matches!(
            compute_threshold(&[], 0.5),
            Err(DmkdeError::InsufficientData(_))
        ));
        assert!(matches!(
            compute_threshold(&[1.0], 1.5),
            Err(DmkdeError::InvalidArgument(_))
        ));
        assert!(matches!(
            compute_threshold(&[1.0], -0.1),
            Err(DmkdeError::InvalidArgument(_))
        ));
    }

    #[test]
    fn classify_boundary_is_normal() {
        assert_eq!(classify(0.5, 0.5), Label::Normal);
        assert_eq!(classify(0.49, 0.5), Label::Anomaly);
        assert_eq!(classify(0.0, f64::NEG_INFINITY), Label::Normal);
    }

    fn blob(n: usize, seed: u64) -> Array2<f64> {
        let mut rng = crate::rng::SeededStream::new(seed, 0);
        Array2::from_shape_simple_fn((n, 2), || rng.standard_normal())
    }

    #[test]
    fn fit_rejects_empty_sets() {
        let cfg = FitConfig {
            embed_dim: 16,
            ..FitConfig::default()
        };
        let x = blob(10, 1);
        let empty = Array2::<f64>::zeros((0, 2));
        assert!(matches!(
            fit(empty.view(), x.view(), 0.1, &cfg),
            Err(DmkdeError::InsufficientData(_))
        ));
        assert!(matches!(
            fit(x.view(), empty.view(), 0.1, &cfg),
            Err(DmkdeError::InsufficientData(_))
        ));
    }

    #[test]
    fn zero_rate_flags_nothing() {
        let cfg = FitConfig {
            embed_dim: 64,
            ..FitConfig::default()
        };
        let x = blob(50, 2);
        let model = fit(x.view(), x.view(), 0.0, &cfg).unwrap();
        assert_eq!(model.threshold(), f64::NEG_INFINITY);
        let far = array![[100.0, -100.0], [0.0, 0.0]];
        assert!(model
            .predict_rows(far.view())
            .unwrap()
            .iter()
            .all(|(l, _)| *l == Label::Normal));
    }

    #[test]
    fn predict_checks_dimension() {
        let cfg = FitConfig {
            embed_dim: 16,
            ..FitConfig::default()
        };
        let x = blob(20, 3);
        let model = fit(x.view(), x.view(), 0.1, &cfg).unwrap();
        assert!(matches!(
            model.predict(array![1.0, 2.0, 3.0].view()),
            Err(DmkdeError::DimensionMismatch {
                expected: 2,
                found: 3
            })
        ));
    }

    #[test]
    fn model_invariants_enforced() {
        let cfg = FitConfig {
            embed_dim: 8,
            ..FitConfig::default()
        };
        let x = blob(20, 4);
        let m = fit(x.view(), x.view(), 0.1, &cfg).unwrap();
        let emb = m.embedding().clone();
        let dm = m.density().clone();
        assert!(DetectorModel::from_parts(
            emb.clone(),
            dm.clone(),
            f64::NEG_INFINITY,
            0.1,
            None,
            false
        )
        .is_err());
        assert!(DetectorModel::from_parts(emb.clone(), dm.clone(), 0.1, 1.5, None, false).is_err());
        let other = sample_rff_params(2, 4, 1.0, 0).unwrap();
        assert!(DetectorModel::from_parts(other, dm, 0.1, 0.1, None, false).is_err());
    }

    #[test]
    fn single_config_grid_and_ties() {
        let base = FitConfig {
            embed_dim: 32,
            ..FitConfig::default()
        };
        let x = blob(60, 5);
        let labels = vec![0u8; 60];
        let grid = Grid {
            sigmas: vec![0.7],
            embed_dims: vec![32],
            use_aff: vec![false],
        };
        let (best, report) = grid_search(x.view(), x.view(), &labels, 0.0, &grid, &base).unwrap();
        assert_eq!(best.sigma, 0.7);
        assert_eq!(report.rows.len(), 1);

        // With rate 0 every config predicts all-normal on all-normal labels: F1 ties at 1.
        let grid = Grid {
            sigmas: vec![2.0, 0.5, 1.0],
            embed_dims: vec![16, 32],
            use_aff: vec![false],
        };
        let (best, report) = grid_search(x.view(), x.view(), &labels, 0.0, &grid, &base).unwrap();
        assert!(report.rows.iter().all(|r| r.f1_weighted == 1.0));
        assert_eq!((best.sigma, best.embed_dim), (2.0, 16));
        assert_eq!(report.best_index, 0);

        let empty = Grid {
            sigmas: vec![],
            ..grid
        };
        assert!(matches!(
            grid_search(x.view(), x.view(), &labels, 0.0, &empty, &base),
            Err(DmkdeError::InvalidArgument(_))
        ));
    }
}
