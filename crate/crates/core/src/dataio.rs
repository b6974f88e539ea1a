//! Labeled datasets: CSV loading, stratified splitting, standardization and
//! synthetic benchmark generation.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{DmkdeError, Result};
use crate::rng::{streams, SeededStream};

/// Feature matrix with binary labels (0 = normal, 1 = anomaly).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    name: String,
    feature_names: Vec<String>,
    features: Array2<f64>,
    labels: Vec<u8>,
}

impl LabeledDataset {
    pub fn new(
        name: impl Into<String>,
        feature_names: Vec<String>,
        features: Array2<f64>,
        labels: Vec<u8>,
    ) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(DmkdeError::InvalidArgument(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if feature_names.len() != features.ncols() {
            return Err(DmkdeError::InvalidArgument(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                features.ncols()
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(DmkdeError::InvalidArgument(
                "non-finite feature value".into(),
            ));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(DmkdeError::InvalidArgument(format!(
                "label {bad} is not 0 or 1"
            )));
        }
        Ok(LabeledDataset {
            name: name.into(),
            feature_names,
            features,
            labels,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn anomaly_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    /// Mean of the labels; 0 for an empty dataset.
    pub fn anomaly_rate(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.anomaly_count() as f64 / self.len() as f64
        }
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            name: self.name.clone(),
            feature_names: self.feature_names.clone(),
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn summary(&self) -> DatasetSummary {
        DatasetSummary {
            name: self.name.clone(),
            instances: self.len(),
            dimensions: self.dim(),
            outlier_rate: self.anomaly_rate(),
        }
    }
}

/// Instances, dimensions and outlier rate of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    pub instances: usize,
    pub dimensions: usize,
    pub outlier_rate: f64,
}

/// Published characteristics of an ODDS benchmark set together with the
/// weighted F1 this detector is reported to reach on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OddsReference {
    pub name: &'static str,
    pub instances: usize,
    pub dimensions: usize,
    pub outlier_rate: f64,
    pub reference_f1: f64,
}

const fn odds(
    name: &'static str,
    instances: usize,
    dimensions: usize,
    outlier_rate: f64,
    reference_f1: f64,
) -> OddsReference {
    OddsReference {
        name,
        instances,
        dimensions,
        outlier_rate,
        reference_f1,
    }
}

pub const ODDS_REFERENCE: &[OddsReference] = &[
    odds("arrhythmia", 452, 274, 0.146, 0.911),
    odds("cardio", 2060, 22, 0.2, 0.831),
    odds("spambase", 3485, 58, 0.2, 0.816),
    odds("thyroid", 3772, 36, 0.0247, 0.967),
    odds("kddcup", 10000, 118, 0.1934, 0.984),
    odds("glass", 214, 9, 0.042, 0.974),
    odds("lympho", 148, 18, 0.04, 1.000),
    odds("ionosphere", 351, 33, 0.359, 0.959),
    odds("letter", 1600, 32, 0.0625, 0.927),
    odds("mnist", 7603, 100, 0.092, 0.911),
    odds("musk", 3062, 166, 0.0317, 1.000),
    odds("optdigits", 5216, 64, 0.0288, 0.981),
    odds("pendigits", 6870, 16, 0.0227, 0.994),
    odds("pima", 768, 8, 0.349, 0.758),
    odds("satellite", 6435, 36, 0.3164, 0.845),
    odds("satimage", 5803, 36, 0.0122, 1.000),
    odds("shuttle", 10000, 9, 0.0715, 0.998),
    odds("vertebral", 240, 6, 0.125, 0.904),
    odds("vowels", 1456, 12, 0.03434, 0.979),
    odds("wbc", 378, 30, 0.0556, 0.961),
];

/// Case-insensitive lookup in [`ODDS_REFERENCE`].
pub fn odds_reference(name: &str) -> Option<&'static OddsReference> {
    let lower = name.to_ascii_lowercase();
    ODDS_REFERENCE.iter().find(|r| r.name == lower)
}

/// Which CSV column carries the labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Named(String),
    Last,
}

impl Default for LabelColumn {
    fn default() -> Self {
        LabelColumn::Named("label".to_string())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CsvOptions {
    pub label_column: LabelColumn,
}

fn parse_cell(path: &Path, line: u64, column: &str, cell: &str) -> Result<f64> {
    let value: f64 = cell.trim().parse().map_err(|_| {
        DmkdeError::parse(
            path,
            format!("row {line}, column '{column}': '{cell}' is not a number"),
        )
    })?;
    if !value.is_finite() {
        return Err(DmkdeError::parse(
            path,
            format!("row {line}, column '{column}': non-finite value '{cell}'"),
        ));
    }
    Ok(value)
}

/// Load a headered, comma-separated file of numeric features and a 0/1 label column.
pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let table = read_table(path, options, true)?;
    let labels = table.labels.unwrap_or_default();
    LabeledDataset::new(table.name, table.feature_names, table.features, labels)
}

/// Features plus labels when the label column is present.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub name: String,
    pub feature_names: Vec<String>,
    pub features: Array2<f64>,
    pub labels: Option<Vec<u8>>,
}

/// Like [`load_csv`], but a missing label column means every column is a feature.
pub fn load_features(path: impl AsRef<Path>, options: &CsvOptions) -> Result<FeatureTable> {
    read_table(path.as_ref(), options, false)
}

fn read_table(path: &Path, options: &CsvOptions, require_label: bool) -> Result<FeatureTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => DmkdeError::io(path, io),
            other => DmkdeError::parse(path, format!("{other:?}")),
        })?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| DmkdeError::parse(path, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let label_idx = match &options.label_column {
        LabelColumn::Last => headers.len().checked_sub(1),
        LabelColumn::Named(name) => {
            let found = headers.iter().position(|h| h == name);
            if found.is_none() && require_label {
                return Err(DmkdeError::parse(
                    path,
                    format!("label column '{name}' not found in header"),
                ));
            }
            found
        }
    };
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    if feature_names.is_empty() {
        return Err(DmkdeError::parse(path, "header has no feature columns"));
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| DmkdeError::parse(path, e.to_string()))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != headers.len() {
            return Err(DmkdeError::parse(
                path,
                format!(
                    "row {line}: expected {} fields, found {}",
                    headers.len(),
                    record.len()
                ),
            ));
        }
        for (i, cell) in record.iter().enumerate() {
            let value = parse_cell(path, line, &headers[i], cell)?;
            if Some(i) == label_idx {
                let label = match value {
                    0.0 => 0,
                    1.0 => 1,
                    _ => {
                        return Err(DmkdeError::parse(
                            path,
                            format!(
                                "row {line}, column '{}': label '{cell}' is not 0 or 1",
                                headers[i]
                            ),
                        ))
                    }
                };
                labels.push(label);
            } else {
                values.push(value);
            }
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(DmkdeError::parse(path, "no data rows"));
    }
    let features = Array2::from_shape_vec((rows, feature_names.len()), values)
        .map_err(|e| DmkdeError::parse(path, e.to_string()))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(FeatureTable {
        name,
        feature_names,
        features,
        labels: label_idx.map(|_| labels),
    })
}

/// Write features then a trailing `label` column. Floats use the shortest
/// representation that parses back to the same value.
pub fn save_csv(dataset: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => DmkdeError::io(path, io),
        other => DmkdeError::parse(path, format!("{other:?}")),
    })?;
    let wrap = |e: csv::Error| DmkdeError::parse(path, e.to_string());
    let mut header = dataset.feature_names.clone();
    header.push("label".to_string());
    writer.write_record(&header).map_err(wrap)?;
    for (row, label) in dataset.features.outer_iter().zip(&dataset.labels) {
        let mut fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        fields.push(label.to_string());
        writer.write_record(&fields).map_err(wrap)?;
    }
    writer.flush().map_err(|e| DmkdeError::io(path, e))
}

/// Disjoint train/validation/test row indices (each sorted ascending).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

fn check_fraction(name: &str, frac: f64) -> Result<()> {
    if !(frac > 0.0 && frac < 1.0) {
        return Err(DmkdeError::InvalidArgument(format!(
            "{name} must lie in (0, 1), got {frac}"
        )));
    }
    Ok(())
}

/// Per class (0 then 1): shuffle the class's indices with one shared stream,
/// then peel off `round_half_up(frac · remaining)` for each fraction in turn.
/// The last group takes what is left. Every group must receive at least one
/// member of every class.
fn allocate_stratified(
    labels: &[u8],
    fractions: &[f64],
    mut rng: SeededStream,
) -> Result<Vec<Vec<usize>>> {
    let mut groups = vec![Vec::new(); fractions.len() + 1];
    for class in 0..=1u8 {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        let count = members.len();
        rng.shuffle(&mut members);
        let mut rest = &members[..];
        for (g, &frac) in fractions.iter().enumerate() {
            let take = round_half_up(frac * rest.len() as f64).min(rest.len());
            if take == 0 {
                return Err(DmkdeError::InsufficientClass { class, count });
            }
            groups[g].extend_from_slice(&rest[..take]);
            rest = &rest[take..];
        }
        if rest.is_empty() {
            return Err(DmkdeError::InsufficientClass { class, count });
        }
        groups[fractions.len()].extend_from_slice(rest);
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    Ok(groups)
}

/// Stratified three-way split: `test_frac` of each class goes to test, then
/// `val_frac` of the remainder to validation, the rest to training.
pub fn stratified_split(
    ds: &LabeledDataset,
    test_frac: f64,
    val_frac: f64,
    seed: u64,
) -> Result<SplitIndices> {
    check_fraction("test_frac", test_frac)?;
    check_fraction("val_frac", val_frac)?;
    let mut groups = allocate_stratified(
        ds.labels(),
        &[test_frac, val_frac],
        SeededStream::new(seed, streams::SPLIT),
    )?;
    let train = groups.pop().unwrap_or_default();
    let val = groups.pop().unwrap_or_default();
    let test = groups.pop().unwrap_or_default();
    Ok(SplitIndices {
        train,
        val,
        test,
        seed,
    })
}

/// Stratified two-way split of `labels` into `(rest, holdout)` where the
/// holdout takes `holdout_frac` of each class. Uses its own stream so it
/// never replays the draws of [`stratified_split`].
pub fn stratified_holdout(
    labels: &[u8],
    holdout_frac: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    check_fraction("holdout_frac", holdout_frac)?;
    let mut groups = allocate_stratified(
        labels,
        &[holdout_frac],
        SeededStream::new(seed, streams::REFIT_SPLIT),
    )?;
    let rest = groups.pop().unwrap_or_default();
    let holdout = groups.pop().unwrap_or_default();
    Ok((rest, holdout))
}

/// Per-feature z-scoring fitted on one set and applied to others.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    shift: Array1<f64>,
    scale: Array1<f64>,
}

impl Standardizer {
    pub fn from_parts(shift: Array1<f64>, scale: Array1<f64>) -> Result<Self> {
        if shift.len() != scale.len() || shift.is_empty() {
            return Err(DmkdeError::InvalidArgument(format!(
                "shift and scale lengths differ or are empty: {} vs {}",
                shift.len(),
                scale.len()
            )));
        }
        if shift.iter().any(|v| !v.is_finite())
            || scale.iter().any(|s| !(s.is_finite() && *s > 0.0))
        {
            return Err(DmkdeError::InvalidArgument(
                "standardizer needs finite shifts and positive finite scales".into(),
            ));
        }
        Ok(Standardizer { shift, scale })
    }

    pub fn shift(&self) -> &Array1<f64> {
        &self.shift
    }

    pub fn scale(&self) -> &Array1<f64> {
        &self.scale
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn apply_row(&self, x: ArrayView1<f64>) -> Array1<f64> {
        (&x - &self.shift) / &self.scale
    }

    pub fn apply(&self, rows: ArrayView2<f64>) -> Array2<f64> {
        (&rows - &self.shift) / &self.scale
    }
}

/// Column means and population standard deviations; constant columns get scale 1.
pub fn fit_standardizer(features: ArrayView2<f64>) -> Result<Standardizer> {
    let m = features.nrows();
    if m < 2 {
        return Err(DmkdeError::InsufficientData(format!(
            "standardization needs at least 2 rows, got {m}"
        )));
    }
    let shift = features
        .mean_axis(Axis(0))
        .ok_or_else(|| DmkdeError::InsufficientData("no rows".into()))?;
    let scale = Array1::from_iter(features.axis_iter(Axis(1)).zip(&shift).map(|(col, &mean)| {
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m as f64;
        let sd = var.sqrt();
        if sd <= 1e-12 * mean.abs().max(1.0) {
            1.0
        } else {
            sd
        }
    }));
    Standardizer::from_parts(shift, scale)
}

/// Gaussian-mixture normals plus box-uniform anomalies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    #[serde(default = "default_synth_name")]
    pub name: String,
    /// One mean vector per component.
    pub means: Vec<Vec<f64>>,
    /// Per-component, per-dimension standard deviations (diagonal covariance).
    pub stds: Vec<Vec<f64>>,
    pub normals: usize,
    pub anomalies: usize,
    pub box_low: f64,
    pub box_high: f64,
    /// Anomalies are rejected inside this many standard deviations
    /// (diagonal Mahalanobis distance) of any component mean.
    #[serde(default = "default_exclusion")]
    pub exclusion: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_synth_name() -> String {
    "synthetic".to_string()
}

fn default_exclusion() -> f64 {
    3.0
}

impl SyntheticSpec {
    /// Two well-separated isotropic 2-D Gaussians, 500 normals and 25 box anomalies.
    pub fn two_gaussians(seed: u64) -> Self {
        SyntheticSpec {
            name: "two_gaussians".to_string(),
            means: vec![vec![0.0, 0.0], vec![6.0, 6.0]],
            stds: vec![vec![1.0, 1.0], vec![1.0, 1.0]],
            normals: 500,
            anomalies: 25,
            box_low: -8.0,
            box_high: 14.0,
            exclusion: 3.0,
            seed,
        }
    }

    /// Parse and validate a TOML spec; every failure is a config error.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: SyntheticSpec =
            toml::from_str(text).map_err(|e| DmkdeError::Config(e.to_string()))?;
        spec.validate().map_err(|e| match e {
            DmkdeError::InvalidArgument(msg) => DmkdeError::Config(msg),
            other => other,
        })?;
        Ok(spec)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| DmkdeError::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            DmkdeError::Config(msg) => DmkdeError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(DmkdeError::InvalidArgument(msg));
        if self.means.is_empty() {
            return bad("at least one mixture component is required".into());
        }
        if self.means.len() != self.stds.len() {
            return bad(format!(
                "{} means but {} std vectors",
                self.means.len(),
                self.stds.len()
            ));
        }
        let d = self.dim();
        if d == 0 {
            return bad("components must have at least one dimension".into());
        }
        for (mean, std) in self.means.iter().zip(&self.stds) {
            if mean.len() != d || std.len() != d {
                return bad(format!("every mean and std vector must have length {d}"));
            }
            if mean.iter().any(|v| !v.is_finite())
                || std.iter().any(|s| !(s.is_finite() && *s > 0.0))
            {
                return bad("means must be finite and stds positive".into());
            }
        }
        if self.normals == 0 {
            return bad("normals must be >= 1".into());
        }
        if !(self.box_low.is_finite() && self.box_high.is_finite() && self.box_low < self.box_high)
        {
            return bad(format!("invalid box [{}, {}]", self.box_low, self.box_high));
        }
        if !(self.exclusion >= 0.0 && self.exclusion.is_finite()) {
            return bad(format!("exclusion must be >= 0, got {}", self.exclusion));
        }
        Ok(())
    }

    /// Smallest diagonal Mahalanobis distance from `x` to a component mean.
    pub fn min_scaled_distance(&self, x: ArrayView1<f64>) -> f64 {
        self.means
            .iter()
            .zip(&self.stds)
            .map(|(mean, std)| {
                x.iter()
                    .zip(mean)
                    .zip(std)
                    .map(|((v, m), s)| ((v - m) / s).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Normals first (components filled in order, sizes differing by at most one),
/// then anomalies.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let d = spec.dim();
    let k = spec.means.len();
    let m = spec.normals + spec.anomalies;
    let mut features = Array2::<f64>::zeros((m, d));
    let mut labels = Vec::with_capacity(m);

    let mut normal_rng = SeededStream::new(spec.seed, streams::SYNTH_NORMALS);
    let mut row = 0;
    for c in 0..k {
        let size = spec.normals / k + usize::from(c < spec.normals % k);
        for _ in 0..size {
            for j in 0..d {
                features[[row, j]] =
                    spec.means[c][j] + spec.stds[c][j] * normal_rng.standard_normal();
            }
            labels.push(0);
            row += 1;
        }
    }

    let mut anomaly_rng = SeededStream::new(spec.seed, streams::SYNTH_ANOMALIES);
    let max_attempts = 10_000 + 1000 * spec.anomalies;
    let mut attempts = 0;
    let mut candidate = Array1::<f64>::zeros(d);
    while row < m {
        if attempts == max_attempts {
            return Err(DmkdeError::InvalidArgument(format!(
                "could not place anomalies outside the exclusion zone after {max_attempts} draws"
            )));
        }
        attempts += 1;
        candidate.mapv_inplace(|_| anomaly_rng.uniform_range(spec.box_low, spec.box_high));
        if spec.min_scaled_distance(candidate.view()) > spec.exclusion {
            features.row_mut(row).assign(&candidate);
            labels.push(1);
            row += 1;
        }
    }
    let names = (0..d).map(|j| format!("x{j}")).collect();
    LabeledDataset::new(spec.name.clone(), names, features, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn counting_dataset(normals: usize, anomalies: usize) -> LabeledDataset {
        let m = normals + anomalies;
        let labels = (0..m).map(|i| u8::from(i >= normals)).collect();
        LabeledDataset::new(
            "counting",
            vec!["x".into()],
            Array2::from_shape_fn((m, 1), |(i, _)| i as f64),
            labels,
        )
        .unwrap()
    }

    #[test]
    fn loads_small_file() {
        let f = write_tmp("a,b,label\n0,0,0\n1,1,0\n9,9,1\n");
        let ds = load_csv(f.path(), &CsvOptions::default()).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.dim(), 2);
        assert_abs_diff_eq!(ds.anomaly_rate(), 1.0 / 3.0);
        assert_eq!(ds.features(), array![[0.0, 0.0], [1.0, 1.0], [9.0, 9.0]]);
    }

    #[test]
    fn label_column_can_be_anywhere() {
        let f = write_tmp("label,a\n1,0.5\n0,2\n");
        let ds = load_csv(f.path(), &CsvOptions::default()).unwrap();
        assert_eq!(ds.labels(), &[1, 0]);
        assert_eq!(ds.feature_names(), &["a".to_string()]);
        let f = write_tmp("a,target\n0.5,1\n2,0\n");
        let opts = CsvOptions {
            label_column: LabelColumn::Last,
        };
        assert_eq!(load_csv(f.path(), &opts).unwrap().labels(), &[1, 0]);
    }

    #[test]
    fn unlabeled_features() {
        let f = write_tmp("a,b\n1,2\n3,4\n");
        let t = load_features(f.path(), &CsvOptions::default()).unwrap();
        assert!(t.labels.is_none());
        assert_eq!(t.features, array![[1.0, 2.0], [3.0, 4.0]]);
        let f = write_tmp("a,label\n1,0\n3,1\n");
        let t = load_features(f.path(), &CsvOptions::default()).unwrap();
        assert_eq!(t.labels, Some(vec![0, 1]));
    }

    #[test]
    fn rejects_nan_with_location() {
        let f = write_tmp("a,b,label\n0,0,0\n1,NaN,0\n");
        let err = load_csv(f.path(), &CsvOptions::default())
            .unwrap_err()
            .to_string();
        assert!(err.contains("row 3") && err.contains("column 'b'"), "{err}");
    }

    #[test]
    fn rejects_bad_labels_ragged_rows_and_text() {
        for contents in [
            "a,label\n0,2\n",
            "a,b,label\n0,1\n",
            "a,label\nx,0\n",
            "a,b\n1,0\n",
        ] {
            let f = write_tmp(contents);
            assert!(
                matches!(
                    load_csv(f.path(), &CsvOptions::default()),
                    Err(DmkdeError::Parse { .. })
                ),
                "{contents:?}"
            );
        }
        assert!(matches!(
            load_csv("/nonexistent/file.csv", &CsvOptions::default()),
            Err(DmkdeError::Io { .. })
        ));
    }

    #[test]
    fn split_counts_follow_rounding_rule() {
        let ds = counting_dataset(90, 10);
        let split = stratified_split(&ds, 0.3, 0.3, 11).unwrap();
        let anomalies = |idx: &[usize]| idx.iter().filter(|&&i| ds.labels()[i] == 1).count();
        assert_eq!((split.test.len(), anomalies(&split.test)), (30, 3));
        assert_eq!((split.val.len(), anomalies(&split.val)), (21, 2));
        assert_eq!((split.train.len(), anomalies(&split.train)), (49, 5));
        assert_eq!(split, stratified_split(&ds, 0.3, 0.3, 11).unwrap());
        assert_ne!(split, stratified_split(&ds, 0.3, 0.3, 12).unwrap());
    }

    #[test]
    fn split_rejects_missing_class() {
        let ds = counting_dataset(50, 0);
        assert!(matches!(
            stratified_split(&ds, 0.3, 0.3, 0),
            Err(DmkdeError::InsufficientClass { class: 1, .. })
        ));
        let ds = counting_dataset(50, 2);
        assert!(matches!(
            stratified_split(&ds, 0.3, 0.3, 0),
            Err(DmkdeError::InsufficientClass { class: 1, count: 2 })
        ));
        assert!(stratified_split(&ds, 0.0, 0.3, 0).is_err());
    }

    #[test]
    fn holdout_is_disjoint_and_stratified() {
        let ds = counting_dataset(70, 10);
        let (rest, hold) = stratified_holdout(ds.labels(), 0.3, 4).unwrap();
        assert_eq!(rest.len() + hold.len(), 80);
        assert_eq!(hold.iter().filter(|&&i| ds.labels()[i] == 1).count(), 3);
        assert!(hold.iter().all(|i| !rest.contains(i)));
    }

    #[test]
    fn standardizer_edge_cases() {
        let s = fit_standardizer(array![[1.0, 5.0], [3.0, 5.0]].view()).unwrap();
        assert_eq!(s.shift(), &array![2.0, 5.0]);
        assert_eq!(s.scale(), &array![1.0, 1.0]);
        assert!(matches!(
            fit_standardizer(array![[1.0, 2.0]].view()),
            Err(DmkdeError::InsufficientData(_))
        ));
        let constant = Array2::from_elem((10, 1), 0.1);
        assert_eq!(fit_standardizer(constant.view()).unwrap().scale()[0], 1.0);
    }

    #[test]
    fn standardized_columns_have_unit_stats() {
        let mut rng = SeededStream::new(3, 0);
        let x = Array2::from_shape_simple_fn((1000, 5), || rng.uniform_range(-20.0, 50.0));
        let s = fit_standardizer(x.view()).unwrap();
        let z = s.apply(x.view());
        for col in z.axis_iter(Axis(1)) {
            let mean = col.mean().unwrap();
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 1000.0).sqrt();
            assert!(mean.abs() < 1e-9);
            assert!((sd - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn synthetic_counts_and_determinism() {
        let spec = SyntheticSpec::two_gaussians(5);
        let ds = generate_synthetic(&spec).unwrap();
        assert_eq!(ds.len(), 525);
        assert_eq!(ds.anomaly_count(), 25);
        assert_abs_diff_eq!(ds.anomaly_rate(), 25.0 / 525.0);
        assert_eq!(ds, generate_synthetic(&spec).unwrap());
    }

    #[test]
    fn synthetic_anomalies_clear_the_exclusion_zone() {
        let spec = SyntheticSpec::two_gaussians(8);
        let ds = generate_synthetic(&spec).unwrap();
        for (x, &l) in ds.features().outer_iter().zip(ds.labels()) {
            if l == 1 {
                assert!(spec.min_scaled_distance(x) > 3.0);
            }
        }
    }

    #[test]
    fn synthetic_rejects_impossible_box() {
        let mut spec = SyntheticSpec::two_gaussians(1);
        spec.box_low = -1.0;
        spec.box_high = 1.0;
        assert!(generate_synthetic(&spec).is_err());
        spec.stds.pop();
        assert!(spec.validate().is_err());
    }

    #[test]
    fn reference_lookup() {
        let r = odds_reference("Arrhythmia").unwrap();
        assert_eq!((r.instances, r.dimensions), (452, 274));
        assert_eq!(ODDS_REFERENCE.len(), 20);
        assert!(odds_reference("unknown").is_none());
    }

    #[test]
    fn spec_from_toml() {
        let text = "means = [[0.0, 0.0]]\nstds = [[1.0, 2.0]]\nnormals = 10\nanomalies = 2\nbox_low = -9.0\nbox_high = 9.0\n";
        let spec = SyntheticSpec::from_toml_str(text).unwrap();
        assert_eq!(
            (spec.exclusion, spec.seed, spec.name.as_str()),
            (3.0, 0, "synthetic")
        );
        assert!(matches!(
            SyntheticSpec::from_toml_str("means = [[0.0]]\nstds = [[1.0]]\nnormals = 0\nanomalies = 0\nbox_low = 0.0\nbox_high = 1.0\n"),
            Err(DmkdeError::Config(_))
        ));
        assert!(matches!(
            SyntheticSpec::from_toml_str("colour = 1"),
            Err(DmkdeError::Config(_))
        ));
    }
}
