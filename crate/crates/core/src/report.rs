//! Run reports and per-sample prediction files.
//!
//! Reports serialize as JSON with sorted keys and shortest round-trip float
//! formatting, so two runs with the same inputs and seeds produce identical
//! bytes. Wall-clock timings are kept out of the report document and written
//! to a separate file.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Serialize, Serializer};

use crate::dataio::DatasetSummary;
use crate::detector::{FitConfig, GridReport, Label};
use crate::error::{DmkdeError, Result};
use crate::metrics::MetricSummary;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Finite floats as JSON numbers; infinities and NaN as the strings
/// `"inf"`, `"-inf"`, `"nan"`.
pub fn json_float<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SplitSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RefitSizes {
    pub train: usize,
    pub val: usize,
}

/// Agreement between the detector and the exact-KDE reference classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleReport {
    /// Bandwidth of the exact KDE (`σ/√2`, matching the squared kernel).
    pub kde_sigma: f64,
    pub label_agreement: f64,
    /// `None` when one of the score vectors is constant.
    pub spearman: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    pub dataset: DatasetSummary,
    pub config: FitConfig,
    pub split_seed: u64,
    pub split_sizes: SplitSizes,
    pub refit_sizes: Option<RefitSizes>,
    pub evaluated_split: String,
    #[serde(serialize_with = "json_float")]
    pub threshold: f64,
    pub anomaly_rate: f64,
    pub metrics: MetricSummary,
    pub oracle: Option<OracleReport>,
    pub grid: Option<GridReport>,
    #[serde(skip)]
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn to_canonical_json(&self) -> Result<String> {
        canonical_json(self)
    }
}

/// Serialize through an intermediate value so object keys come out sorted.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| DmkdeError::InvalidArgument(e.to_string()))?;
    let mut text =
        serde_json::to_string_pretty(&v).map_err(|e| DmkdeError::InvalidArgument(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// One scored sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionRow {
    /// Row index in the source dataset.
    pub index: usize,
    pub density: f64,
    pub label: Label,
    pub truth: Option<u8>,
}

/// `index,density,label,truth` with labels as 0/1 and an empty truth cell
/// when the input was unlabeled.
pub fn predictions_csv(rows: &[PredictionRow]) -> String {
    let mut out = String::from("index,density,label,truth\n");
    for r in rows {
        let truth = r.truth.map(|t| t.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.index,
            r.density,
            r.label.as_u8(),
            truth
        ));
    }
    out
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, text).map_err(|e| DmkdeError::io(path, e))
}

pub fn timings_json(timings: &BTreeMap<String, f64>) -> Result<String> {
    canonical_json(timings)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct T {
        #[serde(serialize_with = "json_float")]
        x: f64,
        b: u8,
        a: u8,
    }

    #[test]
    fn canonical_json_sorts_keys_and_encodes_infinity() {
        let text = canonical_json(&T {
            x: f64::NEG_INFINITY,
            b: 1,
            a: 2,
        })
        .unwrap();
        assert_eq!(text, "{\n  \"a\": 2,\n  \"b\": 1,\n  \"x\": \"-inf\"\n}\n");
    }

    #[test]
    fn predictions_layout() {
        let rows = [
            PredictionRow {
                index: 3,
                density: 0.25,
                label: Label::Anomaly,
                truth: Some(1),
            },
            PredictionRow {
                index: 4,
                density: 0.5,
                label: Label::Normal,
                truth: None,
            },
        ];
        assert_eq!(
            predictions_csv(&rows),
            "index,density,label,truth\n3,0.25,1,1\n4,0.5,0,\n"
        );
    }
}
