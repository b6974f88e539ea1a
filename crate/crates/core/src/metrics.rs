//! Binary classification metrics with the anomaly class (label 1) as positive.
//!
//! F1 uses the zero-division convention `F1 = 0` when a class has neither
//! predicted nor true members.

use serde::{Deserialize, Serialize};

use crate::error::{DmkdeError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    fn f1_positive(&self) -> f64 {
        f1_from(self.tp, self.fp, self.fn_)
    }

    fn f1_negative(&self) -> f64 {
        // Class 0 as the positive class: its true positives are our true negatives.
        f1_from(self.tn, self.fn_, self.fp)
    }
}

fn f1_from(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionCounts> {
    if y_true.len() != y_pred.len() {
        return Err(DmkdeError::InvalidArgument(format!(
            "label vectors differ in length: {} vs {}",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(DmkdeError::InvalidArgument(
            "label vectors are empty".into(),
        ));
    }
    let mut c = ConfusionCounts::default();
    for (i, (&t, &p)) in y_true.iter().zip(y_pred).enumerate() {
        match (t, p) {
            (1, 1) => c.tp += 1,
            (0, 1) => c.fp += 1,
            (0, 0) => c.tn += 1,
            (1, 0) => c.fn_ += 1,
            _ => {
                return Err(DmkdeError::InvalidArgument(format!(
                    "non-binary label at index {i}: truth {t}, prediction {p}"
                )))
            }
        }
    }
    Ok(c)
}

/// Support-weighted mean of the per-class F1 scores.
pub fn f1_weighted(y_true: &[u8], y_pred: &[u8]) -> Result<f64> {
    let c = confusion(y_true, y_pred)?;
    let positives = (c.tp + c.fn_) as f64;
    let negatives = (c.tn + c.fp) as f64;
    Ok((positives * c.f1_positive() + negatives * c.f1_negative()) / c.total() as f64)
}

/// F1 of the anomaly class alone.
pub fn f1_anomaly(y_true: &[u8], y_pred: &[u8]) -> Result<f64> {
    Ok(confusion(y_true, y_pred)?.f1_positive())
}

pub fn accuracy(y_true: &[u8], y_pred: &[u8]) -> Result<f64> {
    let c = confusion(y_true, y_pred)?;
    Ok((c.tp + c.tn) as f64 / c.total() as f64)
}

/// All summary metrics at once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub f1_weighted: f64,
    pub f1_anomaly: f64,
    pub accuracy: f64,
    pub confusion: ConfusionCounts,
}

pub fn summarize(y_true: &[u8], y_pred: &[u8]) -> Result<MetricSummary> {
    Ok(MetricSummary {
        f1_weighted: f1_weighted(y_true, y_pred)?,
        f1_anomaly: f1_anomaly(y_true, y_pred)?,
        accuracy: accuracy(y_true, y_pred)?,
        confusion: confusion(y_true, y_pred)?,
    })
}

/// Fraction of positions where two label vectors agree.
pub fn agreement(a: &[u8], b: &[u8]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(DmkdeError::InvalidArgument(format!(
            "cannot compare label vectors of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / a.len() as f64)
}

/// Ranks starting at 1, ties sharing their average rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(DmkdeError::InvalidArgument(format!(
            "spearman needs two equal-length sequences of at least 2 values, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    let n = ra.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return Err(DmkdeError::InvalidArgument(
            "spearman is undefined for a constant sequence".into(),
        ));
    }
    Ok(cov / (va * vb).sqrt())
}
