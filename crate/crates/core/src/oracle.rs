//! Brute-force references for the fast path: exact Gaussian KDE, the
//! pairwise form of the density-matrix estimate, and a KDE-threshold
//! classifier that bypasses Fourier features entirely.
//!
//! `φᵀRφ` approximates the KDE of the *squared* kernel, i.e. a Gaussian of
//! bandwidth `σ/√2`, up to normalization. Comparisons against [`kde_exact`]
//! should therefore use rankings or labels, not raw values.

use std::f64::consts::PI;

use ndarray::{ArrayView1, ArrayView2};

use crate::detector::{classify, compute_threshold, Label};
use crate::embedding::FeatureVector;
use crate::error::{DmkdeError, Result};

/// `(1/n) Σ_i (2πσ²)^(-d/2) exp(-‖x - x_i‖² / (2σ²))`.
pub fn kde_exact(train: ArrayView2<f64>, sigma: f64, x: ArrayView1<f64>) -> Result<f64> {
    if train.nrows() == 0 {
        return Err(DmkdeError::InsufficientData("empty training set".into()));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(DmkdeError::InvalidArgument(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if x.len() != train.ncols() {
        return Err(DmkdeError::InvalidArgument(format!(
            "query has {} features, training rows {}",
            x.len(),
            train.ncols()
        )));
    }
    let d = train.ncols() as f64;
    let norm = (2.0 * PI * sigma * sigma).powf(-d / 2.0);
    let two_var = 2.0 * sigma * sigma;
    let sum: f64 = train
        .outer_iter()
        .map(|xi| {
            let sq: f64 = xi.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum();
            (-sq / two_var).exp()
        })
        .sum();
    Ok(norm * sum / train.nrows() as f64)
}

pub fn kde_scores(train: ArrayView2<f64>, sigma: f64, rows: ArrayView2<f64>) -> Result<Vec<f64>> {
    rows.outer_iter()
        .map(|x| kde_exact(train, sigma, x))
        .collect()
}

/// `(1/n) Σ_i ⟨φ, φ_i⟩²` by explicit loop, never forming a density matrix.
pub fn qde_bruteforce(embeddings: &[FeatureVector], phi: &FeatureVector) -> Result<f64> {
    if embeddings.is_empty() {
        return Err(DmkdeError::InsufficientData("no embeddings".into()));
    }
    let q = phi.values();
    let mut sum = 0.0;
    for e in embeddings {
        if e.dim() != phi.dim() {
            return Err(DmkdeError::InvalidArgument(format!(
                "embedding dimension {} differs from query dimension {}",
                e.dim(),
                phi.dim()
            )));
        }
        let overlap: f64 = e.values().iter().zip(&q).map(|(a, b)| a * b).sum();
        sum += overlap * overlap;
    }
    Ok(sum / embeddings.len() as f64)
}

/// Label `test` rows by thresholding exact KDE densities at the
/// `anomaly_rate` quantile of the validation densities.
pub fn reference_classifier(
    train: ArrayView2<f64>,
    val: ArrayView2<f64>,
    test: ArrayView2<f64>,
    anomaly_rate: f64,
    sigma: f64,
) -> Result<Vec<Label>> {
    if val.nrows() == 0 || test.nrows() == 0 {
        return Err(DmkdeError::InsufficientData(
            "empty validation or test set".into(),
        ));
    }
    let theta = compute_threshold(&kde_scores(train, sigma, val)?, anomaly_rate)?;
    Ok(kde_scores(train, sigma, test)?
        .into_iter()
        .map(|d| classify(d, theta))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, concatenate, Array1, Axis};

    #[test]
    fn single_kernel_at_center() {
        let v = kde_exact(array![[0.5]].view(), 1.0, array![0.5].view()).unwrap();
        assert_abs_diff_eq!(v, 0.3989422804, epsilon = 1e-10);
    }

    #[test]
    fn hand_evaluated_two_points() {
        let train = array![[0.0, 0.0], [2.0, 0.0]];
        let v = kde_exact(train.view(), 1.0, array![1.0, 0.0].view()).unwrap();
        let expected = 0.5 * (1.0 / (2.0 * PI)) * 2.0 * (-0.5f64).exp();
        assert_abs_diff_eq!(v, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(v, 0.0965323526, epsilon = 1e-10);
    }

    #[test]
    fn far_query_vanishes() {
        let v = kde_exact(array![[0.0, 0.0]].view(), 1.0, array![1e3, 0.0].view()).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn duplication_and_permutation_invariance() {
        let train = array![[0.0, 1.0], [2.0, -1.0], [0.3, 0.3]];
        let x = array![0.5, 0.1];
        let base = kde_exact(train.view(), 0.8, x.view()).unwrap();
        let doubled = concatenate(Axis(0), &[train.view(), train.view()]).unwrap();
        assert_abs_diff_eq!(
            kde_exact(doubled.view(), 0.8, x.view()).unwrap(),
            base,
            epsilon = 1e-15
        );
        let permuted = train.select(Axis(0), &[2, 0, 1]);
        assert_abs_diff_eq!(
            kde_exact(permuted.view(), 0.8, x.view()).unwrap(),
            base,
            epsilon = 1e-15
        );
    }

    #[test]
    fn kde_errors() {
        let empty = ndarray::Array2::<f64>::zeros((0, 2));
        assert!(matches!(
            kde_exact(empty.view(), 1.0, array![0.0, 0.0].view()),
            Err(DmkdeError::InsufficientData(_))
        ));
    }

    #[test]
    fn qde_trivial_cases() {
        let e1 = FeatureVector::new(array![1.0, 0.0, 0.0]).unwrap();
        let e2 = FeatureVector::new(array![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(qde_bruteforce(std::slice::from_ref(&e1), &e1).unwrap(), 1.0);
        let q = FeatureVector::new(array![0.0, 0.0, 1.0]).unwrap();
        assert_eq!(qde_bruteforce(&[e1, e2], &q).unwrap(), 0.0);
        assert!(qde_bruteforce(&[], &q).is_err());
        let short = FeatureVector::new(Array1::from_elem(1, 1.0)).unwrap();
        assert!(qde_bruteforce(&[short], &q).is_err());
    }

    #[test]
    fn reference_classifier_labels() {
        let train = array![[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [-0.1, 0.0], [0.0, -0.1]];
        let val = array![
            [0.05, 0.0],
            [0.0, 0.05],
            [0.2, 0.2],
            [-0.05, 0.0],
            [0.0, -0.05]
        ];
        let test = array![[0.0, 0.0], [40.0, 40.0]];
        let labels = reference_classifier(train.view(), val.view(), test.view(), 0.1, 0.5).unwrap();
        assert_eq!(labels, vec![Label::Normal, Label::Anomaly]);
        let labels = reference_classifier(train.view(), val.view(), test.view(), 0.0, 0.5).unwrap();
        assert!(labels.iter().all(|l| *l == Label::Normal));
    }
}
