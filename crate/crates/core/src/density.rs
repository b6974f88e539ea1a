//! Mixed-state density matrix over embedded samples and the quadratic-form
//! density estimate `f(x) = φ(x)ᵀ R φ(x)`.
//!
//! `R` is the average of the pure states `φ_i φ_iᵀ`; after it is built, a
//! density query touches only the `D × D` matrix, never the training rows.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;

use crate::embedding::FeatureVector;
use crate::error::{DmkdeError, Result};

/// Rows stacked per rank-k update while building.
const BUILD_CHUNK: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: Array2<f64>,
    sample_count: usize,
}

impl DensityMatrix {
    /// Rebuild from a stored matrix. The matrix must be square and exactly symmetric.
    pub fn from_parts(matrix: Array2<f64>, sample_count: usize) -> Result<Self> {
        let (rows, cols) = matrix.dim();
        if rows == 0 || rows != cols {
            return Err(DmkdeError::InvalidArgument(format!(
                "density matrix must be square and non-empty, got {rows}x{cols}"
            )));
        }
        if sample_count == 0 {
            return Err(DmkdeError::InvalidArgument(
                "sample count must be >= 1".into(),
            ));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(DmkdeError::InvalidArgument(
                "non-finite density matrix entry".into(),
            ));
        }
        if matrix != matrix.t() {
            return Err(DmkdeError::InvalidArgument(
                "density matrix is not symmetric".into(),
            ));
        }
        Ok(DensityMatrix {
            matrix,
            sample_count,
        })
    }

    pub fn matrix(&self) -> ArrayView2<'_, f64> {
        self.matrix.view()
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn embed_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diag().sum()
    }
}

fn symmetrize(m: &mut Array2<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let avg = 0.5 * (m[[i, j]] + m[[j, i]]);
            m[[i, j]] = avg;
            m[[j, i]] = avg;
        }
    }
}

/// `R = (1/n) Σ φ_i φ_iᵀ`, symmetrized.
pub fn build_density_matrix(embeddings: &[FeatureVector]) -> Result<DensityMatrix> {
    let first = embeddings
        .first()
        .ok_or_else(|| DmkdeError::InsufficientData("no embeddings to build from".into()))?;
    let dim = first.dim();
    if let Some(bad) = embeddings.iter().find(|phi| phi.dim() != dim) {
        return Err(DmkdeError::InvalidArgument(format!(
            "mixed embedding dimensions: {dim} and {}",
            bad.dim()
        )));
    }
    let mut sum = Array2::<f64>::zeros((dim, dim));
    for chunk in embeddings.chunks(BUILD_CHUNK) {
        let mut stacked = Array2::<f64>::zeros((chunk.len(), dim));
        for (mut row, phi) in stacked.axis_iter_mut(Axis(0)).zip(chunk) {
            row.assign(&phi.values());
        }
        general_mat_mul(1.0, &stacked.t(), &stacked, 1.0, &mut sum);
    }
    let n = embeddings.len();
    sum /= n as f64;
    symmetrize(&mut sum);
    Ok(DensityMatrix {
        matrix: sum,
        sample_count: n,
    })
}

/// Sample-count weighted average of two density matrices.
pub fn merge_density_matrices(a: &DensityMatrix, b: &DensityMatrix) -> Result<DensityMatrix> {
    if a.embed_dim() != b.embed_dim() {
        return Err(DmkdeError::InvalidArgument(format!(
            "cannot merge density matrices of dimension {} and {}",
            a.embed_dim(),
            b.embed_dim()
        )));
    }
    let n = a.sample_count + b.sample_count;
    let wa = a.sample_count as f64 / n as f64;
    let wb = b.sample_count as f64 / n as f64;
    let mut matrix = &a.matrix * wa + &b.matrix * wb;
    symmetrize(&mut matrix);
    Ok(DensityMatrix {
        matrix,
        sample_count: n,
    })
}

/// `φᵀ R φ`.
pub fn estimate_density(dm: &DensityMatrix, phi: &FeatureVector) -> Result<f64> {
    if phi.dim() != dm.embed_dim() {
        return Err(DmkdeError::InvalidArgument(format!(
            "feature vector has dimension {}, density matrix expects {}",
            phi.dim(),
            dm.embed_dim()
        )));
    }
    let v = phi.values();
    Ok(v.dot(&dm.matrix.dot(&v)))
}

/// [`estimate_density`] over a batch, in input order.
pub fn estimate_density_batch(dm: &DensityMatrix, phis: &[FeatureVector]) -> Result<Vec<f64>> {
    phis.par_iter()
        .map(|phi| estimate_density(dm, phi))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array1};

    fn fv(values: Array1<f64>) -> FeatureVector {
        FeatureVector::new(values).unwrap()
    }

    #[test]
    fn single_outer_product() {
        let dm = build_density_matrix(&[fv(array![1.0, 0.0])]).unwrap();
        assert_eq!(dm.matrix(), array![[1.0, 0.0], [0.0, 0.0]]);
        assert_eq!(dm.sample_count(), 1);
    }

    #[test]
    fn orthogonal_average() {
        let dm = build_density_matrix(&[fv(array![1.0, 0.0]), fv(array![0.0, 1.0])]).unwrap();
        assert_eq!(dm.matrix(), array![[0.5, 0.0], [0.0, 0.5]]);
    }

    #[test]
    fn empty_and_mixed_inputs_fail() {
        assert!(matches!(
            build_density_matrix(&[]),
            Err(DmkdeError::InsufficientData(_))
        ));
        assert!(matches!(
            build_density_matrix(&[fv(array![1.0, 0.0]), fv(array![0.0, 0.0, 1.0])]),
            Err(DmkdeError::InvalidArgument(_))
        ));
    }

    #[test]
    fn self_merge_keeps_matrix() {
        let s = 0.5f64.sqrt();
        let a = build_density_matrix(&[fv(array![s, s]), fv(array![1.0, 0.0])]).unwrap();
        let m = merge_density_matrices(&a, &a).unwrap();
        assert_eq!(m.matrix(), a.matrix());
        assert_eq!(m.sample_count(), 4);
    }

    #[test]
    fn merge_of_singletons_is_build() {
        let p1 = fv(array![1.0, 0.0]);
        let p2 = fv(array![0.6, 0.8]);
        let merged = merge_density_matrices(
            &build_density_matrix(std::slice::from_ref(&p1)).unwrap(),
            &build_density_matrix(std::slice::from_ref(&p2)).unwrap(),
        )
        .unwrap();
        let direct = build_density_matrix(&[p1, p2]).unwrap();
        for (a, b) in merged.matrix().iter().zip(direct.matrix()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
    }

    #[test]
    fn merge_dimension_mismatch() {
        let a = build_density_matrix(&[fv(array![1.0, 0.0])]).unwrap();
        let b = build_density_matrix(&[fv(array![1.0, 0.0, 0.0])]).unwrap();
        assert!(matches!(
            merge_density_matrices(&a, &b),
            Err(DmkdeError::InvalidArgument(_))
        ));
    }

    #[test]
    fn density_of_own_state_and_orthogonal_state() {
        let s = 0.5f64.sqrt();
        let dm = build_density_matrix(&[fv(array![s, s])]).unwrap();
        assert_abs_diff_eq!(
            estimate_density(&dm, &fv(array![s, s])).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            estimate_density(&dm, &fv(array![s, -s])).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert!(matches!(
            estimate_density(&dm, &fv(array![1.0, 0.0, 0.0])),
            Err(DmkdeError::InvalidArgument(_))
        ));
    }

    #[test]
    fn batch_edge_cases() {
        let dm = build_density_matrix(&[fv(array![1.0, 0.0])]).unwrap();
        assert!(estimate_density_batch(&dm, &[]).unwrap().is_empty());
        let q = fv(array![0.6, 0.8]);
        assert_eq!(
            estimate_density_batch(&dm, std::slice::from_ref(&q)).unwrap(),
            vec![estimate_density(&dm, &q).unwrap()]
        );
    }

    #[test]
    fn from_parts_rejects_asymmetric() {
        assert!(DensityMatrix::from_parts(array![[1.0, 0.1], [0.0, 0.0]], 1).is_err());
        assert!(DensityMatrix::from_parts(array![[1.0, 0.0], [0.0, 0.0]], 0).is_err());
        assert!(DensityMatrix::from_parts(array![[1.0, 0.0], [0.0, 0.0]], 3).is_ok());
    }
}
