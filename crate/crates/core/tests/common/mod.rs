#![allow(dead_code)]

use dmkde::embedding::FeatureVector;
use dmkde::rng::SeededStream;
use ndarray::{Array1, Array2};

pub fn gaussian_rows(rng: &mut SeededStream, n: usize, d: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn((n, d), || scale * rng.standard_normal())
}

pub fn random_unit(rng: &mut SeededStream, dim: usize) -> FeatureVector {
    FeatureVector::normalized(Array1::from_shape_simple_fn(dim, || rng.standard_normal())).unwrap()
}

pub fn random_units(rng: &mut SeededStream, n: usize, dim: usize) -> Vec<FeatureVector> {
    (0..n).map(|_| random_unit(rng, dim)).collect()
}

/// Mean of squared inner products, written out with plain loops.
pub fn naive_qde(states: &[FeatureVector], q: &FeatureVector) -> f64 {
    let mut total = 0.0;
    for s in states {
        let mut dot = 0.0;
        for k in 0..q.dim() {
            dot += s.values()[k] * q.values()[k];
        }
        total += dot * dot;
    }
    total / states.len() as f64
}
