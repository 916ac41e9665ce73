//! Seeded parameter initialization.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weight matrix of shape (out, in-like).
///
/// `fan_in` is passed explicitly because gate-stacked matrices (LSTM) have a
/// first dimension that is a multiple of the real output width.
pub fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, fan_in: usize) -> Array2<f64> {
    let a = 1.0 / (fan_in.max(1) as f64).sqrt();
    let mut m = Array2::zeros((rows, cols));
    for v in m.iter_mut() {
        *v = rng.gen_range(-a..a);
    }
    m
}

/// Zero-initialized bias vector.
pub fn zeros_vector(len: usize) -> Array1<f64> {
    Array1::zeros(len)
}

/// Uniform(-a, a) vector, for attention query vectors and similar.
pub fn uniform_vector(rng: &mut ChaCha8Rng, len: usize, fan_in: usize) -> Array1<f64> {
    let a = 1.0 / (fan_in.max(1) as f64).sqrt();
    let mut v = Array1::zeros(len);
    for x in v.iter_mut() {
        *x = rng.gen_range(-a..a);
    }
    v
}
