//! Fully connected layer applied row-wise to a (time, features) matrix.

use ndarray::{Array1, Array2};
use rand_chacha::ChaCha8Rng;

use super::init;

#[derive(Debug, Clone)]
pub struct Linear {
    /// (out, in)
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct LinearGrads {
    pub dw: Array2<f64>,
    pub db: Array1<f64>,
}

pub struct LinearCache {
    x: Array2<f64>,
}

impl Linear {
    pub fn new(rng: &mut ChaCha8Rng, in_dim: usize, out_dim: usize) -> Self {
        Linear {
            w: init::uniform_matrix(rng, out_dim, in_dim, in_dim),
            b: init::zeros_vector(out_dim),
        }
    }

    pub fn zero_grads(&self) -> LinearGrads {
        LinearGrads {
            dw: Array2::zeros(self.w.raw_dim()),
            db: Array1::zeros(self.b.raw_dim()),
        }
    }

    pub fn out_dim(&self) -> usize {
        self.w.nrows()
    }

    /// y = x W^T + b, rows are time steps.
    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut y = x.dot(&self.w.t());
        y += &self.b;
        y
    }

    pub fn forward_cached(&self, x: &Array2<f64>) -> (Array2<f64>, LinearCache) {
        (self.forward(x), LinearCache { x: x.clone() })
    }

    /// Accumulates parameter gradients and returns dL/dx.
    pub fn backward(&self, cache: &LinearCache, dy: &Array2<f64>, grads: &mut LinearGrads) -> Array2<f64> {
        self.backward_from(&cache.x, dy, grads)
    }

    /// [`Linear::backward`] with the input supplied by the caller, for
    /// callers that already hold onto the layer input.
    pub fn backward_from(&self, x: &Array2<f64>, dy: &Array2<f64>, grads: &mut LinearGrads) -> Array2<f64> {
        grads.dw += &dy.t().dot(x);
        grads.db += &dy.sum_axis(ndarray::Axis(0));
        dy.dot(&self.w)
    }
}
