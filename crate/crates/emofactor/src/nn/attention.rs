//! Single-query additive attention pooling over a hidden sequence.

use ndarray::{Array1, Array2, Axis};
use rand_chacha::ChaCha8Rng;

use super::init;

#[derive(Debug, Clone)]
pub struct AdditiveAttention {
    /// (attn_dim, hidden)
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    /// (attn_dim)
    pub v: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct AdditiveAttentionGrads {
    pub dw: Array2<f64>,
    pub db: Array1<f64>,
    pub dv: Array1<f64>,
}

pub struct AttentionCache {
    h: Array2<f64>,
    /// (T, attn_dim) tanh-activated projections
    u: Array2<f64>,
    /// (T) softmax weights
    a: Array1<f64>,
}

impl AdditiveAttention {
    pub fn new(rng: &mut ChaCha8Rng, hidden: usize, attn_dim: usize) -> Self {
        AdditiveAttention {
            w: init::uniform_matrix(rng, attn_dim, hidden, hidden),
            b: init::zeros_vector(attn_dim),
            v: init::uniform_vector(rng, attn_dim, attn_dim),
        }
    }

    pub fn zero_grads(&self) -> AdditiveAttentionGrads {
        AdditiveAttentionGrads {
            dw: Array2::zeros(self.w.raw_dim()),
            db: Array1::zeros(self.b.raw_dim()),
            dv: Array1::zeros(self.v.raw_dim()),
        }
    }

    /// Returns (pooled vector (H), attention weights (T)).
    pub fn forward(&self, h: &Array2<f64>) -> (Array1<f64>, Array1<f64>) {
        let (pooled, a, _) = self.forward_cached(h);
        (pooled, a)
    }

    pub fn forward_cached(&self, h: &Array2<f64>) -> (Array1<f64>, Array1<f64>, AttentionCache) {
        let mut u = h.dot(&self.w.t());
        u += &self.b;
        u.mapv_inplace(f64::tanh);
        let e = u.dot(&self.v); // (T)
        let a = super::ops::softmax(&e);
        let pooled = a.dot(h); // (H)
        (
            pooled,
            a.clone(),
            AttentionCache { h: h.clone(), u, a },
        )
    }

    /// Backward from dL/dpooled. Accumulates parameter grads, returns dL/dh.
    pub fn backward(
        &self,
        cache: &AttentionCache,
        dpooled: &Array1<f64>,
        grads: &mut AdditiveAttentionGrads,
    ) -> Array2<f64> {
        let t_len = cache.h.nrows();

        // pooled = sum_t a_t h_t
        let mut dh: Array2<f64> = Array2::zeros(cache.h.raw_dim());
        let mut da = Array1::<f64>::zeros(t_len);
        for t in 0..t_len {
            da[t] = cache.h.row(t).dot(dpooled);
            let mut row = dh.row_mut(t);
            row.assign(&(dpooled * cache.a[t]));
        }

        // softmax backward
        let dot = cache.a.dot(&da);
        let de: Array1<f64> = (0..t_len).map(|t| cache.a[t] * (da[t] - dot)).collect();

        // e_t = v . u_t, u_t = tanh(w h_t + b)
        for t in 0..t_len {
            grads.dv += &(cache.u.row(t).to_owned() * de[t]);
        }
        let du = {
            let mut du = Array2::zeros(cache.u.raw_dim());
            for t in 0..t_len {
                du.row_mut(t).assign(&(&self.v * de[t]));
            }
            du
        };
        let dz = &du * &cache.u.mapv(|u| 1.0 - u * u);
        grads.dw += &dz.t().dot(&cache.h);
        grads.db += &dz.sum_axis(Axis(0));
        dh += &dz.dot(&self.w);
        dh
    }
}
