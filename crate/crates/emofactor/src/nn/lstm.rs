//! Single-layer unidirectional LSTM with explicit truncated-nowhere BPTT.

use ndarray::{Array1, Array2, Axis};
use rand_chacha::ChaCha8Rng;

use super::init;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone)]
pub struct Lstm {
    /// (4H, I), gate order i, f, g, o along the first axis.
    pub w_ih: Array2<f64>,
    /// (4H, H)
    pub w_hh: Array2<f64>,
    /// (4H)
    pub b: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct LstmGrads {
    pub dw_ih: Array2<f64>,
    pub dw_hh: Array2<f64>,
    pub db: Array1<f64>,
}

pub struct LstmCache {
    x: Array2<f64>,
    /// (T, 4H) post-activation gates [i | f | g | o]
    gates: Array2<f64>,
    /// (T, H) cell state after each step
    c: Array2<f64>,
    tanh_c: Array2<f64>,
    /// (T, H) hidden state entering each step (row 0 is zeros)
    h_prev: Array2<f64>,
}

impl Lstm {
    pub fn new(rng: &mut ChaCha8Rng, in_dim: usize, hidden: usize) -> Self {
        Lstm {
            w_ih: init::uniform_matrix(rng, 4 * hidden, in_dim, in_dim),
            w_hh: init::uniform_matrix(rng, 4 * hidden, hidden, hidden),
            b: init::zeros_vector(4 * hidden),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_hh.ncols()
    }

    pub fn zero_grads(&self) -> LstmGrads {
        LstmGrads {
            dw_ih: Array2::zeros(self.w_ih.raw_dim()),
            dw_hh: Array2::zeros(self.w_hh.raw_dim()),
            db: Array1::zeros(self.b.raw_dim()),
        }
    }

    /// Runs the recurrence from zero state over x (T, I); returns h (T, H).
    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        self.forward_cached(x).0
    }

    pub fn forward_cached(&self, x: &Array2<f64>) -> (Array2<f64>, LstmCache) {
        let t_len = x.nrows();
        let h_dim = self.hidden();

        // Input contributions for all steps at once.
        let xg = x.dot(&self.w_ih.t());

        let mut gates = Array2::zeros((t_len, 4 * h_dim));
        let mut c_all = Array2::zeros((t_len, h_dim));
        let mut tanh_c_all = Array2::zeros((t_len, h_dim));
        let mut h_prev_all = Array2::zeros((t_len, h_dim));
        let mut h_out = Array2::zeros((t_len, h_dim));

        let mut h = Array1::<f64>::zeros(h_dim);
        let mut c = Array1::<f64>::zeros(h_dim);

        for t in 0..t_len {
            h_prev_all.row_mut(t).assign(&h);
            let mut z = xg.row(t).to_owned() + self.w_hh.dot(&h) + &self.b;
            for k in 0..h_dim {
                z[k] = sigmoid(z[k]); // i
                z[h_dim + k] = sigmoid(z[h_dim + k]); // f
                z[2 * h_dim + k] = z[2 * h_dim + k].tanh(); // g
                z[3 * h_dim + k] = sigmoid(z[3 * h_dim + k]); // o
            }
            for k in 0..h_dim {
                c[k] = z[h_dim + k] * c[k] + z[k] * z[2 * h_dim + k];
                let tc = c[k].tanh();
                tanh_c_all[[t, k]] = tc;
                h[k] = z[3 * h_dim + k] * tc;
            }
            gates.row_mut(t).assign(&z);
            c_all.row_mut(t).assign(&c);
            h_out.row_mut(t).assign(&h);
        }

        (
            h_out,
            LstmCache {
                x: x.clone(),
                gates,
                c: c_all,
                tanh_c: tanh_c_all,
                h_prev: h_prev_all,
            },
        )
    }

    /// BPTT given upstream gradients for every hidden output (T, H).
    /// Accumulates parameter gradients and returns dL/dx (T, I).
    pub fn backward(&self, cache: &LstmCache, dh_out: &Array2<f64>, grads: &mut LstmGrads) -> Array2<f64> {
        let t_len = cache.x.nrows();
        let h_dim = self.hidden();

        let mut dz_all = Array2::<f64>::zeros((t_len, 4 * h_dim));
        let mut dh_carry = Array1::<f64>::zeros(h_dim);
        let mut dc_carry = Array1::<f64>::zeros(h_dim);

        for t in (0..t_len).rev() {
            let gate = cache.gates.row(t);
            let tanh_c = cache.tanh_c.row(t);
            let c_prev = if t == 0 {
                Array1::zeros(h_dim)
            } else {
                cache.c.row(t - 1).to_owned()
            };

            let mut dz = Array1::<f64>::zeros(4 * h_dim);
            for k in 0..h_dim {
                let (i, f, g, o) = (gate[k], gate[h_dim + k], gate[2 * h_dim + k], gate[3 * h_dim + k]);
                let dh = dh_out[[t, k]] + dh_carry[k];
                let do_ = dh * tanh_c[k];
                let dc = dc_carry[k] + dh * o * (1.0 - tanh_c[k] * tanh_c[k]);
                let di = dc * g;
                let df = dc * c_prev[k];
                let dg = dc * i;
                dc_carry[k] = dc * f;
                dz[k] = di * i * (1.0 - i);
                dz[h_dim + k] = df * f * (1.0 - f);
                dz[2 * h_dim + k] = dg * (1.0 - g * g);
                dz[3 * h_dim + k] = do_ * o * (1.0 - o);
            }
            dh_carry = self.w_hh.t().dot(&dz);
            dz_all.row_mut(t).assign(&dz);
        }

        grads.dw_ih += &dz_all.t().dot(&cache.x);
        grads.dw_hh += &dz_all.t().dot(&cache.h_prev);
        grads.db += &dz_all.sum_axis(Axis(0));
        dz_all.dot(&self.w_ih)
    }
}

/// A stack of LSTM layers applied in sequence.
#[derive(Debug, Clone)]
pub struct LstmStack {
    pub layers: Vec<Lstm>,
}

pub struct LstmStackCache {
    caches: Vec<LstmCache>,
}

impl LstmStack {
    pub fn new(rng: &mut ChaCha8Rng, in_dim: usize, hidden: usize, n_layers: usize) -> Self {
        assert!(n_layers >= 1);
        let mut layers = Vec::with_capacity(n_layers);
        layers.push(Lstm::new(rng, in_dim, hidden));
        for _ in 1..n_layers {
            layers.push(Lstm::new(rng, hidden, hidden));
        }
        LstmStack { layers }
    }

    pub fn zero_grads(&self) -> Vec<LstmGrads> {
        self.layers.iter().map(|l| l.zero_grads()).collect()
    }

    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut h = self.layers[0].forward(x);
        for layer in &self.layers[1..] {
            h = layer.forward(&h);
        }
        h
    }

    pub fn forward_cached(&self, x: &Array2<f64>) -> (Array2<f64>, LstmStackCache) {
        let mut caches = Vec::with_capacity(self.layers.len());
        let (mut h, c0) = self.layers[0].forward_cached(x);
        caches.push(c0);
        for layer in &self.layers[1..] {
            let (h2, c) = layer.forward_cached(&h);
            caches.push(c);
            h = h2;
        }
        (h, LstmStackCache { caches })
    }

    pub fn backward(
        &self,
        cache: &LstmStackCache,
        dh: &Array2<f64>,
        grads: &mut [LstmGrads],
    ) -> Array2<f64> {
        let mut d = dh.clone();
        for idx in (0..self.layers.len()).rev() {
            d = self.layers[idx].backward(&cache.caches[idx], &d, &mut grads[idx]);
        }
        d
    }
}
