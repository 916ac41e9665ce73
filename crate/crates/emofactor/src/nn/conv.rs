//! 2-D convolution over (channels, time, freq) tensors via im2col, plus
//! max pooling. Stride is fixed at 1 with zero "same" padding; pooling
//! handles all downsampling.

use ndarray::{Array1, Array2, Array3};
use rand_chacha::ChaCha8Rng;

use super::init;

#[derive(Debug, Clone)]
pub struct Conv2d {
    /// (out_channels, in_channels * kt * kf)
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub in_channels: usize,
    pub kt: usize,
    pub kf: usize,
}

#[derive(Debug, Clone)]
pub struct Conv2dGrads {
    pub dw: Array2<f64>,
    pub db: Array1<f64>,
}

pub struct Conv2dCache {
    /// (T*F, in_channels * kt * kf)
    cols: Array2<f64>,
    t: usize,
    f: usize,
}

impl Conv2d {
    pub fn new(rng: &mut ChaCha8Rng, in_channels: usize, out_channels: usize, kt: usize, kf: usize) -> Self {
        assert!(kt % 2 == 1 && kf % 2 == 1, "same-padding needs odd kernels");
        let fan_in = in_channels * kt * kf;
        Conv2d {
            w: init::uniform_matrix(rng, out_channels, fan_in, fan_in),
            b: init::zeros_vector(out_channels),
            in_channels,
            kt,
            kf,
        }
    }

    pub fn out_channels(&self) -> usize {
        self.w.nrows()
    }

    pub fn zero_grads(&self) -> Conv2dGrads {
        Conv2dGrads {
            dw: Array2::zeros(self.w.raw_dim()),
            db: Array1::zeros(self.b.raw_dim()),
        }
    }

    fn im2col(&self, x: &Array3<f64>) -> Array2<f64> {
        let (c_in, t_len, f_len) = x.dim();
        assert_eq!(c_in, self.in_channels);
        let pt = self.kt / 2;
        let pf = self.kf / 2;
        let mut cols = Array2::zeros((t_len * f_len, c_in * self.kt * self.kf));
        for t in 0..t_len {
            for f in 0..f_len {
                let row = t * f_len + f;
                let mut col = 0;
                for c in 0..c_in {
                    for dt in 0..self.kt {
                        let ti = t as isize + dt as isize - pt as isize;
                        for df in 0..self.kf {
                            let fi = f as isize + df as isize - pf as isize;
                            if ti >= 0 && (ti as usize) < t_len && fi >= 0 && (fi as usize) < f_len {
                                cols[[row, col]] = x[[c, ti as usize, fi as usize]];
                            }
                            col += 1;
                        }
                    }
                }
            }
        }
        cols
    }

    pub fn forward(&self, x: &Array3<f64>) -> Array3<f64> {
        self.forward_cached(x).0
    }

    pub fn forward_cached(&self, x: &Array3<f64>) -> (Array3<f64>, Conv2dCache) {
        let (_, t_len, f_len) = x.dim();
        let cols = self.im2col(x);
        let y_mat = cols.dot(&self.w.t()); // (T*F, C_out)
        let c_out = self.out_channels();
        let mut y = Array3::zeros((c_out, t_len, f_len));
        for t in 0..t_len {
            for f in 0..f_len {
                let row = t * f_len + f;
                for c in 0..c_out {
                    y[[c, t, f]] = y_mat[[row, c]] + self.b[c];
                }
            }
        }
        (y, Conv2dCache { cols, t: t_len, f: f_len })
    }

    pub fn backward(&self, cache: &Conv2dCache, dy: &Array3<f64>, grads: &mut Conv2dGrads) -> Array3<f64> {
        let (c_out, t_len, f_len) = dy.dim();
        debug_assert_eq!((t_len, f_len), (cache.t, cache.f));

        let mut dy_mat = Array2::zeros((t_len * f_len, c_out));
        for c in 0..c_out {
            for t in 0..t_len {
                for f in 0..f_len {
                    dy_mat[[t * f_len + f, c]] = dy[[c, t, f]];
                }
            }
        }

        grads.dw += &dy_mat.t().dot(&cache.cols);
        for c in 0..c_out {
            grads.db[c] += dy_mat.column(c).sum();
        }

        // col2im: scatter-add the column gradient back onto the input grid.
        let dcols = dy_mat.dot(&self.w); // (T*F, C_in*kt*kf)
        let pt = self.kt / 2;
        let pf = self.kf / 2;
        let mut dx = Array3::zeros((self.in_channels, t_len, f_len));
        for t in 0..t_len {
            for f in 0..f_len {
                let row = t * f_len + f;
                let mut col = 0;
                for c in 0..self.in_channels {
                    for dt in 0..self.kt {
                        let ti = t as isize + dt as isize - pt as isize;
                        for df in 0..self.kf {
                            let fi = f as isize + df as isize - pf as isize;
                            if ti >= 0 && (ti as usize) < t_len && fi >= 0 && (fi as usize) < f_len {
                                dx[[c, ti as usize, fi as usize]] += dcols[[row, col]];
                            }
                            col += 1;
                        }
                    }
                }
            }
        }
        dx
    }
}

/// Non-overlapping max pooling; output dims are floor(T/pt) x floor(F/pf).
#[derive(Debug, Clone, Copy)]
pub struct MaxPool2d {
    pub pt: usize,
    pub pf: usize,
}

pub struct MaxPool2dCache {
    /// For every output cell, the (t, f) input coordinates of its max.
    argmax: Vec<(usize, usize)>,
    in_dim: (usize, usize, usize),
    out_dim: (usize, usize, usize),
}

impl MaxPool2d {
    pub fn forward_cached(&self, x: &Array3<f64>) -> (Array3<f64>, MaxPool2dCache) {
        let (c_n, t_len, f_len) = x.dim();
        let t_out = t_len / self.pt;
        let f_out = f_len / self.pf;
        assert!(t_out > 0 && f_out > 0, "input smaller than pool window");
        let mut y = Array3::zeros((c_n, t_out, f_out));
        let mut argmax = vec![(0usize, 0usize); c_n * t_out * f_out];
        for c in 0..c_n {
            for to in 0..t_out {
                for fo in 0..f_out {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_at = (to * self.pt, fo * self.pf);
                    for dt in 0..self.pt {
                        for df in 0..self.pf {
                            let (ti, fi) = (to * self.pt + dt, fo * self.pf + df);
                            let v = x[[c, ti, fi]];
                            // strict > keeps the first maximum on ties
                            if v > best {
                                best = v;
                                best_at = (ti, fi);
                            }
                        }
                    }
                    y[[c, to, fo]] = best;
                    argmax[(c * t_out + to) * f_out + fo] = best_at;
                }
            }
        }
        (
            y,
            MaxPool2dCache {
                argmax,
                in_dim: (c_n, t_len, f_len),
                out_dim: (c_n, t_out, f_out),
            },
        )
    }

    pub fn backward(&self, cache: &MaxPool2dCache, dy: &Array3<f64>) -> Array3<f64> {
        let (c_n, t_out, f_out) = cache.out_dim;
        debug_assert_eq!(dy.dim(), cache.out_dim);
        let mut dx = Array3::zeros(cache.in_dim);
        for c in 0..c_n {
            for to in 0..t_out {
                for fo in 0..f_out {
                    let (ti, fi) = cache.argmax[(c * t_out + to) * f_out + fo];
                    dx[[c, ti, fi]] += dy[[c, to, fo]];
                }
            }
        }
        dx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn conv_gradient_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let conv = Conv2d::new(&mut rng, 2, 3, 3, 3);
        let mut x = Array3::zeros((2, 4, 5));
        for v in x.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        let loss = |c: &Conv2d, x: &Array3<f64>| c.forward(x).mapv(|v| v * v).sum() / 2.0;

        let (y, cache) = conv.forward_cached(&x);
        let mut grads = conv.zero_grads();
        let dx = conv.backward(&cache, &y, &mut grads);

        let eps = 1e-6;
        for idx in 0..conv.w.len() {
            let mut cp = conv.clone();
            let mut cm = conv.clone();
            cp.w.as_slice_mut().unwrap()[idx] += eps;
            cm.w.as_slice_mut().unwrap()[idx] -= eps;
            let num = (loss(&cp, &x) - loss(&cm, &x)) / (2.0 * eps);
            assert!((num - grads.dw.as_slice().unwrap()[idx]).abs() < 1e-5);
        }
        for idx in 0..conv.b.len() {
            let mut cp = conv.clone();
            let mut cm = conv.clone();
            cp.b[idx] += eps;
            cm.b[idx] -= eps;
            let num = (loss(&cp, &x) - loss(&cm, &x)) / (2.0 * eps);
            assert!((num - grads.db[idx]).abs() < 1e-5);
        }
        for idx in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp.as_slice_mut().unwrap()[idx] += eps;
            xm.as_slice_mut().unwrap()[idx] -= eps;
            let num = (loss(&conv, &xp) - loss(&conv, &xm)) / (2.0 * eps);
            assert!((num - dx.as_slice().unwrap()[idx]).abs() < 1e-5);
        }
    }

    #[test]
    fn maxpool_routes_gradient_to_argmax() {
        let mut x = Array3::zeros((1, 2, 4));
        x[[0, 0, 1]] = 5.0;
        x[[0, 1, 3]] = 2.0;
        let pool = MaxPool2d { pt: 2, pf: 2 };
        let (y, cache) = pool.forward_cached(&x);
        assert_eq!(y.dim(), (1, 1, 2));
        assert_eq!(y[[0, 0, 0]], 5.0);
        assert_eq!(y[[0, 0, 1]], 2.0);

        let mut dy = Array3::zeros((1, 1, 2));
        dy[[0, 0, 0]] = 1.0;
        dy[[0, 0, 1]] = 7.0;
        let dx = pool.backward(&cache, &dy);
        assert_eq!(dx[[0, 0, 1]], 1.0);
        assert_eq!(dx[[0, 1, 3]], 7.0);
        assert_eq!(dx.sum(), 8.0);
    }
}
