//! Minibatch optimizers with global-norm gradient clipping.

use serde::{Deserialize, Serialize};

use super::HasTensors;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimKind {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimConfig {
    pub kind: OptimKind,
    pub learning_rate: f64,
    pub clip_norm: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        OptimConfig {
            kind: OptimKind::Adam,
            learning_rate: 1e-4,
            clip_norm: 1.0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Optimizer state; one (m, v) pair per parameter tensor, allocated lazily.
pub struct Optimizer {
    cfg: OptimConfig,
    step: u64,
    moments: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Optimizer {
    pub fn new(cfg: OptimConfig) -> Self {
        Optimizer {
            cfg,
            step: 0,
            moments: Vec::new(),
        }
    }

    /// Applies one update. `params` and `grads` must enumerate tensors in the
    /// same fixed order (enforced by name).
    pub fn apply<P: HasTensors, G: HasTensors>(&mut self, params: &mut P, grads: &mut G) {
        let mut gts = grads.tensors_mut();
        let mut pts = params.tensors_mut();
        assert_eq!(gts.len(), pts.len(), "parameter/gradient tensor count mismatch");

        // Global norm clipping before any update.
        let mut sq = 0.0;
        for (_, g) in gts.iter_mut() {
            for &v in g.as_slice_mut().iter() {
                sq += v * v;
            }
        }
        let norm = sq.sqrt();
        let scale = if self.cfg.clip_norm > 0.0 && norm > self.cfg.clip_norm {
            self.cfg.clip_norm / norm
        } else {
            1.0
        };

        if self.moments.is_empty() {
            for (_, g) in gts.iter_mut() {
                let n = g.as_slice_mut().len();
                self.moments.push((vec![0.0; n], vec![0.0; n]));
            }
        }

        self.step += 1;
        let lr = self.cfg.learning_rate;
        let (b1, b2, eps) = (self.cfg.beta1, self.cfg.beta2, self.cfg.eps);
        let bc1 = 1.0 - b1.powi(self.step as i32);
        let bc2 = 1.0 - b2.powi(self.step as i32);

        for (k, ((pname, p), (gname, g))) in pts.iter_mut().zip(gts.iter_mut()).enumerate() {
            assert_eq!(pname, gname, "tensor order mismatch");
            let ps = p.as_slice_mut();
            let gs = g.as_slice_mut();
            match self.cfg.kind {
                OptimKind::Sgd => {
                    for (pv, gv) in ps.iter_mut().zip(gs.iter()) {
                        *pv -= lr * scale * gv;
                    }
                }
                OptimKind::Adam => {
                    let (m, v) = &mut self.moments[k];
                    for i in 0..ps.len() {
                        let gc = scale * gs[i];
                        m[i] = b1 * m[i] + (1.0 - b1) * gc;
                        v[i] = b2 * v[i] + (1.0 - b2) * gc * gc;
                        let mhat = m[i] / bc1;
                        let vhat = v[i] / bc2;
                        ps[i] -= lr * mhat / (vhat.sqrt() + eps);
                    }
                }
            }
        }
    }
}
