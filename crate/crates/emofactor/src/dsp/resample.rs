//! Random segment-wise resampling of frame sequences.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Segment and tempo ranges for random resampling.
///
/// Defaults: segments of 19-32 frames, each stretched by a factor drawn
/// uniformly from [0.5, 1.5].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RrConfig {
    pub seg_min: usize,
    pub seg_max: usize,
    pub alpha_min: f64,
    pub alpha_max: f64,
}

impl Default for RrConfig {
    fn default() -> Self {
        Self {
            seg_min: 19,
            seg_max: 32,
            alpha_min: 0.5,
            alpha_max: 1.5,
        }
    }
}

impl RrConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seg_min == 0 || self.seg_min > self.seg_max {
            return Err(Error::BadConfig(format!(
                "need 1 <= seg_min <= seg_max, got {}..{}",
                self.seg_min, self.seg_max
            )));
        }
        if !(self.alpha_min > 0.0 && self.alpha_min <= self.alpha_max) {
            return Err(Error::BadConfig(format!(
                "need 0 < alpha_min <= alpha_max, got {}..{}",
                self.alpha_min, self.alpha_max
            )));
        }
        Ok(())
    }

    /// Identity configuration: one draw protocol, no tempo change.
    pub fn identity() -> Self {
        Self {
            alpha_min: 1.0,
            alpha_max: 1.0,
            ..Self::default()
        }
    }

    /// Inclusive output-length bounds for an input of `t` frames:
    /// `[ceil(alpha_min * t), floor(alpha_max * t) + max_segments]` where
    /// `max_segments = ceil(t / seg_min)`.
    pub fn output_bounds(&self, t: usize) -> (usize, usize) {
        let lo = (self.alpha_min * t as f64).ceil() as usize;
        let max_segments = t.div_ceil(self.seg_min);
        let hi = (self.alpha_max * t as f64).floor() as usize + max_segments;
        (lo.max(1), hi)
    }
}

/// Resamples a frame sequence segment by segment.
///
/// The sequence is chopped left to right into segments whose lengths are
/// drawn uniformly from `[seg_min, seg_max]` (the final segment is whatever
/// remains). Each segment is linearly resampled to `ceil(alpha * len)`
/// frames with endpoints aligned, for a per-segment tempo factor `alpha`
/// drawn uniformly from `[alpha_min, alpha_max]`. Draw order per segment is
/// segment length first, then alpha, from a ChaCha8 stream seeded by `seed`.
///
/// With `alpha_min == alpha_max == 1` the output is bit-identical to the
/// input. Every output frame is a convex combination of at most two adjacent
/// input frames from the same segment.
pub fn random_resample(seq: &Array2<f64>, cfg: &RrConfig, seed: u64) -> Result<Array2<f64>> {
    cfg.validate()?;
    if seq.nrows() == 0 {
        return Err(Error::EmptySequence);
    }
    let t = seq.nrows();
    let width = seq.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut out_rows: Vec<f64> = Vec::with_capacity(t * width * 3 / 2);
    let mut n_out = 0usize;
    let mut pos = 0usize;
    while pos < t {
        let drawn = if cfg.seg_min == cfg.seg_max {
            cfg.seg_min
        } else {
            rng.gen_range(cfg.seg_min..=cfg.seg_max)
        };
        let seg_len = drawn.min(t - pos);
        let alpha = if cfg.alpha_min == cfg.alpha_max {
            cfg.alpha_min
        } else {
            rng.gen_range(cfg.alpha_min..=cfg.alpha_max)
        };
        let out_len = ((alpha * seg_len as f64).ceil() as usize).max(1);

        for j in 0..out_len {
            let src = if out_len == 1 {
                0.0
            } else {
                j as f64 * (seg_len - 1) as f64 / (out_len - 1) as f64
            };
            let i0 = src.floor() as usize;
            let frac = src - i0 as f64;
            let a = seq.row(pos + i0);
            if frac == 0.0 || i0 + 1 >= seg_len {
                out_rows.extend(a.iter());
            } else {
                let b = seq.row(pos + i0 + 1);
                out_rows.extend(a.iter().zip(b.iter()).map(|(&x, &y)| (1.0 - frac) * x + frac * y));
            }
        }
        n_out += out_len;
        pos += seg_len;
    }

    Ok(Array2::from_shape_vec((n_out, width), out_rows).expect("row-major assembly"))
}
