//! Attention-CRNN emotion classifier: a pooled convolution over the
//! three-channel mel input, five same-shape convolutions, a per-frame linear
//! layer, a single recurrent layer, additive attention pooling, and a linear
//! softmax head over the four emotion classes.

use ndarray::{Array1, Array2, Array3, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::model::{mel_log_min, mel_log_span};
use crate::ingest::record::EmotionLabel;
use crate::nn::attention::{AdditiveAttention, AdditiveAttentionGrads, AttentionCache};
use crate::nn::conv::{Conv2d, Conv2dCache, Conv2dGrads, MaxPool2d, MaxPool2dCache};
use crate::nn::linear::{Linear, LinearGrads};
use crate::nn::lstm::{Lstm, LstmCache, LstmGrads};
use crate::nn::ops::{relu, relu_backward, softmax};
use crate::nn::optim::OptimConfig;
use crate::nn::{HasTensors, TensorMut, TensorRef};
use crate::ser::input::{AcrnnInput, N_MELS};
use crate::util::{hash_json, seed_for};

/// Emotion classes predicted by the classifier.
pub const N_CLASSES: usize = 4;

const N_INPUT_CHANNELS: usize = 3;
const CONV_KT: usize = 5;
const CONV_KF: usize = 3;
const POOL_T: usize = 2;
const POOL_F: usize = 4;
const N_DEEP_CONVS: usize = 5;

/// Hyperparameters of the classifier and its training loop.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AcrnnConfig {
    /// Channel width of every convolution layer.
    pub conv_channels: usize,
    /// Width of the per-frame linear layer feeding the recurrent layer.
    pub fc_dim: usize,
    /// Hidden width of the recurrent layer.
    pub lstm_hidden: usize,
    /// Projection width inside the additive attention.
    pub attn_dim: usize,
    pub optimizer: OptimConfig,
    pub batch_size: usize,
    pub steps: usize,
    /// Validation cadence in optimizer steps.
    pub eval_every: usize,
    /// Consecutive non-improving validations tolerated before stopping
    /// early; 0 disables early stopping.
    pub patience: usize,
    /// Weight each class by inverse training frequency in the loss.
    pub inverse_frequency_weights: bool,
    pub seed: u64,
}

impl Default for AcrnnConfig {
    fn default() -> Self {
        AcrnnConfig {
            conv_channels: 32,
            fc_dim: 64,
            lstm_hidden: 128,
            attn_dim: 64,
            optimizer: OptimConfig {
                learning_rate: 1e-3,
                ..OptimConfig::default()
            },
            batch_size: 8,
            steps: 1000,
            eval_every: 50,
            patience: 6,
            inverse_frequency_weights: false,
            seed: 0,
        }
    }
}

impl AcrnnConfig {
    pub fn validate(&self) -> Result<()> {
        let positives = [
            ("conv_channels", self.conv_channels),
            ("fc_dim", self.fc_dim),
            ("lstm_hidden", self.lstm_hidden),
            ("attn_dim", self.attn_dim),
            ("batch_size", self.batch_size),
            ("steps", self.steps),
            ("eval_every", self.eval_every),
        ];
        for (name, v) in positives {
            if v == 0 {
                return Err(Error::BadConfig(format!("{name} must be positive")));
            }
        }
        if !(self.optimizer.learning_rate >= 0.0) {
            return Err(Error::BadConfig("learning_rate must be non-negative".into()));
        }
        if !(self.optimizer.clip_norm > 0.0) {
            return Err(Error::BadConfig("clip_norm must be positive".into()));
        }
        Ok(())
    }

    /// Stable hash of the configuration, stamped on artifacts.
    pub fn content_hash(&self) -> String {
        hash_json(self)
    }
}

/// Output of the classifier for one utterance.
#[derive(Debug, Clone)]
pub struct EmotionPosterior {
    /// Class probabilities over `{A, H, S, N}`; non-negative, sums to 1.
    pub probs: Array1<f64>,
    /// Attention weight per pooled frame; non-negative, sums to 1.
    pub attention: Array1<f64>,
}

impl EmotionPosterior {
    /// Argmax class; ties resolve to the lowest class index (A < H < S < N).
    pub fn predicted(&self) -> EmotionLabel {
        let mut best = 0;
        for i in 1..N_CLASSES {
            if self.probs[i] > self.probs[best] {
                best = i;
            }
        }
        EmotionLabel::from_index(best).expect("index in range")
    }
}

/// The classifier parameters plus the factor-mask tag of the data they were
/// trained on. The tag travels with the artifact and is re-checked whenever
/// the model is evaluated on a dataset.
#[derive(Debug, Clone)]
pub struct AcrnnModel {
    pub(crate) conv_in: Conv2d,
    pub(crate) convs: Vec<Conv2d>,
    pub(crate) fc: Linear,
    pub(crate) lstm: Lstm,
    pub(crate) attn: AdditiveAttention,
    pub(crate) head: Linear,
    pub config: AcrnnConfig,
    pub mask_tag: String,
}

pub(crate) struct AcrnnGrads {
    conv_in: Conv2dGrads,
    convs: Vec<Conv2dGrads>,
    fc: LinearGrads,
    lstm: LstmGrads,
    attn: AdditiveAttentionGrads,
    head: LinearGrads,
}

pub(crate) struct AcrnnCache {
    conv_in: Conv2dCache,
    z_in: Array3<f64>,
    pool: MaxPool2dCache,
    /// Per deep conv: its cache and pre-activation output.
    deep: Vec<(Conv2dCache, Array3<f64>)>,
    frames: Array2<f64>,
    z_fc: Array2<f64>,
    lstm: LstmCache,
    attn: AttentionCache,
    /// Recurrent hidden states, kept so tests can recompute the attention
    /// pooling independently; backward uses the layer caches instead.
    #[allow(dead_code)]
    pub(crate) h: Array2<f64>,
    pub(crate) pooled: Array1<f64>,
    pub(crate) attn_weights: Array1<f64>,
}

fn relu3(x: &Array3<f64>) -> Array3<f64> {
    x.mapv(|v| if v > 0.0 { v } else { 0.0 })
}

fn relu3_backward(x: &Array3<f64>, dy: &Array3<f64>) -> Array3<f64> {
    let mut dx = dy.clone();
    ndarray::Zip::from(&mut dx).and(x).for_each(|d, &v| {
        if v <= 0.0 {
            *d = 0.0;
        }
    });
    dx
}

/// Reshapes a `(C, T, F)` stack into `(T, C*F)` frame vectors.
fn to_frames(a: &Array3<f64>) -> Array2<f64> {
    let (c_n, t_len, f_len) = a.dim();
    Array2::from_shape_fn((t_len, c_n * f_len), |(t, k)| a[[k / f_len, t, k % f_len]])
}

/// Inverse of [`to_frames`].
fn from_frames(d: &Array2<f64>, c_n: usize, f_len: usize) -> Array3<f64> {
    let t_len = d.nrows();
    Array3::from_shape_fn((c_n, t_len, f_len), |(c, t, f)| d[[t, c * f_len + f]])
}

impl AcrnnModel {
    /// Fresh random initialization; deterministic in `config.seed`.
    pub fn new(config: AcrnnConfig, mask_tag: impl Into<String>) -> Result<AcrnnModel> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed_for("acrnn-init", config.seed));
        let c = config.conv_channels;
        let conv_in = Conv2d::new(&mut rng, N_INPUT_CHANNELS, c, CONV_KT, CONV_KF);
        let convs: Vec<Conv2d> = (0..N_DEEP_CONVS)
            .map(|_| Conv2d::new(&mut rng, c, c, CONV_KT, CONV_KF))
            .collect();
        let fc = Linear::new(&mut rng, c * (N_MELS / POOL_F), config.fc_dim);
        let lstm = Lstm::new(&mut rng, config.fc_dim, config.lstm_hidden);
        let attn = AdditiveAttention::new(&mut rng, config.lstm_hidden, config.attn_dim);
        let head = Linear::new(&mut rng, config.lstm_hidden, N_CLASSES);
        Ok(AcrnnModel {
            conv_in,
            convs,
            fc,
            lstm,
            attn,
            head,
            config,
            mask_tag: mask_tag.into(),
        })
    }

    pub(crate) fn zero_grads(&self) -> AcrnnGrads {
        AcrnnGrads {
            conv_in: self.conv_in.zero_grads(),
            convs: self.convs.iter().map(Conv2d::zero_grads).collect(),
            fc: self.fc.zero_grads(),
            lstm: self.lstm.zero_grads(),
            attn: self.attn.zero_grads(),
            head: self.head.zero_grads(),
        }
    }

    fn pool(&self) -> MaxPool2d {
        MaxPool2d {
            pt: POOL_T,
            pf: POOL_F,
        }
    }

    /// Maps raw channel values into the unit-scale range the convolutions
    /// expect: the static channel is shifted by the log floor, the
    /// difference channels are only scaled (differences have no offset).
    fn condition(&self, x: &Array3<f64>) -> Array3<f64> {
        let (lo, span) = (mel_log_min(), mel_log_span());
        let mut out = x.clone();
        out.index_axis_mut(Axis(0), 0).mapv_inplace(|v| (v - lo) / span);
        out.index_axis_mut(Axis(0), 1).mapv_inplace(|v| v / span);
        out.index_axis_mut(Axis(0), 2).mapv_inplace(|v| v / span);
        out
    }

    fn check_input(&self, x: &AcrnnInput) -> Result<()> {
        let (c_n, t_len, f_len) = x.channels.dim();
        if c_n != N_INPUT_CHANNELS || f_len != N_MELS || t_len < POOL_T {
            return Err(Error::ShapeMismatch {
                expected: format!("({N_INPUT_CHANNELS}, T>={POOL_T}, {N_MELS}) input channels"),
                got: format!("({c_n}, {t_len}, {f_len})"),
            });
        }
        Ok(())
    }

    /// Forward pass returning logits and attention weights.
    pub(crate) fn forward(&self, x: &AcrnnInput) -> Result<(Array1<f64>, Array1<f64>)> {
        let (logits, cache) = self.forward_cached(x)?;
        Ok((logits, cache.attn_weights))
    }

    pub(crate) fn forward_cached(&self, x: &AcrnnInput) -> Result<(Array1<f64>, AcrnnCache)> {
        self.check_input(x)?;
        let cond = self.condition(&x.channels);
        let (z_in, conv_in_cache) = self.conv_in.forward_cached(&cond);
        let a_in = relu3(&z_in);
        let (mut cur, pool_cache) = self.pool().forward_cached(&a_in);
        let mut deep = Vec::with_capacity(self.convs.len());
        for conv in &self.convs {
            let (z, cache) = conv.forward_cached(&cur);
            cur = relu3(&z);
            deep.push((cache, z));
        }
        let frames = to_frames(&cur);
        let z_fc = self.fc.forward(&frames);
        let a_fc = relu(&z_fc);
        let (h, lstm_cache) = self.lstm.forward_cached(&a_fc);
        let (pooled, attn_weights, attn_cache) = self.attn.forward_cached(&h);
        let pooled_row = pooled.clone().insert_axis(Axis(0));
        let logits = self.head.forward(&pooled_row).row(0).to_owned();
        let cache = AcrnnCache {
            conv_in: conv_in_cache,
            z_in,
            pool: pool_cache,
            deep,
            frames,
            z_fc,
            lstm: lstm_cache,
            attn: attn_cache,
            h,
            pooled,
            attn_weights,
        };
        Ok((logits, cache))
    }

    /// Accumulates gradients of a scalar loss with gradient `dlogits` at the
    /// head output.
    pub(crate) fn backward(&self, cache: &AcrnnCache, dlogits: &Array1<f64>, grads: &mut AcrnnGrads) {
        let pooled_row = cache.pooled.clone().insert_axis(Axis(0));
        let dlogits_row = dlogits.clone().insert_axis(Axis(0));
        let dpooled = self
            .head
            .backward_from(&pooled_row, &dlogits_row, &mut grads.head)
            .row(0)
            .to_owned();
        let dh = self.attn.backward(&cache.attn, &dpooled, &mut grads.attn);
        let da_fc = self.lstm.backward(&cache.lstm, &dh, &mut grads.lstm);
        let dz_fc = relu_backward(&cache.z_fc, &da_fc);
        let dframes = self.fc.backward_from(&cache.frames, &dz_fc, &mut grads.fc);
        let f_pooled = N_MELS / POOL_F;
        let mut d3 = from_frames(&dframes, self.config.conv_channels, f_pooled);
        for i in (0..self.convs.len()).rev() {
            let (cache_i, z_i) = &cache.deep[i];
            let dz = relu3_backward(z_i, &d3);
            d3 = self.convs[i].backward(cache_i, &dz, &mut grads.convs[i]);
        }
        let dp = self.pool().backward(&cache.pool, &d3);
        let dz_in = relu3_backward(&cache.z_in, &dp);
        self.conv_in.backward(&cache.conv_in, &dz_in, &mut grads.conv_in);
    }
}

/// Runs the classifier on one input.
pub fn acrnn_forward(x: &AcrnnInput, model: &AcrnnModel) -> Result<EmotionPosterior> {
    let (logits, attention) = model.forward(x)?;
    Ok(EmotionPosterior {
        probs: softmax(&logits),
        attention,
    })
}

const TAIL_NAMES: [&str; 10] = [
    "fc.w", "fc.b", "lstm.w_ih", "lstm.w_hh", "lstm.b", "attn.w", "attn.b", "attn.v", "head.w",
    "head.b",
];
const CONV_NAMES: [[&str; 2]; 6] = [
    ["conv0.w", "conv0.b"],
    ["conv1.w", "conv1.b"],
    ["conv2.w", "conv2.b"],
    ["conv3.w", "conv3.b"],
    ["conv4.w", "conv4.b"],
    ["conv5.w", "conv5.b"],
];

impl HasTensors for AcrnnModel {
    fn tensors(&self) -> Vec<(&'static str, TensorRef<'_>)> {
        let mut out: Vec<(&'static str, TensorRef<'_>)> = vec![
            (CONV_NAMES[0][0], TensorRef::M(&self.conv_in.w)),
            (CONV_NAMES[0][1], TensorRef::V(&self.conv_in.b)),
        ];
        for (i, c) in self.convs.iter().enumerate() {
            out.push((CONV_NAMES[i + 1][0], TensorRef::M(&c.w)));
            out.push((CONV_NAMES[i + 1][1], TensorRef::V(&c.b)));
        }
        out.extend([
            (TAIL_NAMES[0], TensorRef::M(&self.fc.w)),
            (TAIL_NAMES[1], TensorRef::V(&self.fc.b)),
            (TAIL_NAMES[2], TensorRef::M(&self.lstm.w_ih)),
            (TAIL_NAMES[3], TensorRef::M(&self.lstm.w_hh)),
            (TAIL_NAMES[4], TensorRef::V(&self.lstm.b)),
            (TAIL_NAMES[5], TensorRef::M(&self.attn.w)),
            (TAIL_NAMES[6], TensorRef::V(&self.attn.b)),
            (TAIL_NAMES[7], TensorRef::V(&self.attn.v)),
            (TAIL_NAMES[8], TensorRef::M(&self.head.w)),
            (TAIL_NAMES[9], TensorRef::V(&self.head.b)),
        ]);
        out
    }

    fn tensors_mut(&mut self) -> Vec<(&'static str, TensorMut<'_>)> {
        let mut out: Vec<(&'static str, TensorMut<'_>)> = vec![
            (CONV_NAMES[0][0], TensorMut::M(&mut self.conv_in.w)),
            (CONV_NAMES[0][1], TensorMut::V(&mut self.conv_in.b)),
        ];
        for (i, c) in self.convs.iter_mut().enumerate() {
            out.push((CONV_NAMES[i + 1][0], TensorMut::M(&mut c.w)));
            out.push((CONV_NAMES[i + 1][1], TensorMut::V(&mut c.b)));
        }
        out.extend([
            (TAIL_NAMES[0], TensorMut::M(&mut self.fc.w)),
            (TAIL_NAMES[1], TensorMut::V(&mut self.fc.b)),
            (TAIL_NAMES[2], TensorMut::M(&mut self.lstm.w_ih)),
            (TAIL_NAMES[3], TensorMut::M(&mut self.lstm.w_hh)),
            (TAIL_NAMES[4], TensorMut::V(&mut self.lstm.b)),
            (TAIL_NAMES[5], TensorMut::M(&mut self.attn.w)),
            (TAIL_NAMES[6], TensorMut::V(&mut self.attn.b)),
            (TAIL_NAMES[7], TensorMut::V(&mut self.attn.v)),
            (TAIL_NAMES[8], TensorMut::M(&mut self.head.w)),
            (TAIL_NAMES[9], TensorMut::V(&mut self.head.b)),
        ]);
        out
    }
}

impl HasTensors for AcrnnGrads {
    fn tensors(&self) -> Vec<(&'static str, TensorRef<'_>)> {
        let mut out: Vec<(&'static str, TensorRef<'_>)> = vec![
            (CONV_NAMES[0][0], TensorRef::M(&self.conv_in.dw)),
            (CONV_NAMES[0][1], TensorRef::V(&self.conv_in.db)),
        ];
        for (i, c) in self.convs.iter().enumerate() {
            out.push((CONV_NAMES[i + 1][0], TensorRef::M(&c.dw)));
            out.push((CONV_NAMES[i + 1][1], TensorRef::V(&c.db)));
        }
        out.extend([
            (TAIL_NAMES[0], TensorRef::M(&self.fc.dw)),
            (TAIL_NAMES[1], TensorRef::V(&self.fc.db)),
            (TAIL_NAMES[2], TensorRef::M(&self.lstm.dw_ih)),
            (TAIL_NAMES[3], TensorRef::M(&self.lstm.dw_hh)),
            (TAIL_NAMES[4], TensorRef::V(&self.lstm.db)),
            (TAIL_NAMES[5], TensorRef::M(&self.attn.dw)),
            (TAIL_NAMES[6], TensorRef::V(&self.attn.db)),
            (TAIL_NAMES[7], TensorRef::V(&self.attn.dv)),
            (TAIL_NAMES[8], TensorRef::M(&self.head.dw)),
            (TAIL_NAMES[9], TensorRef::V(&self.head.db)),
        ]);
        out
    }

    fn tensors_mut(&mut self) -> Vec<(&'static str, TensorMut<'_>)> {
        let mut out: Vec<(&'static str, TensorMut<'_>)> = vec![
            (CONV_NAMES[0][0], TensorMut::M(&mut self.conv_in.dw)),
            (CONV_NAMES[0][1], TensorMut::V(&mut self.conv_in.db)),
        ];
        for (i, c) in self.convs.iter_mut().enumerate() {
            out.push((CONV_NAMES[i + 1][0], TensorMut::M(&mut c.dw)));
            out.push((CONV_NAMES[i + 1][1], TensorMut::V(&mut c.db)));
        }
        out.extend([
            (TAIL_NAMES[0], TensorMut::M(&mut self.fc.dw)),
            (TAIL_NAMES[1], TensorMut::V(&mut self.fc.db)),
            (TAIL_NAMES[2], TensorMut::M(&mut self.lstm.dw_ih)),
            (TAIL_NAMES[3], TensorMut::M(&mut self.lstm.dw_hh)),
            (TAIL_NAMES[4], TensorMut::V(&mut self.lstm.db)),
            (TAIL_NAMES[5], TensorMut::M(&mut self.attn.dw)),
            (TAIL_NAMES[6], TensorMut::V(&mut self.attn.db)),
            (TAIL_NAMES[7], TensorMut::V(&mut self.attn.dv)),
            (TAIL_NAMES[8], TensorMut::M(&mut self.head.dw)),
            (TAIL_NAMES[9], TensorMut::V(&mut self.head.db)),
        ]);
        out
    }
}
