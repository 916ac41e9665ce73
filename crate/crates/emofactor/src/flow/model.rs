//! The factorized autoencoder: three frame-stream encoders (content, rhythm,
//! pitch) plus a frozen per-utterance timbre vector feed a recurrent decoder
//! that reconstructs the 80-band log mel spectrogram.
//!
//! Factor removal works on encoder *inputs*: a removed factor's input is
//! zeroed (same shape) and the latent becomes whatever the encoder emits for
//! zeros. The timbre vector always passes through.

use ndarray::{s, Array1, Array2};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dsp::mel::{MelSpectrogram, N_MELS};
use crate::dsp::pitch::PitchContour;
use crate::dsp::resample::random_resample;
use crate::error::{Error, Result};
use crate::nn::linear::{Linear, LinearGrads};
use crate::nn::lstm::{LstmGrads, LstmStack, LstmStackCache};
use crate::nn::ops::{relu, relu_backward};
use crate::nn::serialize::params_to_bytes;
use crate::nn::{HasTensors, TensorMut, TensorRef};
use crate::timbre::{timbre_encode, TimbreModel};
use crate::util;

use super::config::{FactorMask, SpeechFlowConfig};

/// Lower edge of the fixed affine input conditioning: the log of the mel
/// energy floor, so floored (silent) cells map to 0.
pub(crate) fn mel_log_min() -> f64 {
    1e-10f64.ln()
}

/// Width of the conditioning range; 5.0 is a generous upper log-energy edge,
/// so typical spectrogram cells land near [0, 1].
pub(crate) fn mel_log_span() -> f64 {
    5.0 - mel_log_min()
}

fn scale_frames(frames: &Array2<f64>) -> Array2<f64> {
    let (lo, span) = (mel_log_min(), mel_log_span());
    frames.mapv(|v| (v - lo) / span)
}

fn unscale_frames(frames: &Array2<f64>) -> Array2<f64> {
    let (lo, span) = (mel_log_min(), mel_log_span());
    frames.mapv(|v| v * span + lo)
}

/// Per-encoder copies of the inputs with removed factors zeroed.
///
/// Field order follows the encoder list: `content` and `rhythm` are copies of
/// the mel spectrogram, `pitch` is a copy of the normalized pitch contour.
#[derive(Debug, Clone)]
pub struct MaskedInputs {
    pub content: MelSpectrogram,
    pub rhythm: MelSpectrogram,
    pub pitch: PitchContour,
}

/// Builds the three encoder inputs from one utterance, zeroing every factor
/// the mask removes. Temporal extents are preserved: zeroed, never truncated.
pub fn mask_inputs(s: &MelSpectrogram, p: &PitchContour, mask: FactorMask) -> Result<MaskedInputs> {
    let t = s.frames.nrows();
    if t != p.n_frames() {
        return Err(Error::FrameMisaligned { mel: t, pitch: p.n_frames() });
    }
    let zero_mel = || {
        MelSpectrogram::new(
            Array2::zeros((t, N_MELS)),
            s.hop_secs,
            s.sample_rate,
        )
    };
    let content = if mask.content { s.clone() } else { zero_mel() };
    let rhythm = if mask.rhythm { s.clone() } else { zero_mel() };
    let pitch = if mask.pitch {
        p.clone()
    } else {
        PitchContour {
            f0: vec![0.0; t],
            voiced: vec![false; t],
            hop_secs: p.hop_secs,
            normalized: p.normalized,
        }
    };
    Ok(MaskedInputs { content, rhythm, pitch })
}

/// Fresh random-resampling draws for one training pass; reconstruction for
/// evaluation runs without them (identity resampling).
#[derive(Debug, Clone, Copy)]
pub struct RrSeeds {
    pub content: u64,
    pub pitch: u64,
}

/// Per-utterance latents. The three frame streams run at their encoders'
/// downsampled rates; the timbre vector has no time axis.
#[derive(Debug, Clone)]
pub struct LatentBundle {
    /// (T_r, d_r) rhythm stream.
    pub z_r: Array2<f64>,
    /// (T_f, d_f) pitch stream.
    pub z_f: Array2<f64>,
    /// (T_c, d_c) content stream.
    pub z_c: Array2<f64>,
    /// (d_t) per-utterance timbre vector.
    pub z_t: Array1<f64>,
    /// Carried over from the source spectrogram so decoding can rebuild one.
    pub hop_secs: f64,
    pub sample_rate: u32,
}

/// One encoder: a frame projection, a recurrent stack, temporal average
/// pooling by `down`, and a linear head to the latent width.
#[derive(Debug, Clone)]
pub(crate) struct Encoder {
    pub proj: Linear,
    pub lstm: LstmStack,
    pub head: Linear,
    pub down: usize,
}

pub(crate) struct EncoderGrads {
    proj: LinearGrads,
    lstm: Vec<LstmGrads>,
    head: LinearGrads,
}

struct EncoderCache {
    /// Conditioned (and possibly resampled) input frames.
    x: Array2<f64>,
    /// Pre-activation projection output.
    z: Array2<f64>,
    lstm: LstmStackCache,
    /// Input to the latent head (pooled recurrent states).
    pooled: Array2<f64>,
    /// (start, len) of each pooling block over the recurrent states.
    blocks: Vec<(usize, usize)>,
}

impl Encoder {
    fn new(rng: &mut ChaCha8Rng, in_dim: usize, hidden: usize, n_layers: usize, d_out: usize, down: usize) -> Self {
        Encoder {
            proj: Linear::new(rng, in_dim, hidden),
            lstm: LstmStack::new(rng, hidden, hidden, n_layers),
            head: Linear::new(rng, hidden, d_out),
            down,
        }
    }

    fn zero_grads(&self) -> EncoderGrads {
        EncoderGrads {
            proj: self.proj.zero_grads(),
            lstm: self.lstm.zero_grads(),
            head: self.head.zero_grads(),
        }
    }

    fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        let a = relu(&self.proj.forward(x));
        let h = self.lstm.forward(&a);
        let (pooled, _) = avg_pool_rows(&h, self.down);
        self.head.forward(&pooled)
    }

    fn forward_cached(&self, x: Array2<f64>) -> (Array2<f64>, EncoderCache) {
        let z = self.proj.forward(&x);
        let a = relu(&z);
        let (h, lstm) = self.lstm.forward_cached(&a);
        let (pooled, blocks) = avg_pool_rows(&h, self.down);
        let latent = self.head.forward(&pooled);
        (latent, EncoderCache { x, z, lstm, pooled, blocks })
    }

    fn backward(&self, cache: &EncoderCache, dlatent: &Array2<f64>, grads: &mut EncoderGrads) {
        let dpooled = self.head.backward_from(&cache.pooled, dlatent, &mut grads.head);
        let dh = avg_pool_backward(&dpooled, &cache.blocks, cache.z.nrows());
        let da = self.lstm.backward(&cache.lstm, &dh, &mut grads.lstm);
        let dz = relu_backward(&cache.z, &da);
        // The gradient w.r.t. the input frames is data, not parameters.
        let _ = self.proj.backward_from(&cache.x, &dz, &mut grads.proj);
    }
}

/// The decoder: latent streams are repeated up to the frame rate, the timbre
/// vector is broadcast over time, and a recurrent stack maps the concatenated
/// conditioning to 80 mel bands (in conditioned units).
#[derive(Debug, Clone)]
pub(crate) struct Decoder {
    pub input: Linear,
    pub lstm: LstmStack,
    pub out: Linear,
}

pub(crate) struct DecoderGrads {
    input: LinearGrads,
    lstm: Vec<LstmGrads>,
    out: LinearGrads,
}

struct DecoderCache {
    x: Array2<f64>,
    z: Array2<f64>,
    lstm: LstmStackCache,
    h: Array2<f64>,
}

impl Decoder {
    fn new(rng: &mut ChaCha8Rng, in_dim: usize, hidden: usize, n_layers: usize) -> Self {
        Decoder {
            input: Linear::new(rng, in_dim, hidden),
            lstm: LstmStack::new(rng, hidden, hidden, n_layers),
            out: Linear::new(rng, hidden, N_MELS),
        }
    }

    fn zero_grads(&self) -> DecoderGrads {
        DecoderGrads {
            input: self.input.zero_grads(),
            lstm: self.lstm.zero_grads(),
            out: self.out.zero_grads(),
        }
    }

    fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        let a = relu(&self.input.forward(x));
        let h = self.lstm.forward(&a);
        self.out.forward(&h)
    }

    fn forward_cached(&self, x: Array2<f64>) -> (Array2<f64>, DecoderCache) {
        let z = self.input.forward(&x);
        let a = relu(&z);
        let (h, lstm) = self.lstm.forward_cached(&a);
        let y = self.out.forward(&h);
        (y, DecoderCache { x, z, lstm, h })
    }

    fn backward(&self, cache: &DecoderCache, dy: &Array2<f64>, grads: &mut DecoderGrads) -> Array2<f64> {
        let dh = self.out.backward_from(&cache.h, dy, &mut grads.out);
        let da = self.lstm.backward(&cache.lstm, &dh, &mut grads.lstm);
        let dz = relu_backward(&cache.z, &da);
        self.input.backward_from(&cache.x, &dz, &mut grads.input)
    }
}

/// Mean over non-overlapping row blocks of length `down` (the last block may
/// be shorter). Returns the pooled rows and the block extents.
fn avg_pool_rows(h: &Array2<f64>, down: usize) -> (Array2<f64>, Vec<(usize, usize)>) {
    let t = h.nrows();
    let n = t.div_ceil(down);
    let mut pooled = Array2::zeros((n, h.ncols()));
    let mut blocks = Vec::with_capacity(n);
    for i in 0..n {
        let start = i * down;
        let len = down.min(t - start);
        let mut acc = h.row(start).to_owned();
        for r in start + 1..start + len {
            acc += &h.row(r);
        }
        acc /= len as f64;
        pooled.row_mut(i).assign(&acc);
        blocks.push((start, len));
    }
    (pooled, blocks)
}

fn avg_pool_backward(dpooled: &Array2<f64>, blocks: &[(usize, usize)], t: usize) -> Array2<f64> {
    let mut dh = Array2::zeros((t, dpooled.ncols()));
    for (i, &(start, len)) in blocks.iter().enumerate() {
        let g = dpooled.row(i).mapv(|v| v / len as f64);
        for r in start..start + len {
            let mut row = dh.row_mut(r);
            row += &g;
        }
    }
    dh
}

/// Repeats each latent row `down` times up to exactly `t` rows; if the latent
/// runs short the last row is repeated, if it runs long the tail is unused.
fn upsample_rows(z: &Array2<f64>, down: usize, t: usize) -> Array2<f64> {
    let rows = z.nrows();
    Array2::from_shape_fn((t, z.ncols()), |(i, j)| z[[(i / down).min(rows - 1), j]])
}

fn upsample_backward(dup: &Array2<f64>, down: usize, rows: usize) -> Array2<f64> {
    let mut dz = Array2::zeros((rows, dup.ncols()));
    for i in 0..dup.nrows() {
        let r = (i / down).min(rows - 1);
        let mut row = dz.row_mut(r);
        row += &dup.row(i);
    }
    dz
}

/// The full autoencoder plus the frozen timbre encoder it conditions on.
/// Only the autoencoder's own parameters are trainable.
#[derive(Debug, Clone)]
pub struct SpeechFlowModel {
    pub(crate) enc_c: Encoder,
    pub(crate) enc_r: Encoder,
    pub(crate) enc_f: Encoder,
    pub(crate) dec: Decoder,
    pub timbre: TimbreModel,
    pub config: SpeechFlowConfig,
}

pub struct FlowGrads {
    enc_c: EncoderGrads,
    enc_r: EncoderGrads,
    enc_f: EncoderGrads,
    dec: DecoderGrads,
}

impl SpeechFlowModel {
    /// Builds a freshly initialized model around a trained timbre encoder.
    /// The timbre encoder is stored but never updated.
    pub fn new(config: SpeechFlowConfig, timbre: TimbreModel) -> Result<Self> {
        config.validate()?;
        if timbre.config.d_t != config.d_t {
            return Err(Error::BadConfig(format!(
                "timbre width mismatch: model expects d_t={}, timbre encoder provides {}",
                config.d_t, timbre.config.d_t
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(util::seed_for("flow-init", config.seed));
        let enc_c = Encoder::new(&mut rng, N_MELS, config.enc_hidden, config.n_layers, config.d_c, config.down_c);
        let enc_r = Encoder::new(&mut rng, N_MELS, config.enc_hidden, config.n_layers, config.d_r, config.down_r);
        let enc_f = Encoder::new(&mut rng, 2, config.enc_hidden, config.n_layers, config.d_f, config.down_f);
        let d_sum = config.d_c + config.d_r + config.d_f + config.d_t;
        let dec = Decoder::new(&mut rng, d_sum, config.dec_hidden, config.n_layers);
        Ok(SpeechFlowModel { enc_c, enc_r, enc_f, dec, timbre, config })
    }

    pub fn zero_grads(&self) -> FlowGrads {
        FlowGrads {
            enc_c: self.enc_c.zero_grads(),
            enc_r: self.enc_r.zero_grads(),
            enc_f: self.enc_f.zero_grads(),
            dec: self.dec.zero_grads(),
        }
    }

    /// Hash over every parameter that shapes reconstructions: the autoencoder
    /// and the frozen timbre encoder.
    pub fn param_hash(&self) -> String {
        let mut bytes = params_to_bytes(self);
        bytes.extend_from_slice(&params_to_bytes(&self.timbre));
        util::hash_bytes(&bytes)
    }

    /// Conditioned encoder input matrices: mel copies mapped to the [0, 1]
    /// range and the pitch contour as (value, voiced-flag) columns. Random
    /// resampling, when seeded, applies to the content and pitch streams.
    fn conditioned_inputs(
        &self,
        inputs: &MaskedInputs,
        rr: Option<RrSeeds>,
    ) -> Result<(Array2<f64>, Array2<f64>, Array2<f64>)> {
        let t = inputs.content.frames.nrows();
        if t == 0 {
            return Err(Error::EmptySequence);
        }
        if inputs.rhythm.frames.nrows() != t {
            return Err(Error::ShapeMismatch {
                expected: format!("{t} rhythm frames"),
                got: format!("{}", inputs.rhythm.frames.nrows()),
            });
        }
        if inputs.pitch.n_frames() != t {
            return Err(Error::FrameMisaligned { mel: t, pitch: inputs.pitch.n_frames() });
        }
        let mut content = scale_frames(&inputs.content.frames);
        let rhythm = scale_frames(&inputs.rhythm.frames);
        let mut pitch = Array2::from_shape_fn((t, 2), |(i, j)| {
            if j == 0 {
                inputs.pitch.f0[i]
            } else if inputs.pitch.voiced[i] {
                1.0
            } else {
                0.0
            }
        });
        if let Some(seeds) = rr {
            content = random_resample(&content, &self.config.rr, seeds.content)?;
            pitch = random_resample(&pitch, &self.config.rr, seeds.pitch)?;
        }
        Ok((content, rhythm, pitch))
    }

    /// Encodes already-masked inputs against a caller-supplied timbre vector.
    /// Pass `rr` seeds only during training; reconstruction must stay
    /// deterministic.
    pub fn encode_with_timbre_vector(
        &self,
        inputs: &MaskedInputs,
        z_t: &Array1<f64>,
        rr: Option<RrSeeds>,
    ) -> Result<LatentBundle> {
        if z_t.len() != self.config.d_t {
            return Err(Error::ShapeMismatch {
                expected: format!("timbre vector of width {}", self.config.d_t),
                got: format!("{}", z_t.len()),
            });
        }
        let (content_in, rhythm_in, pitch_in) = self.conditioned_inputs(inputs, rr)?;
        Ok(LatentBundle {
            z_c: self.enc_c.forward(&content_in),
            z_r: self.enc_r.forward(&rhythm_in),
            z_f: self.enc_f.forward(&pitch_in),
            z_t: z_t.clone(),
            hop_secs: inputs.content.hop_secs,
            sample_rate: inputs.content.sample_rate,
        })
    }

    fn check_bundle(&self, bundle: &LatentBundle) -> Result<()> {
        let expect = [
            (bundle.z_c.ncols(), self.config.d_c, "d_c"),
            (bundle.z_r.ncols(), self.config.d_r, "d_r"),
            (bundle.z_f.ncols(), self.config.d_f, "d_f"),
            (bundle.z_t.len(), self.config.d_t, "d_t"),
        ];
        for (got, want, name) in expect {
            if got != want {
                return Err(Error::ShapeMismatch {
                    expected: format!("{name}={want}"),
                    got: format!("{name}={got}"),
                });
            }
        }
        if bundle.z_c.nrows() == 0 || bundle.z_r.nrows() == 0 || bundle.z_f.nrows() == 0 {
            return Err(Error::EmptySequence);
        }
        Ok(())
    }

    /// Decoder conditioning at the mel frame rate: upsampled latent streams
    /// and the broadcast timbre vector, concatenated per frame.
    fn decoder_conditioning(&self, bundle: &LatentBundle, t: usize) -> Array2<f64> {
        let cfg = &self.config;
        let c_up = upsample_rows(&bundle.z_c, cfg.down_c, t);
        let r_up = upsample_rows(&bundle.z_r, cfg.down_r, t);
        let f_up = upsample_rows(&bundle.z_f, cfg.down_f, t);
        let d_sum = cfg.d_c + cfg.d_r + cfg.d_f + cfg.d_t;
        let mut x = Array2::zeros((t, d_sum));
        let (c0, c1) = (0, cfg.d_c);
        let (r0, r1) = (c1, c1 + cfg.d_r);
        let (f0, f1) = (r1, r1 + cfg.d_f);
        x.slice_mut(s![.., c0..c1]).assign(&c_up);
        x.slice_mut(s![.., r0..r1]).assign(&r_up);
        x.slice_mut(s![.., f0..f1]).assign(&f_up);
        for mut row in x.slice_mut(s![.., f1..]).rows_mut() {
            row.assign(&bundle.z_t);
        }
        x
    }

    /// Raw decoded frames in log mel units, `t` rows.
    pub(crate) fn decode_frames(&self, bundle: &LatentBundle, t: usize) -> Result<Array2<f64>> {
        if t == 0 {
            return Err(Error::Invalid("decode target_length must be positive".to_string()));
        }
        self.check_bundle(bundle)?;
        let x = self.decoder_conditioning(bundle, t);
        Ok(unscale_frames(&self.dec.forward(&x)))
    }
}

/// Encodes one utterance's masked inputs; the timbre vector is computed from
/// the unmasked source spectrogram (timbre is never removed).
pub fn encode(
    inputs: &MaskedInputs,
    source: &MelSpectrogram,
    model: &SpeechFlowModel,
    rr: Option<RrSeeds>,
) -> Result<LatentBundle> {
    if source.frames.nrows() != inputs.content.frames.nrows() {
        return Err(Error::ShapeMismatch {
            expected: format!("source with {} frames", inputs.content.frames.nrows()),
            got: format!("{}", source.frames.nrows()),
        });
    }
    let z_t = timbre_encode(source, &model.timbre)?;
    model.encode_with_timbre_vector(inputs, &z_t.values, rr)
}

/// Reconstructs a `target_length`-frame spectrogram from a latent bundle.
pub fn decode(bundle: &LatentBundle, target_length: usize, model: &SpeechFlowModel) -> Result<MelSpectrogram> {
    let frames = model.decode_frames(bundle, target_length)?;
    Ok(MelSpectrogram::new(frames, bundle.hop_secs, bundle.sample_rate))
}

/// Squared error between two equal-shape frame matrices: the raw sum and the
/// per-entry mean (comparable across lengths).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconLoss {
    pub total: f64,
    pub per_entry: f64,
}

/// Core squared-error computation on raw frame matrices.
pub fn frames_loss(a: &Array2<f64>, b: &Array2<f64>) -> Result<ReconLoss> {
    if a.dim() != b.dim() {
        let (ar, ac) = a.dim();
        let (br, bc) = b.dim();
        return Err(Error::ShapeMismatch {
            expected: format!("{ar}x{ac}"),
            got: format!("{br}x{bc}"),
        });
    }
    let mut total = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        let d = x - y;
        total += d * d;
    }
    let n = (a.nrows() * a.ncols()).max(1);
    Ok(ReconLoss { total, per_entry: total / n as f64 })
}

/// Squared ℓ2 reconstruction error between a spectrogram and its
/// reconstruction.
pub fn reconstruction_loss(s: &MelSpectrogram, s_hat: &MelSpectrogram) -> Result<ReconLoss> {
    frames_loss(&s.frames, &s_hat.frames)
}

/// Forward pass only: the per-entry reconstruction error of one utterance
/// under full (unmasked) inputs. Used for validation and gradient checks.
pub(crate) fn sample_loss(
    model: &SpeechFlowModel,
    mel: &MelSpectrogram,
    pitch: &PitchContour,
    z_t: &Array1<f64>,
    rr: Option<RrSeeds>,
) -> Result<f64> {
    let inputs = mask_inputs(mel, pitch, FactorMask::full())?;
    let bundle = model.encode_with_timbre_vector(&inputs, z_t, rr)?;
    let recon = model.decode_frames(&bundle, mel.frames.nrows())?;
    Ok(frames_loss(&mel.frames, &recon)?.per_entry)
}

/// One training sample: forward pass, per-entry loss, and gradient
/// accumulation. `weight` scales this sample's contribution to the batch
/// gradient (typically 1/batch). Returns the unweighted per-entry loss.
pub(crate) fn forward_backward_sample(
    model: &SpeechFlowModel,
    mel: &MelSpectrogram,
    pitch: &PitchContour,
    z_t: &Array1<f64>,
    rr: Option<RrSeeds>,
    weight: f64,
    grads: &mut FlowGrads,
) -> Result<f64> {
    let cfg = &model.config;
    let inputs = mask_inputs(mel, pitch, FactorMask::full())?;
    let (content_in, rhythm_in, pitch_in) = model.conditioned_inputs(&inputs, rr)?;

    let (z_c, cache_c) = model.enc_c.forward_cached(content_in);
    let (z_r, cache_r) = model.enc_r.forward_cached(rhythm_in);
    let (z_f, cache_f) = model.enc_f.forward_cached(pitch_in);

    let t = mel.frames.nrows();
    let bundle = LatentBundle {
        z_c,
        z_r,
        z_f,
        z_t: z_t.clone(),
        hop_secs: mel.hop_secs,
        sample_rate: mel.sample_rate,
    };
    model.check_bundle(&bundle)?;
    let x = model.decoder_conditioning(&bundle, t);
    let (y_scaled, cache_dec) = model.dec.forward_cached(x);
    let y_log = unscale_frames(&y_scaled);

    let diff = &y_log - &mel.frames;
    let total: f64 = diff.iter().map(|v| v * v).sum();
    let n = (t * N_MELS) as f64;
    let per_entry = total / n;

    // d(per_entry)/dy in log units, then through the affine unscaling.
    let coeff = 2.0 * weight / n;
    let dy_scaled = diff.mapv(|v| v * coeff * mel_log_span());
    let dx = model.dec.backward(&cache_dec, &dy_scaled, &mut grads.dec);

    let (c0, c1) = (0, cfg.d_c);
    let (r0, r1) = (c1, c1 + cfg.d_r);
    let (f0, f1) = (r1, r1 + cfg.d_f);
    let dz_c = upsample_backward(&dx.slice(s![.., c0..c1]).to_owned(), cfg.down_c, bundle.z_c.nrows());
    let dz_r = upsample_backward(&dx.slice(s![.., r0..r1]).to_owned(), cfg.down_r, bundle.z_r.nrows());
    let dz_f = upsample_backward(&dx.slice(s![.., f0..f1]).to_owned(), cfg.down_f, bundle.z_f.nrows());
    // The timbre slice of dx is dropped: the timbre encoder stays frozen.

    model.enc_c.backward(&cache_c, &dz_c, &mut grads.enc_c);
    model.enc_r.backward(&cache_r, &dz_r, &mut grads.enc_r);
    model.enc_f.backward(&cache_f, &dz_f, &mut grads.enc_f);
    Ok(per_entry)
}

static ENC_C_NAMES: [&str; 10] = [
    "enc_c.proj.w", "enc_c.proj.b",
    "enc_c.lstm0.w_ih", "enc_c.lstm0.w_hh", "enc_c.lstm0.b",
    "enc_c.lstm1.w_ih", "enc_c.lstm1.w_hh", "enc_c.lstm1.b",
    "enc_c.head.w", "enc_c.head.b",
];
static ENC_R_NAMES: [&str; 10] = [
    "enc_r.proj.w", "enc_r.proj.b",
    "enc_r.lstm0.w_ih", "enc_r.lstm0.w_hh", "enc_r.lstm0.b",
    "enc_r.lstm1.w_ih", "enc_r.lstm1.w_hh", "enc_r.lstm1.b",
    "enc_r.head.w", "enc_r.head.b",
];
static ENC_F_NAMES: [&str; 10] = [
    "enc_f.proj.w", "enc_f.proj.b",
    "enc_f.lstm0.w_ih", "enc_f.lstm0.w_hh", "enc_f.lstm0.b",
    "enc_f.lstm1.w_ih", "enc_f.lstm1.w_hh", "enc_f.lstm1.b",
    "enc_f.head.w", "enc_f.head.b",
];
static DEC_NAMES: [&str; 10] = [
    "dec.input.w", "dec.input.b",
    "dec.lstm0.w_ih", "dec.lstm0.w_hh", "dec.lstm0.b",
    "dec.lstm1.w_ih", "dec.lstm1.w_hh", "dec.lstm1.b",
    "dec.out.w", "dec.out.b",
];

/// Lists a (pre-linear, recurrent stack, post-linear) triple against the
/// 10-slot name table shared by every component.
fn triple_refs<'a>(
    pre: &'a Linear,
    lstm: &'a LstmStack,
    post: &'a Linear,
    names: &'static [&'static str; 10],
    out: &mut Vec<(&'static str, TensorRef<'a>)>,
) {
    out.push((names[0], TensorRef::M(&pre.w)));
    out.push((names[1], TensorRef::V(&pre.b)));
    for (i, l) in lstm.layers.iter().enumerate() {
        out.push((names[2 + 3 * i], TensorRef::M(&l.w_ih)));
        out.push((names[3 + 3 * i], TensorRef::M(&l.w_hh)));
        out.push((names[4 + 3 * i], TensorRef::V(&l.b)));
    }
    out.push((names[8], TensorRef::M(&post.w)));
    out.push((names[9], TensorRef::V(&post.b)));
}

fn triple_muts<'a>(
    pre: &'a mut Linear,
    lstm: &'a mut LstmStack,
    post: &'a mut Linear,
    names: &'static [&'static str; 10],
    out: &mut Vec<(&'static str, TensorMut<'a>)>,
) {
    out.push((names[0], TensorMut::M(&mut pre.w)));
    out.push((names[1], TensorMut::V(&mut pre.b)));
    for (i, l) in lstm.layers.iter_mut().enumerate() {
        out.push((names[2 + 3 * i], TensorMut::M(&mut l.w_ih)));
        out.push((names[3 + 3 * i], TensorMut::M(&mut l.w_hh)));
        out.push((names[4 + 3 * i], TensorMut::V(&mut l.b)));
    }
    out.push((names[8], TensorMut::M(&mut post.w)));
    out.push((names[9], TensorMut::V(&mut post.b)));
}

fn triple_grad_refs<'a>(
    pre: &'a LinearGrads,
    lstm: &'a [LstmGrads],
    post: &'a LinearGrads,
    names: &'static [&'static str; 10],
    out: &mut Vec<(&'static str, TensorRef<'a>)>,
) {
    out.push((names[0], TensorRef::M(&pre.dw)));
    out.push((names[1], TensorRef::V(&pre.db)));
    for (i, l) in lstm.iter().enumerate() {
        out.push((names[2 + 3 * i], TensorRef::M(&l.dw_ih)));
        out.push((names[3 + 3 * i], TensorRef::M(&l.dw_hh)));
        out.push((names[4 + 3 * i], TensorRef::V(&l.db)));
    }
    out.push((names[8], TensorRef::M(&post.dw)));
    out.push((names[9], TensorRef::V(&post.db)));
}

fn triple_grad_muts<'a>(
    pre: &'a mut LinearGrads,
    lstm: &'a mut [LstmGrads],
    post: &'a mut LinearGrads,
    names: &'static [&'static str; 10],
    out: &mut Vec<(&'static str, TensorMut<'a>)>,
) {
    out.push((names[0], TensorMut::M(&mut pre.dw)));
    out.push((names[1], TensorMut::V(&mut pre.db)));
    for (i, l) in lstm.iter_mut().enumerate() {
        out.push((names[2 + 3 * i], TensorMut::M(&mut l.dw_ih)));
        out.push((names[3 + 3 * i], TensorMut::M(&mut l.dw_hh)));
        out.push((names[4 + 3 * i], TensorMut::V(&mut l.db)));
    }
    out.push((names[8], TensorMut::M(&mut post.dw)));
    out.push((names[9], TensorMut::V(&mut post.db)));
}

impl HasTensors for SpeechFlowModel {
    fn tensors(&self) -> Vec<(&'static str, TensorRef<'_>)> {
        let mut v = Vec::new();
        triple_refs(&self.enc_c.proj, &self.enc_c.lstm, &self.enc_c.head, &ENC_C_NAMES, &mut v);
        triple_refs(&self.enc_r.proj, &self.enc_r.lstm, &self.enc_r.head, &ENC_R_NAMES, &mut v);
        triple_refs(&self.enc_f.proj, &self.enc_f.lstm, &self.enc_f.head, &ENC_F_NAMES, &mut v);
        triple_refs(&self.dec.input, &self.dec.lstm, &self.dec.out, &DEC_NAMES, &mut v);
        v
    }

    fn tensors_mut(&mut self) -> Vec<(&'static str, TensorMut<'_>)> {
        let mut v = Vec::new();
        triple_muts(&mut self.enc_c.proj, &mut self.enc_c.lstm, &mut self.enc_c.head, &ENC_C_NAMES, &mut v);
        triple_muts(&mut self.enc_r.proj, &mut self.enc_r.lstm, &mut self.enc_r.head, &ENC_R_NAMES, &mut v);
        triple_muts(&mut self.enc_f.proj, &mut self.enc_f.lstm, &mut self.enc_f.head, &ENC_F_NAMES, &mut v);
        triple_muts(&mut self.dec.input, &mut self.dec.lstm, &mut self.dec.out, &DEC_NAMES, &mut v);
        v
    }
}

impl HasTensors for FlowGrads {
    fn tensors(&self) -> Vec<(&'static str, TensorRef<'_>)> {
        let mut v = Vec::new();
        triple_grad_refs(&self.enc_c.proj, &self.enc_c.lstm, &self.enc_c.head, &ENC_C_NAMES, &mut v);
        triple_grad_refs(&self.enc_r.proj, &self.enc_r.lstm, &self.enc_r.head, &ENC_R_NAMES, &mut v);
        triple_grad_refs(&self.enc_f.proj, &self.enc_f.lstm, &self.enc_f.head, &ENC_F_NAMES, &mut v);
        triple_grad_refs(&self.dec.input, &self.dec.lstm, &self.dec.out, &DEC_NAMES, &mut v);
        v
    }

    fn tensors_mut(&mut self) -> Vec<(&'static str, TensorMut<'_>)> {
        let mut v = Vec::new();
        triple_grad_muts(&mut self.enc_c.proj, &mut self.enc_c.lstm, &mut self.enc_c.head, &ENC_C_NAMES, &mut v);
        triple_grad_muts(&mut self.enc_r.proj, &mut self.enc_r.lstm, &mut self.enc_r.head, &ENC_R_NAMES, &mut v);
        triple_grad_muts(&mut self.enc_f.proj, &mut self.enc_f.lstm, &mut self.enc_f.head, &ENC_F_NAMES, &mut v);
        triple_grad_muts(&mut self.dec.input, &mut self.dec.lstm, &mut self.dec.out, &DEC_NAMES, &mut v);
        v
    }
}
