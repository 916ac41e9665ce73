//! Speaker (timbre) encoder: a frame-level network with temporal average
//! pooling whose embedding layer output, ℓ2-normalized, is the per-utterance
//! speaker vector. Trained with a speaker-classification objective; at
//! inference there is no speaker lookup of any kind — the vector is a pure
//! function of the mel matrix and the parameters, so it is defined for
//! speakers never seen in training.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::artifact;
use crate::dsp::features::FeatureSet;
use crate::dsp::mel::MelSpectrogram;
use crate::error::{Error, Result};
use crate::nn::linear::{Linear, LinearGrads};
use crate::nn::ops::{cross_entropy, relu, relu_backward, softmax};
use crate::nn::optim::{OptimConfig, OptimKind, Optimizer};
use crate::nn::{HasTensors, TensorMut, TensorRef};

/// Per-utterance unit-norm speaker vector.
#[derive(Debug, Clone)]
pub struct SpeakerVector {
    pub values: Array1<f64>,
    pub source_utterance: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TimbreConfig {
    /// Embedding width; must match the flow model's timbre width.
    pub d_t: usize,
    pub hidden: usize,
    pub steps: usize,
    pub batch_size: usize,
    pub optimizer: OptimConfig,
    pub seed: u64,
}

impl Default for TimbreConfig {
    fn default() -> Self {
        Self {
            d_t: 64,
            hidden: 64,
            steps: 500,
            batch_size: 8,
            optimizer: OptimConfig {
                kind: OptimKind::Adam,
                learning_rate: 1e-3,
                ..OptimConfig::default()
            },
            seed: 0,
        }
    }
}

/// Frame MLP -> average pooling -> embedding -> (training-only) speaker head.
#[derive(Debug, Clone)]
pub struct TimbreModel {
    pub frame1: Linear,
    pub frame2: Linear,
    pub embed: Linear,
    pub head: Linear,
    /// Training speaker list; fixes the head dimension and target indices.
    pub speakers: Vec<String>,
    pub config: TimbreConfig,
}

pub struct TimbreGrads {
    frame1: LinearGrads,
    frame2: LinearGrads,
    embed: LinearGrads,
    head: LinearGrads,
}

impl HasTensors for TimbreModel {
    fn tensors(&self) -> Vec<(&'static str, TensorRef<'_>)> {
        vec![
            ("frame1.w", TensorRef::M(&self.frame1.w)),
            ("frame1.b", TensorRef::V(&self.frame1.b)),
            ("frame2.w", TensorRef::M(&self.frame2.w)),
            ("frame2.b", TensorRef::V(&self.frame2.b)),
            ("embed.w", TensorRef::M(&self.embed.w)),
            ("embed.b", TensorRef::V(&self.embed.b)),
            ("head.w", TensorRef::M(&self.head.w)),
            ("head.b", TensorRef::V(&self.head.b)),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<(&'static str, TensorMut<'_>)> {
        vec![
            ("frame1.w", TensorMut::M(&mut self.frame1.w)),
            ("frame1.b", TensorMut::V(&mut self.frame1.b)),
            ("frame2.w", TensorMut::M(&mut self.frame2.w)),
            ("frame2.b", TensorMut::V(&mut self.frame2.b)),
            ("embed.w", TensorMut::M(&mut self.embed.w)),
            ("embed.b", TensorMut::V(&mut self.embed.b)),
            ("head.w", TensorMut::M(&mut self.head.w)),
            ("head.b", TensorMut::V(&mut self.head.b)),
        ]
    }
}

impl HasTensors for TimbreGrads {
    fn tensors(&self) -> Vec<(&'static str, TensorRef<'_>)> {
        vec![
            ("frame1.w", TensorRef::M(&self.frame1.dw)),
            ("frame1.b", TensorRef::V(&self.frame1.db)),
            ("frame2.w", TensorRef::M(&self.frame2.dw)),
            ("frame2.b", TensorRef::V(&self.frame2.db)),
            ("embed.w", TensorRef::M(&self.embed.dw)),
            ("embed.b", TensorRef::V(&self.embed.db)),
            ("head.w", TensorRef::M(&self.head.dw)),
            ("head.b", TensorRef::V(&self.head.db)),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<(&'static str, TensorMut<'_>)> {
        vec![
            ("frame1.w", TensorMut::M(&mut self.frame1.dw)),
            ("frame1.b", TensorMut::V(&mut self.frame1.db)),
            ("frame2.w", TensorMut::M(&mut self.frame2.dw)),
            ("frame2.b", TensorMut::V(&mut self.frame2.db)),
            ("embed.w", TensorMut::M(&mut self.embed.dw)),
            ("embed.b", TensorMut::V(&mut self.embed.db)),
            ("head.w", TensorMut::M(&mut self.head.dw)),
            ("head.b", TensorMut::V(&mut self.head.db)),
        ]
    }
}

struct ForwardCache {
    x: Array2<f64>,
    z1: Array2<f64>,
    z2: Array2<f64>,
    a2_rows: usize,
    pooled: Array2<f64>,
    e: Array2<f64>,
}

impl TimbreModel {
    pub fn new(speakers: Vec<String>, config: TimbreConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(crate::util::seed_for("timbre-init", config.seed));
        Self {
            frame1: Linear::new(&mut rng, crate::dsp::mel::N_MELS, config.hidden),
            frame2: Linear::new(&mut rng, config.hidden, config.hidden),
            embed: Linear::new(&mut rng, config.hidden, config.d_t),
            head: Linear::new(&mut rng, config.d_t, speakers.len()),
            speakers,
            config,
        }
    }

    pub fn zero_grads(&self) -> TimbreGrads {
        TimbreGrads {
            frame1: self.frame1.zero_grads(),
            frame2: self.frame2.zero_grads(),
            embed: self.embed.zero_grads(),
            head: self.head.zero_grads(),
        }
    }

    fn forward(&self, mel: &Array2<f64>) -> (Array1<f64>, ForwardCache) {
        let z1 = self.frame1.forward(mel);
        let a1 = relu(&z1);
        let z2 = self.frame2.forward(&a1);
        let a2 = relu(&z2);
        let pooled = a2
            .mean_axis(Axis(0))
            .expect("nonempty input")
            .insert_axis(Axis(0));
        let e = self.embed.forward(&pooled);
        let logits = self.head.forward(&e).row(0).to_owned();
        (
            logits,
            ForwardCache {
                x: mel.clone(),
                z1,
                z2,
                a2_rows: a2.nrows(),
                pooled,
                e,
            },
        )
    }

    /// Cross-entropy loss of one utterance against a speaker index.
    pub fn loss_on(&self, mel: &Array2<f64>, target: usize) -> f64 {
        let (logits, _) = self.forward(mel);
        cross_entropy(&logits, target).0
    }

    fn backward(&self, cache: &ForwardCache, dlogits: &Array1<f64>, grads: &mut TimbreGrads) {
        let dlogits2 = dlogits.clone().insert_axis(Axis(0));
        let de = self.head.backward_from(&cache.e, &dlogits2, &mut grads.head);
        let dpooled = self.embed.backward_from(&cache.pooled, &de, &mut grads.embed);

        let t_len = cache.a2_rows;
        let per_frame = dpooled.row(0).mapv(|v| v / t_len as f64);
        let mut da2 = Array2::zeros((t_len, per_frame.len()));
        for mut row in da2.rows_mut() {
            row.assign(&per_frame);
        }
        let dz2 = relu_backward(&cache.z2, &da2);
        let a1 = relu(&cache.z1);
        let da1 = self.frame2.backward_from(&a1, &dz2, &mut grads.frame2);
        let dz1 = relu_backward(&cache.z1, &da1);
        self.frame1.backward_from(&cache.x, &dz1, &mut grads.frame1);
    }

    /// Speaker index with the highest head logit.
    pub fn predict_speaker(&self, mel: &MelSpectrogram) -> usize {
        let (logits, _) = self.forward(&mel.frames);
        softmax(&logits)
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(0)
    }
}

/// Computes the unit-norm speaker vector for one utterance.
pub fn timbre_encode(mel: &MelSpectrogram, model: &TimbreModel) -> Result<SpeakerVector> {
    if mel.n_frames() == 0 {
        return Err(Error::EmptySequence);
    }
    let (_, cache) = model.forward(&mel.frames);
    let e = cache.e.row(0).to_owned();
    let norm = e.dot(&e).sqrt().max(1e-12);
    Ok(SpeakerVector {
        values: e.mapv(|v| v / norm),
        source_utterance: String::new(),
    })
}

/// Report of one training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimbreTrainReport {
    pub steps: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
}

/// Trains the speaker encoder on the given utterance ids.
///
/// Requires at least 4 distinct speakers with at least 8 utterances each.
/// Fully deterministic for a fixed config (data order, init, and batch
/// sampling all derive from `config.seed`).
pub fn train_timbre_encoder(
    features: &FeatureSet,
    ids: &[String],
    config: &TimbreConfig,
) -> Result<(TimbreModel, TimbreTrainReport)> {
    let mut per_speaker: BTreeMap<&str, usize> = BTreeMap::new();
    for id in ids {
        let rec = features.get(id)?;
        *per_speaker.entry(rec.speaker_id.as_str()).or_default() += 1;
    }
    if per_speaker.len() < 4 {
        return Err(Error::TooFewSpeakers(per_speaker.len(), 4));
    }
    if let Some((spk, n)) = per_speaker.iter().find(|(_, &n)| n < 8) {
        return Err(Error::Invalid(format!(
            "speaker {spk} has {n} utterances, need at least 8"
        )));
    }
    let speakers: Vec<String> = per_speaker.keys().map(|s| s.to_string()).collect();
    let speaker_index: BTreeMap<&str, usize> = speakers
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();

    let mut model = TimbreModel::new(speakers.clone(), config.clone());
    let mut optimizer = Optimizer::new(config.optimizer.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(crate::util::seed_for("timbre-train", config.seed));

    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.shuffle(&mut rng);
    let mut cursor = 0usize;
    let mut initial_loss = f64::NAN;
    let mut final_loss = f64::NAN;

    for step in 0..config.steps {
        let mut grads = model.zero_grads();
        let mut batch_loss = 0.0;
        let batch = config.batch_size.min(ids.len());
        for _ in 0..batch {
            if cursor >= order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            let rec = features.get(&ids[order[cursor]])?;
            cursor += 1;
            let target = speaker_index[rec.speaker_id.as_str()];
            let (logits, cache) = model.forward(&rec.mel.frames);
            let (loss, mut dlogits) = cross_entropy(&logits, target);
            batch_loss += loss;
            dlogits.mapv_inplace(|v| v / batch as f64);
            model.backward(&cache, &dlogits, &mut grads);
        }
        batch_loss /= batch as f64;
        if !batch_loss.is_finite() {
            return Err(Error::Diverged { step });
        }
        if step == 0 {
            initial_loss = batch_loss;
        }
        final_loss = batch_loss;
        optimizer.apply(&mut model, &mut grads);
    }

    Ok((
        model,
        TimbreTrainReport {
            steps: config.steps,
            initial_loss,
            final_loss,
        },
    ))
}

/// Sidecar stored next to the parameter blob.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimbreSidecar {
    pub kind: String,
    pub config: TimbreConfig,
    pub speakers: Vec<String>,
    pub feature_config_hash: String,
}

pub fn save_timbre(model: &TimbreModel, feature_config_hash: &str, path: &Path) -> Result<()> {
    let sidecar = TimbreSidecar {
        kind: "timbre".to_string(),
        config: model.config.clone(),
        speakers: model.speakers.clone(),
        feature_config_hash: feature_config_hash.to_string(),
    };
    artifact::save_model(path, model, &sidecar)
}

pub fn load_timbre(path: &Path) -> Result<(TimbreModel, TimbreSidecar)> {
    let sidecar: TimbreSidecar = artifact::read_sidecar(path)?;
    if sidecar.kind != "timbre" {
        return Err(Error::Invalid(format!(
            "{} is a {:?} artifact, expected timbre",
            path.display(),
            sidecar.kind
        )));
    }
    let mut model = TimbreModel::new(sidecar.speakers.clone(), sidecar.config.clone());
    artifact::read_params_into(path, &mut model)?;
    Ok((model, sidecar))
}
