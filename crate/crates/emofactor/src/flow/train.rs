//! Training and corpus-level reconstruction for the factorized autoencoder.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::Array1;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::artifact::{read_sidecar, sidecar_path};
use crate::batch::run_batch;
use crate::dsp::features::FeatureSet;
use crate::dsp::mel::MelSpectrogram;
use crate::error::{Error, Result};
use crate::nn::optim::Optimizer;
use crate::nn::serialize::{params_to_bytes, read_params};
use crate::timbre::{timbre_encode, TimbreConfig, TimbreModel};

use super::config::{FactorMask, SpeechFlowConfig};
use super::model::{
    decode, forward_backward_sample, mask_inputs, sample_loss, RrSeeds, SpeechFlowModel,
};

/// Step-by-step record of one training run.
#[derive(Debug, Clone)]
pub struct FlowTrainReport {
    /// Batch-mean per-entry loss at every step.
    pub losses: Vec<f64>,
    pub initial_loss: f64,
    pub final_loss: f64,
    /// (step, validation loss) at each evaluation point.
    pub val_losses: Vec<(usize, f64)>,
    /// Validation loss of the parameters that were kept.
    pub best_val_loss: Option<f64>,
    pub best_step: usize,
}

fn missing_ids(features: &FeatureSet, ids: &[String]) -> Vec<String> {
    let mut missing: Vec<String> = ids
        .iter()
        .filter(|id| !features.records.contains_key(*id))
        .cloned()
        .collect();
    missing.sort();
    missing.dedup();
    missing
}

/// Timbre vectors for a set of utterances, computed once up front; the
/// timbre encoder is frozen so these never change during training.
fn timbre_table(
    features: &FeatureSet,
    ids: &[String],
    timbre: &TimbreModel,
) -> Result<BTreeMap<String, Array1<f64>>> {
    let rows: Vec<Result<(String, Array1<f64>)>> = run_batch(ids, |id| {
        let rec = features.get(id)?;
        let v = timbre_encode(&rec.mel, timbre)?;
        Ok((id.clone(), v.values))
    });
    rows.into_iter().collect()
}

fn validation_loss(
    model: &SpeechFlowModel,
    features: &FeatureSet,
    ids: &[String],
    z_ts: &BTreeMap<String, Array1<f64>>,
) -> Result<f64> {
    let losses: Vec<Result<f64>> = run_batch(ids, |id| {
        let rec = features.get(id)?;
        sample_loss(model, &rec.mel, &rec.pitch, &z_ts[id], None)
    });
    let mut total = 0.0;
    for l in &losses {
        total += *l.as_ref().map_err(|e| Error::Invalid(e.to_string()))?;
    }
    Ok(total / ids.len().max(1) as f64)
}

/// Trains the autoencoder to reconstruct its input spectrograms.
///
/// Every step draws a fresh minibatch and fresh random-resampling seeds for
/// the content and pitch streams. Validation runs every `eval_every` steps
/// (always including the last step) without resampling, and the parameters
/// with the best validation loss are the ones returned. With no validation
/// utterances the final parameters are returned as-is.
pub fn train_speechflow(
    features: &FeatureSet,
    train_ids: &[String],
    valid_ids: &[String],
    timbre: &TimbreModel,
    config: &SpeechFlowConfig,
) -> Result<(SpeechFlowModel, FlowTrainReport)> {
    config.validate()?;
    if train_ids.is_empty() {
        return Err(Error::Invalid("no training utterances".to_string()));
    }
    let mut all_ids: Vec<String> = train_ids.to_vec();
    all_ids.extend_from_slice(valid_ids);
    let missing = missing_ids(features, &all_ids);
    if !missing.is_empty() {
        return Err(Error::MissingFeatures(missing));
    }

    let z_ts = timbre_table(features, &all_ids, timbre)?;
    let model = SpeechFlowModel::new(config.clone(), timbre.clone())?;
    train_from_model(model, features, train_ids, valid_ids, &z_ts)
}

/// Training loop over an already-initialized model; split out so tests can
/// start from arbitrary parameter states.
pub(crate) fn train_from_model(
    mut model: SpeechFlowModel,
    features: &FeatureSet,
    train_ids: &[String],
    valid_ids: &[String],
    z_ts: &BTreeMap<String, Array1<f64>>,
) -> Result<(SpeechFlowModel, FlowTrainReport)> {
    let config = model.config.clone();
    let mut optimizer = Optimizer::new(config.optimizer.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(crate::util::seed_for("flow-train", config.seed));

    let mut order: Vec<usize> = (0..train_ids.len()).collect();
    order.shuffle(&mut rng);
    let mut cursor = 0usize;

    let mut losses = Vec::with_capacity(config.steps);
    let mut val_losses = Vec::new();
    let mut best: Option<(f64, usize, Vec<u8>)> = None;

    for step in 0..config.steps {
        let mut grads = model.zero_grads();
        let batch = config.batch_size.min(train_ids.len());
        let mut batch_loss = 0.0;
        for _ in 0..batch {
            if cursor >= order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            let rec = features.get(&train_ids[order[cursor]])?;
            cursor += 1;
            let seeds = RrSeeds { content: rng.gen(), pitch: rng.gen() };
            let weight = 1.0 / batch as f64;
            batch_loss += forward_backward_sample(
                &model,
                &rec.mel,
                &rec.pitch,
                &z_ts[&rec.id],
                Some(seeds),
                weight,
                &mut grads,
            )?;
        }
        batch_loss /= batch as f64;
        if !batch_loss.is_finite() {
            return Err(Error::Diverged { step });
        }
        losses.push(batch_loss);
        optimizer.apply(&mut model, &mut grads);

        let last_step = step + 1 == config.steps;
        if !valid_ids.is_empty() && ((step + 1) % config.eval_every == 0 || last_step) {
            let vl = validation_loss(&model, features, valid_ids, z_ts)?;
            if !vl.is_finite() {
                return Err(Error::Diverged { step });
            }
            val_losses.push((step, vl));
            let better = match &best {
                Some((b, _, _)) => vl < *b,
                None => true,
            };
            if better {
                best = Some((vl, step, params_to_bytes(&model)));
            }
        }
    }

    let (best_val_loss, best_step) = match best {
        Some((vl, step, bytes)) => {
            read_params(&mut model, &mut bytes.as_slice())
                .map_err(|e| Error::Invalid(format!("checkpoint restore: {e}")))?;
            (Some(vl), step)
        }
        None => (None, config.steps.saturating_sub(1)),
    };

    let report = FlowTrainReport {
        initial_loss: losses.first().copied().unwrap_or(f64::NAN),
        final_loss: losses.last().copied().unwrap_or(f64::NAN),
        losses,
        val_losses,
        best_val_loss,
        best_step,
    };
    Ok((model, report))
}

/// A corpus reconstructed under one factor mask, tagged with the exact mask
/// and the hash of the model that produced it.
#[derive(Debug, Clone)]
pub struct ReconstructedCorpus {
    pub mask: FactorMask,
    pub model_hash: String,
    pub feature_config_hash: String,
    pub mels: BTreeMap<String, MelSpectrogram>,
}

/// Reconstructs every listed utterance: mask inputs, encode without
/// resampling, decode at the source length. Deterministic for a fixed model.
pub fn reconstruct_corpus(
    features: &FeatureSet,
    ids: &[String],
    mask: FactorMask,
    model: &SpeechFlowModel,
) -> Result<ReconstructedCorpus> {
    let missing = missing_ids(features, ids);
    if !missing.is_empty() {
        return Err(Error::MissingFeatures(missing));
    }
    let rows: Vec<Result<(String, MelSpectrogram)>> = run_batch(ids, |id| {
        let rec = features.get(id)?;
        let inputs = mask_inputs(&rec.mel, &rec.pitch, mask)?;
        let z_t = timbre_encode(&rec.mel, &model.timbre)?;
        let bundle = model.encode_with_timbre_vector(&inputs, &z_t.values, None)?;
        let recon = decode(&bundle, rec.mel.frames.nrows(), model)?;
        Ok((id.clone(), recon))
    });
    let mels: BTreeMap<String, MelSpectrogram> = rows.into_iter().collect::<Result<_>>()?;
    Ok(ReconstructedCorpus {
        mask,
        model_hash: model.param_hash(),
        feature_config_hash: features.config_hash.clone(),
        mels,
    })
}

/// Per-entry MSE of the best constant predictor: the global mean frame of
/// this same set of spectrograms.
pub fn mean_frame_baseline_mse(mels: &[&MelSpectrogram]) -> Result<f64> {
    let mut n_frames = 0usize;
    for m in mels {
        n_frames += m.frames.nrows();
    }
    if n_frames == 0 {
        return Err(Error::EmptySequence);
    }
    let bands = crate::dsp::mel::N_MELS;
    let mut mean = Array1::<f64>::zeros(bands);
    for m in mels {
        for row in m.frames.rows() {
            mean += &row;
        }
    }
    mean /= n_frames as f64;
    let mut total = 0.0;
    for m in mels {
        for row in m.frames.rows() {
            for (v, mu) in row.iter().zip(mean.iter()) {
                let d = v - mu;
                total += d * d;
            }
        }
    }
    Ok(total / (n_frames * bands) as f64)
}

/// Pooled per-entry MSE between source spectrograms and their
/// reconstructions, weighted by entry count.
pub fn corpus_mse(features: &FeatureSet, recon: &ReconstructedCorpus) -> Result<f64> {
    if recon.mels.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut total = 0.0;
    let mut entries = 0usize;
    for (id, rec_mel) in &recon.mels {
        let orig = features.get(id)?;
        let l = super::model::reconstruction_loss(&orig.mel, rec_mel)?;
        total += l.total;
        entries += orig.mel.frames.nrows() * orig.mel.frames.ncols();
    }
    Ok(total / entries as f64)
}

const FLOW_MAGIC: &[u8; 8] = b"EFFLOW01";

/// Provenance stored next to the flow parameter blob. The blob itself holds
/// both the autoencoder parameters and the frozen timbre encoder parameters,
/// so a saved model reconstructs bit-identically on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowSidecar {
    pub kind: String,
    pub config: SpeechFlowConfig,
    pub timbre_config: TimbreConfig,
    pub timbre_speakers: Vec<String>,
    pub feature_config_hash: String,
    pub train_corpus: String,
    pub best_val_loss: Option<f64>,
    pub param_hash: String,
}

pub fn save_flow(
    model: &SpeechFlowModel,
    feature_config_hash: &str,
    train_corpus: &str,
    best_val_loss: Option<f64>,
    path: &Path,
) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let flow_blob = params_to_bytes(model);
    let timbre_blob = params_to_bytes(&model.timbre);
    let mut bytes = Vec::with_capacity(24 + flow_blob.len() + timbre_blob.len());
    bytes.extend_from_slice(FLOW_MAGIC);
    bytes.extend_from_slice(&(flow_blob.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&flow_blob);
    bytes.extend_from_slice(&(timbre_blob.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&timbre_blob);
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;

    let sidecar = FlowSidecar {
        kind: "flow".to_string(),
        config: model.config.clone(),
        timbre_config: model.timbre.config.clone(),
        timbre_speakers: model.timbre.speakers.clone(),
        feature_config_hash: feature_config_hash.to_string(),
        train_corpus: train_corpus.to_string(),
        best_val_loss,
        param_hash: model.param_hash(),
    };
    let meta = sidecar_path(path);
    let json = serde_json::to_string_pretty(&sidecar).map_err(|e| Error::json(&meta, e))?;
    std::fs::write(&meta, json).map_err(|e| Error::io(&meta, e))
}

pub fn load_flow(path: &Path) -> Result<(SpeechFlowModel, FlowSidecar)> {
    let sidecar: FlowSidecar = read_sidecar(path)?;
    if sidecar.kind != "flow" {
        return Err(Error::Invalid(format!(
            "{}: artifact kind {:?} is not a flow model",
            path.display(),
            sidecar.kind
        )));
    }
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |m: &str| Error::Invalid(format!("{}: {m}", path.display()));
    if bytes.len() < 16 || &bytes[..8] != FLOW_MAGIC {
        return Err(bad("bad flow artifact header"));
    }
    let mut off = 8usize;
    let mut read_blob = |bytes: &[u8]| -> Result<(usize, usize)> {
        if off + 8 > bytes.len() {
            return Err(bad("truncated flow artifact"));
        }
        let len = u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()) as usize;
        let start = off + 8;
        if start + len > bytes.len() {
            return Err(bad("truncated flow artifact"));
        }
        off = start + len;
        Ok((start, len))
    };
    let (flow_start, flow_len) = read_blob(&bytes)?;
    let (timbre_start, timbre_len) = read_blob(&bytes)?;

    let mut timbre = TimbreModel::new(sidecar.timbre_speakers.clone(), sidecar.timbre_config.clone());
    read_params(&mut timbre, &mut &bytes[timbre_start..timbre_start + timbre_len])
        .map_err(|e| Error::Invalid(format!("{}: timbre blob: {e}", path.display())))?;
    let mut model = SpeechFlowModel::new(sidecar.config.clone(), timbre)?;
    read_params(&mut model, &mut &bytes[flow_start..flow_start + flow_len])
        .map_err(|e| Error::Invalid(format!("{}: flow blob: {e}", path.display())))?;

    if model.param_hash() != sidecar.param_hash {
        return Err(Error::Invalid(format!(
            "{}: parameter hash does not match sidecar",
            path.display()
        )));
    }
    Ok((model, sidecar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::features::featurize_manifest;
    use crate::dsp::resample::RrConfig;
    use crate::dsp::FrontendConfig;
    use crate::flow::config::FactorMask;
    use crate::ingest::toy::{synth_toy_corpus, CodingFactor, ToyCorpusSpec};
    use crate::nn::optim::{OptimConfig, OptimKind};
    use std::sync::OnceLock;

    struct Fixture {
        _dir: tempfile::TempDir,
        features: FeatureSet,
        ids: Vec<String>,
        timbre: TimbreModel,
    }

    fn fixture() -> &'static Fixture {
        static FIX: OnceLock<Fixture> = OnceLock::new();
        FIX.get_or_init(|| {
            let dir = tempfile::tempdir().unwrap();
            let spec = ToyCorpusSpec {
                coding_factor: CodingFactor::Rhythm,
                n_speakers: 4,
                n_utterances_per_class: 8,
                utterance_duration: 0.4,
                seed: 44,
                corpus_name: "ft".to_string(),
                ..ToyCorpusSpec::default()
            };
            let (manifest, _) = synth_toy_corpus(&spec, dir.path()).unwrap();
            let features = featurize_manifest(
                &manifest,
                dir.path(),
                &FrontendConfig::default(),
                &dir.path().join("feat"),
                false,
            )
            .unwrap();
            let ids: Vec<String> = features.records.keys().cloned().collect();
            let timbre = TimbreModel::new(
                manifest.speakers(),
                TimbreConfig { d_t: 8, hidden: 12, ..TimbreConfig::default() },
            );
            Fixture { _dir: dir, features, ids, timbre }
        })
    }

    fn small_config(steps: usize, seed: u64) -> SpeechFlowConfig {
        SpeechFlowConfig {
            d_c: 4,
            d_r: 2,
            d_f: 4,
            d_t: 8,
            down_c: 4,
            down_r: 4,
            down_f: 4,
            enc_hidden: 8,
            dec_hidden: 12,
            n_layers: 1,
            rr: RrConfig { seg_min: 8, seg_max: 14, alpha_min: 0.7, alpha_max: 1.3 },
            optimizer: OptimConfig { learning_rate: 1e-3, ..OptimConfig::default() },
            batch_size: 8,
            steps,
            eval_every: 25,
            seed,
            ..SpeechFlowConfig::default()
        }
    }

    #[test]
    fn training_fits_toy_set_and_beats_mean_frame_baseline() {
        let fix = fixture();
        let train_ids: Vec<String> = fix.ids.iter().take(16).cloned().collect();
        let valid_ids: Vec<String> = fix.ids.iter().skip(16).take(6).cloned().collect();
        let cfg = small_config(300, 7);
        let (model, report) =
            train_speechflow(&fix.features, &train_ids, &valid_ids, &fix.timbre, &cfg).unwrap();

        assert_eq!(report.losses.len(), 300);
        assert!(report.losses.iter().all(|l| l.is_finite()));
        assert!(
            report.final_loss < 0.7 * report.initial_loss,
            "initial {} final {}",
            report.initial_loss,
            report.final_loss
        );

        let recon =
            reconstruct_corpus(&fix.features, &train_ids, FactorMask::full(), &model).unwrap();
        assert_eq!(recon.mels.len(), train_ids.len());
        let mse = corpus_mse(&fix.features, &recon).unwrap();
        let originals: Vec<&MelSpectrogram> = train_ids
            .iter()
            .map(|id| &fix.features.records[id].mel)
            .collect();
        let baseline = mean_frame_baseline_mse(&originals).unwrap();
        assert!(
            mse < baseline,
            "reconstruction MSE {mse} should beat the mean-frame baseline {baseline}"
        );
    }

    #[test]
    fn zero_learning_rate_keeps_loss_constant() {
        let fix = fixture();
        let train_ids: Vec<String> = fix.ids.iter().take(16).cloned().collect();
        let cfg = SpeechFlowConfig {
            optimizer: OptimConfig { learning_rate: 0.0, ..OptimConfig::default() },
            rr: RrConfig::identity(),
            batch_size: 16,
            ..small_config(10, 3)
        };
        let (_, report) = train_speechflow(&fix.features, &train_ids, &[], &fix.timbre, &cfg).unwrap();
        let first = report.losses[0];
        for (i, l) in report.losses.iter().enumerate() {
            assert!(
                (l - first).abs() <= 1e-9 * first.abs(),
                "step {i}: loss {l} drifted from {first}"
            );
        }
    }

    #[test]
    fn same_seed_reproduces_parameters_and_losses() {
        let fix = fixture();
        let train_ids: Vec<String> = fix.ids.iter().take(10).cloned().collect();
        let valid_ids: Vec<String> = fix.ids.iter().skip(10).take(4).cloned().collect();
        let cfg = small_config(40, 11);
        let (m1, r1) =
            train_speechflow(&fix.features, &train_ids, &valid_ids, &fix.timbre, &cfg).unwrap();
        let (m2, r2) =
            train_speechflow(&fix.features, &train_ids, &valid_ids, &fix.timbre, &cfg).unwrap();
        assert_eq!(params_to_bytes(&m1), params_to_bytes(&m2));
        assert_eq!(r1.losses, r2.losses);
        assert_eq!(r1.best_step, r2.best_step);
    }

    #[test]
    fn runaway_step_size_aborts_with_divergence() {
        let fix = fixture();
        let train_ids: Vec<String> = fix.ids.iter().take(8).cloned().collect();
        let cfg = SpeechFlowConfig {
            optimizer: OptimConfig {
                kind: OptimKind::Sgd,
                learning_rate: 1e200,
                ..OptimConfig::default()
            },
            ..small_config(5, 13)
        };
        let err = train_speechflow(&fix.features, &train_ids, &[], &fix.timbre, &cfg).unwrap_err();
        assert!(matches!(err, Error::Diverged { .. }), "got {err:?}");
    }

    #[test]
    fn checkpoint_keeps_the_best_validation_parameters() {
        let fix = fixture();
        let train_ids: Vec<String> = fix.ids.iter().take(12).cloned().collect();
        let valid_ids: Vec<String> = fix.ids.iter().skip(12).take(6).cloned().collect();
        let cfg = SpeechFlowConfig { eval_every: 10, ..small_config(50, 17) };
        let (model, report) =
            train_speechflow(&fix.features, &train_ids, &valid_ids, &fix.timbre, &cfg).unwrap();

        let best = report.best_val_loss.unwrap();
        let min_eval = report
            .val_losses
            .iter()
            .map(|(_, v)| *v)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(best, min_eval);

        let z_ts = timbre_table(&fix.features, &valid_ids, &fix.timbre).unwrap();
        let direct = validation_loss(&model, &fix.features, &valid_ids, &z_ts).unwrap();
        assert_eq!(direct, best);
    }

    #[test]
    fn training_without_validation_returns_final_parameters() {
        let fix = fixture();
        let train_ids: Vec<String> = fix.ids.iter().take(8).cloned().collect();
        let cfg = small_config(12, 19);
        let (_, report) = train_speechflow(&fix.features, &train_ids, &[], &fix.timbre, &cfg).unwrap();
        assert!(report.best_val_loss.is_none());
        assert!(report.val_losses.is_empty());
        assert_eq!(report.losses.len(), 12);
    }

    #[test]
    fn missing_feature_ids_are_listed() {
        let fix = fixture();
        let mut ids = fix.ids.clone();
        ids.push("ghost-b".to_string());
        ids.push("ghost-a".to_string());
        let cfg = small_config(5, 23);
        let err = train_speechflow(&fix.features, &ids, &[], &fix.timbre, &cfg).unwrap_err();
        match err {
            Error::MissingFeatures(list) => {
                assert_eq!(list, vec!["ghost-a".to_string(), "ghost-b".to_string()]);
            }
            other => panic!("expected MissingFeatures, got {other:?}"),
        }

        let model = SpeechFlowModel::new(small_config(5, 23), fix.timbre.clone()).unwrap();
        let err = reconstruct_corpus(&fix.features, &ids, FactorMask::full(), &model).unwrap_err();
        assert!(matches!(err, Error::MissingFeatures(_)));
    }

    #[test]
    fn reconstruction_is_tagged_and_shaped() {
        let fix = fixture();
        let ids: Vec<String> = fix.ids.iter().take(6).cloned().collect();
        let model = SpeechFlowModel::new(small_config(5, 29), fix.timbre.clone()).unwrap();
        let mask = FactorMask::parse("C-P").unwrap();
        let recon = reconstruct_corpus(&fix.features, &ids, mask, &model).unwrap();
        assert_eq!(recon.mask, mask);
        assert_eq!(recon.model_hash, model.param_hash());
        assert_eq!(recon.feature_config_hash, fix.features.config_hash);
        assert_eq!(recon.mels.len(), ids.len());
        for id in &ids {
            let orig = &fix.features.records[id].mel;
            let got = &recon.mels[id];
            assert_eq!(got.frames.dim(), orig.frames.dim());
            assert_eq!(got.hop_secs, orig.hop_secs);
        }
    }

    #[test]
    fn all_off_reconstructions_match_for_identical_sources() {
        let fix = fixture();
        let id = fix.ids[0].clone();
        let twin = "twin-of-first".to_string();
        let mut features = fix.features.clone();
        let mut copy = features.records[&id].clone();
        copy.id = twin.clone();
        features.records.insert(twin.clone(), copy);

        let model = SpeechFlowModel::new(small_config(5, 31), fix.timbre.clone()).unwrap();
        let recon = reconstruct_corpus(
            &features,
            &[id.clone(), twin.clone()],
            FactorMask::none(),
            &model,
        )
        .unwrap();
        assert_eq!(recon.mels[&id].frames, recon.mels[&twin].frames);
    }

    #[test]
    fn deterministic_reconstruction_across_calls() {
        let fix = fixture();
        let ids: Vec<String> = fix.ids.iter().take(5).cloned().collect();
        let model = SpeechFlowModel::new(small_config(5, 37), fix.timbre.clone()).unwrap();
        let a = reconstruct_corpus(&fix.features, &ids, FactorMask::full(), &model).unwrap();
        let b = reconstruct_corpus(&fix.features, &ids, FactorMask::full(), &model).unwrap();
        for id in &ids {
            assert_eq!(a.mels[id].frames, b.mels[id].frames);
        }
    }

    #[test]
    fn artifact_round_trip_is_bit_exact() {
        let fix = fixture();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("models/flow.bin");
        let model = SpeechFlowModel::new(small_config(5, 41), fix.timbre.clone()).unwrap();
        save_flow(&model, &fix.features.config_hash, "ft", Some(1.25), &path).unwrap();

        let (loaded, sidecar) = load_flow(&path).unwrap();
        assert_eq!(sidecar.kind, "flow");
        assert_eq!(sidecar.train_corpus, "ft");
        assert_eq!(sidecar.best_val_loss, Some(1.25));
        assert_eq!(sidecar.feature_config_hash, fix.features.config_hash);
        assert_eq!(loaded.param_hash(), model.param_hash());

        let ids: Vec<String> = fix.ids.iter().take(3).cloned().collect();
        let before = reconstruct_corpus(&fix.features, &ids, FactorMask::full(), &model).unwrap();
        let after = reconstruct_corpus(&fix.features, &ids, FactorMask::full(), &loaded).unwrap();
        for id in &ids {
            assert_eq!(before.mels[id].frames, after.mels[id].frames);
        }
    }

    #[test]
    fn wrong_artifact_kind_is_rejected() {
        let fix = fixture();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("flow.bin");
        let model = SpeechFlowModel::new(small_config(5, 43), fix.timbre.clone()).unwrap();
        save_flow(&model, "hash", "ft", None, &path).unwrap();

        let meta = sidecar_path(&path);
        let mut sidecar: FlowSidecar =
            serde_json::from_str(&std::fs::read_to_string(&meta).unwrap()).unwrap();
        sidecar.kind = "timbre".to_string();
        std::fs::write(&meta, serde_json::to_string(&sidecar).unwrap()).unwrap();
        assert!(matches!(load_flow(&path), Err(Error::Invalid(_))));
    }

    #[test]
    fn mean_frame_baseline_matches_hand_computation() {
        use ndarray::Array2;
        let mut a = Array2::zeros((2, crate::dsp::mel::N_MELS));
        a[[0, 0]] = 2.0;
        a[[1, 0]] = 4.0;
        let mel = MelSpectrogram::new(a, 0.016, 16000);
        // Mean frame has 3.0 in band 0 and 0 elsewhere; the only error cells
        // are the two band-0 entries, each off by 1.
        let mse = mean_frame_baseline_mse(&[&mel]).unwrap();
        let expected = 2.0 / (2.0 * crate::dsp::mel::N_MELS as f64);
        assert!((mse - expected).abs() < 1e-15);
        assert!(mean_frame_baseline_mse(&[]).is_err());
    }
}
