//! Cross-entropy training for the emotion classifier, with validation-UAR
//! early stopping, batch evaluation, and disk artifacts.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::artifact;
use crate::batch::run_batch;
use crate::dsp::mel::MelSpectrogram;
use crate::error::{Error, Result};
use crate::eval::metrics::{confusion_matrix, uar, ConfusionMatrix};
use crate::ingest::record::EmotionLabel;
use crate::nn::optim::Optimizer;
use crate::nn::ops::cross_entropy;
use crate::nn::serialize::{params_to_bytes, read_params};
use crate::nn::HasTensors;
use crate::ser::input::{make_acrnn_input, AcrnnInput};
use crate::ser::model::{AcrnnConfig, AcrnnGrads, AcrnnModel, N_CLASSES};
use crate::util::{hash_bytes, seed_for};

/// One labeled utterance ready for classifier training or evaluation.
///
/// `mask_tag` names the factor configuration the mel came from: `"raw"` for
/// original features, otherwise the mask string of the reconstruction
/// (e.g. `"CRP"`, `"-R-"`).
#[derive(Debug, Clone)]
pub struct SerExample {
    pub id: String,
    pub mel: MelSpectrogram,
    pub label: EmotionLabel,
    pub mask_tag: String,
}

/// Loss and validation history of one training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AcrnnTrainReport {
    /// Mean batch loss per optimizer step.
    pub losses: Vec<f64>,
    /// (step, validation UAR) at every validation point.
    pub val_uars: Vec<(usize, f64)>,
    /// Best validation UAR seen; `None` when no validation set was given.
    pub best_val_uar: Option<f64>,
    /// Step of the restored checkpoint.
    pub best_step: usize,
    /// Steps actually run (smaller than `config.steps` when stopped early).
    pub steps_run: usize,
    pub stopped_early: bool,
}

fn distinct_tags(examples: &[SerExample]) -> Vec<String> {
    let set: BTreeSet<&str> = examples.iter().map(|e| e.mask_tag.as_str()).collect();
    set.into_iter().map(String::from).collect()
}

/// All examples must carry `expected`; a heterogeneous dataset is reported
/// as mixing, a homogeneous one with the wrong tag as a mismatch.
fn check_tags(examples: &[SerExample], expected: &str) -> Result<()> {
    let tags = distinct_tags(examples);
    if tags.len() > 1 {
        return Err(Error::MixedMaskTags(tags));
    }
    if let Some(tag) = tags.first() {
        if tag != expected {
            return Err(Error::MaskMismatch {
                model: expected.to_string(),
                requested: tag.clone(),
            });
        }
    }
    Ok(())
}

fn prepare_inputs(examples: &[SerExample]) -> Result<Vec<(AcrnnInput, usize)>> {
    run_batch(examples, |ex| {
        make_acrnn_input(&ex.mel).map(|x| (x, ex.label.index()))
    })
    .into_iter()
    .collect()
}

/// Per-class loss weights: uniform by default, inverse to training
/// frequency when requested. Absent classes get weight zero either way.
fn class_weights(targets: &[usize], inverse_frequency: bool) -> [f64; N_CLASSES] {
    let mut counts = [0usize; N_CLASSES];
    for &t in targets {
        counts[t] += 1;
    }
    let mut w = [0.0; N_CLASSES];
    if inverse_frequency {
        let present = counts.iter().filter(|&&c| c > 0).count().max(1);
        let total = targets.len() as f64;
        for c in 0..N_CLASSES {
            if counts[c] > 0 {
                w[c] = total / (present as f64 * counts[c] as f64);
            }
        }
    } else {
        for c in 0..N_CLASSES {
            if counts[c] > 0 {
                w[c] = 1.0;
            }
        }
    }
    w
}

fn add_grads(acc: &mut AcrnnGrads, other: &AcrnnGrads) {
    let mut at = acc.tensors_mut();
    let ot = other.tensors();
    for (pa, po) in at.iter_mut().zip(ot.iter()) {
        debug_assert_eq!(pa.0, po.0);
        for (x, y) in pa.1.as_slice_mut().iter_mut().zip(po.1.as_slice().iter()) {
            *x += y;
        }
    }
}

/// Cross-entropy is bounded, so a diverging run shows up as non-finite
/// gradients or parameters rather than a non-finite loss.
fn all_finite<T: HasTensors>(t: &T) -> bool {
    t.tensors()
        .iter()
        .all(|(_, t)| t.as_slice().iter().all(|v| v.is_finite()))
}

fn validation_uar(model: &AcrnnModel, inputs: &[(AcrnnInput, usize)]) -> Result<f64> {
    let preds: Vec<EmotionLabel> = run_batch(inputs, |(x, _)| {
        model
            .forward(x)
            .map(|(logits, _)| argmax_label(&logits))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let labels: Vec<EmotionLabel> = inputs
        .iter()
        .map(|(_, t)| EmotionLabel::from_index(*t).expect("index in range"))
        .collect();
    uar(&preds, &labels)
}

fn argmax_label(logits: &ndarray::Array1<f64>) -> EmotionLabel {
    let mut best = 0;
    for i in 1..N_CLASSES {
        if logits[i] > logits[best] {
            best = i;
        }
    }
    EmotionLabel::from_index(best).expect("index in range")
}

/// Trains a classifier from scratch on `train`, early-stopping on the UAR
/// over `valid` and restoring the best checkpoint.
///
/// Every example must carry `mask_tag`; training data produced under one
/// factor configuration must never silently mix with another.
pub fn train_acrnn(
    train: &[SerExample],
    valid: &[SerExample],
    config: &AcrnnConfig,
    mask_tag: &str,
) -> Result<(AcrnnModel, AcrnnTrainReport)> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::Invalid("classifier training set is empty".into()));
    }
    check_tags(train, mask_tag)?;
    check_tags(valid, mask_tag)?;

    let train_inputs = prepare_inputs(train)?;
    let val_inputs = prepare_inputs(valid)?;
    let targets: Vec<usize> = train_inputs.iter().map(|(_, t)| *t).collect();
    let weights = class_weights(&targets, config.inverse_frequency_weights);

    let mut model = AcrnnModel::new(config.clone(), mask_tag)?;
    let mut optimizer = Optimizer::new(config.optimizer.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed_for("acrnn-train", config.seed));

    let mut order: Vec<usize> = Vec::new();
    let next_index = |rng: &mut ChaCha8Rng, order: &mut Vec<usize>| -> usize {
        if order.is_empty() {
            let mut fresh: Vec<usize> = (0..train_inputs.len()).collect();
            fresh.shuffle(rng);
            *order = fresh;
        }
        order.pop().expect("refilled above")
    };

    let mut report = AcrnnTrainReport {
        losses: Vec::with_capacity(config.steps),
        val_uars: Vec::new(),
        best_val_uar: None,
        best_step: 0,
        steps_run: 0,
        stopped_early: false,
    };
    let mut best_params: Option<Vec<u8>> = None;
    let mut evals_since_best = 0usize;

    for step in 0..config.steps {
        let batch: Vec<usize> = (0..config.batch_size)
            .map(|_| next_index(&mut rng, &mut order))
            .collect();
        let scale = 1.0 / config.batch_size as f64;

        // Per-sample gradients are independent; the fold below adds them in
        // batch order so the result is identical however they are computed.
        let partials = run_batch(&batch, |&i| -> Result<(f64, AcrnnGrads)> {
            let (x, target) = &train_inputs[i];
            let (logits, cache) = model.forward_cached(x)?;
            let (loss, mut dlogits) = cross_entropy(&logits, *target);
            let w = weights[*target] * scale;
            dlogits.mapv_inplace(|v| v * w);
            let mut g = model.zero_grads();
            model.backward(&cache, &dlogits, &mut g);
            Ok((loss * w, g))
        });

        let mut batch_loss = 0.0;
        let mut acc: Option<AcrnnGrads> = None;
        for p in partials {
            let (loss, g) = p?;
            batch_loss += loss;
            match &mut acc {
                None => acc = Some(g),
                Some(a) => add_grads(a, &g),
            }
        }
        let mut grads = acc.expect("batch is nonempty");
        if !batch_loss.is_finite() || !all_finite(&grads) || !all_finite(&model) {
            return Err(Error::Diverged { step });
        }
        report.losses.push(batch_loss);
        optimizer.apply(&mut model, &mut grads);
        report.steps_run = step + 1;

        let due = (step + 1) % config.eval_every == 0 || step + 1 == config.steps;
        if due && !val_inputs.is_empty() {
            let vu = validation_uar(&model, &val_inputs)?;
            if !vu.is_finite() {
                return Err(Error::Diverged { step });
            }
            report.val_uars.push((step + 1, vu));
            let improved = report.best_val_uar.map_or(true, |b| vu > b);
            if improved {
                report.best_val_uar = Some(vu);
                report.best_step = step + 1;
                best_params = Some(params_to_bytes(&model));
                evals_since_best = 0;
            } else {
                evals_since_best += 1;
                if config.patience > 0 && evals_since_best >= config.patience {
                    report.stopped_early = true;
                    break;
                }
            }
        }
    }

    if let Some(bytes) = best_params {
        read_params(&mut model, &mut bytes.as_slice())
            .map_err(|e| Error::Invalid(format!("best checkpoint restore: {e}")))?;
    } else {
        report.best_step = report.steps_run;
    }
    Ok((model, report))
}

/// Predicts a label per example with a frozen model.
///
/// Every example's `mask_tag` must equal the tag the model was trained
/// under; evaluating a classifier on features from a different factor
/// configuration is a harness bug, not a measurement.
pub fn predict_batch(model: &AcrnnModel, examples: &[SerExample]) -> Result<Vec<EmotionLabel>> {
    for ex in examples {
        if ex.mask_tag != model.mask_tag {
            return Err(Error::MaskMismatch {
                model: model.mask_tag.clone(),
                requested: ex.mask_tag.clone(),
            });
        }
    }
    run_batch(examples, |ex| {
        let x = make_acrnn_input(&ex.mel)?;
        let (logits, _) = model.forward(&x)?;
        Ok(argmax_label(&logits))
    })
    .into_iter()
    .collect()
}

/// UAR and confusion matrix of a frozen model over a labeled set.
pub fn evaluate_acrnn(model: &AcrnnModel, examples: &[SerExample]) -> Result<(f64, ConfusionMatrix)> {
    let preds = predict_batch(model, examples)?;
    let labels: Vec<EmotionLabel> = examples.iter().map(|e| e.label).collect();
    Ok((uar(&preds, &labels)?, confusion_matrix(&preds, &labels)?))
}

/// JSON sidecar stored next to a classifier parameter blob.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AcrnnSidecar {
    pub kind: String,
    pub config: AcrnnConfig,
    pub mask_tag: String,
    /// Corpus the training examples came from.
    pub train_corpus: String,
    pub n_train: usize,
    pub best_val_uar: Option<f64>,
    pub param_hash: String,
}

const ACRNN_KIND: &str = "acrnn";

/// Writes the parameter blob and sidecar for a trained classifier.
pub fn save_acrnn(
    path: &Path,
    model: &AcrnnModel,
    train_corpus: &str,
    n_train: usize,
    best_val_uar: Option<f64>,
) -> Result<()> {
    let sidecar = AcrnnSidecar {
        kind: ACRNN_KIND.to_string(),
        config: model.config.clone(),
        mask_tag: model.mask_tag.clone(),
        train_corpus: train_corpus.to_string(),
        n_train,
        best_val_uar,
        param_hash: hash_bytes(&params_to_bytes(model)),
    };
    artifact::save_model(path, model, &sidecar)
}

/// Restores a classifier and its sidecar; verifies kind and parameter hash.
pub fn load_acrnn(path: &Path) -> Result<(AcrnnModel, AcrnnSidecar)> {
    let sidecar: AcrnnSidecar = artifact::read_sidecar(path)?;
    if sidecar.kind != ACRNN_KIND {
        return Err(Error::Invalid(format!(
            "{} holds a {:?} artifact, expected {ACRNN_KIND:?}",
            path.display(),
            sidecar.kind
        )));
    }
    let mut model = AcrnnModel::new(sidecar.config.clone(), sidecar.mask_tag.clone())?;
    artifact::read_params_into(path, &mut model)?;
    let got = hash_bytes(&params_to_bytes(&model));
    if got != sidecar.param_hash {
        return Err(Error::Invalid(format!(
            "{}: parameter hash {got} does not match sidecar {}",
            path.display(),
            sidecar.param_hash
        )));
    }
    Ok((model, sidecar))
}

/// Builds labeled examples from cached features plus a manifest, tagging
/// them all with `mask_tag`. Unlabeled records are rejected.
pub fn examples_from_features(
    mels: &BTreeMap<String, MelSpectrogram>,
    labels: &BTreeMap<String, EmotionLabel>,
    ids: &[String],
    mask_tag: &str,
) -> Result<Vec<SerExample>> {
    let mut missing = Vec::new();
    let mut out = Vec::with_capacity(ids.len());
    for id in ids {
        match (mels.get(id), labels.get(id)) {
            (Some(mel), Some(label)) => out.push(SerExample {
                id: id.clone(),
                mel: mel.clone(),
                label: *label,
                mask_tag: mask_tag.to_string(),
            }),
            _ => missing.push(id.clone()),
        }
    }
    if !missing.is_empty() {
        missing.sort();
        return Err(Error::MissingFeatures(missing));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::features::featurize_manifest;
    use crate::dsp::FrontendConfig;
    use crate::ingest::toy::{synth_toy_corpus, CodingFactor, ToyCorpusSpec};
    use crate::nn::optim::{OptimConfig, OptimKind};
    use ndarray::Array2;
    use std::sync::OnceLock;

    struct Fixture {
        train: Vec<SerExample>,
        valid: Vec<SerExample>,
        test: Vec<SerExample>,
    }

    /// Rhythm-coded toy corpus split 8/4/4 per class into train/valid/test,
    /// with raw log-mels as classifier inputs.
    fn fixture() -> &'static Fixture {
        static FIX: OnceLock<Fixture> = OnceLock::new();
        FIX.get_or_init(|| {
            let dir = tempfile::tempdir().unwrap();
            let spec = ToyCorpusSpec {
                coding_factor: CodingFactor::Rhythm,
                n_speakers: 4,
                n_utterances_per_class: 16,
                utterance_duration: 0.6,
                seed: 202,
                corpus_name: "st".to_string(),
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

            let mut by_class: BTreeMap<usize, Vec<SerExample>> = BTreeMap::new();
            for rec in &manifest.records {
                let label = rec.label.expect("toy corpora are fully labeled");
                let mel = features.get(&rec.id).unwrap().mel.clone();
                by_class.entry(label.index()).or_default().push(SerExample {
                    id: rec.id.clone(),
                    mel,
                    label,
                    mask_tag: "raw".to_string(),
                });
            }
            let (mut train, mut valid, mut test) = (Vec::new(), Vec::new(), Vec::new());
            for (_, mut list) in by_class {
                list.sort_by(|a, b| a.id.cmp(&b.id));
                assert_eq!(list.len(), 16);
                test.extend(list.split_off(12));
                valid.extend(list.split_off(8));
                train.extend(list);
            }
            Fixture { train, valid, test }
        })
    }

    fn small_config(steps: usize, seed: u64) -> AcrnnConfig {
        AcrnnConfig {
            conv_channels: 6,
            fc_dim: 24,
            lstm_hidden: 32,
            attn_dim: 16,
            optimizer: OptimConfig {
                learning_rate: 2e-3,
                ..OptimConfig::default()
            },
            batch_size: 8,
            steps,
            eval_every: 25,
            patience: 5,
            inverse_frequency_weights: false,
            seed,
        }
    }

    #[test]
    fn learns_rhythm_coded_toy_labels() {
        let fix = fixture();
        let config = small_config(400, 3);
        let (model, report) = train_acrnn(&fix.train, &fix.valid, &config, "raw").unwrap();
        let best = report.best_val_uar.unwrap();
        assert!(
            best >= 80.0,
            "validation UAR {best} after {} steps",
            report.steps_run
        );
        // the restored checkpoint must reproduce the reported best
        let val_now = evaluate_acrnn(&model, &fix.valid).unwrap().0;
        assert!((val_now - best).abs() < 1e-9);
    }

    #[test]
    fn shuffled_labels_stay_near_chance() {
        let fix = fixture();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut shuffled = fix.train.clone();
        let mut labels: Vec<EmotionLabel> = shuffled.iter().map(|e| e.label).collect();
        labels.shuffle(&mut rng);
        for (ex, l) in shuffled.iter_mut().zip(labels) {
            ex.label = l;
        }
        let config = AcrnnConfig {
            steps: 120,
            eval_every: 40,
            patience: 0,
            ..small_config(120, 9)
        };
        let (model, _) = train_acrnn(&shuffled, &fix.valid, &config, "raw").unwrap();
        // measure on held-out data the shuffle never touched
        let score = evaluate_acrnn(&model, &fix.test).unwrap().0;
        assert!(
            (15.0..=35.0).contains(&score),
            "label-shuffled training scored {score}"
        );
    }

    #[test]
    fn same_data_config_seed_give_identical_parameters() {
        let fix = fixture();
        let config = small_config(30, 5);
        let (m1, r1) = train_acrnn(&fix.train, &fix.valid, &config, "raw").unwrap();
        let (m2, r2) = train_acrnn(&fix.train, &fix.valid, &config, "raw").unwrap();
        assert_eq!(params_to_bytes(&m1), params_to_bytes(&m2));
        assert_eq!(r1.losses, r2.losses);
        assert_eq!(r1.val_uars, r2.val_uars);
    }

    #[test]
    fn mixed_mask_tags_are_rejected() {
        let fix = fixture();
        let mut mixed = fix.train.clone();
        mixed[3].mask_tag = "CRP".to_string();
        let err = train_acrnn(&mixed, &fix.valid, &small_config(10, 0), "raw").unwrap_err();
        match err {
            Error::MixedMaskTags(tags) => assert_eq!(tags, vec!["CRP".to_string(), "raw".into()]),
            other => panic!("expected MixedMaskTags, got {other:?}"),
        }
    }

    #[test]
    fn homogeneous_but_wrong_tag_is_a_mismatch() {
        let fix = fixture();
        let err = train_acrnn(&fix.train, &fix.valid, &small_config(10, 0), "CRP").unwrap_err();
        assert!(matches!(err, Error::MaskMismatch { .. }));
    }

    #[test]
    fn prediction_rejects_foreign_mask_tags() {
        let fix = fixture();
        let config = small_config(5, 1);
        let (model, _) = train_acrnn(&fix.train, &fix.valid, &config, "raw").unwrap();
        let mut foreign = fix.test.clone();
        for ex in &mut foreign {
            ex.mask_tag = "C--".to_string();
        }
        let err = predict_batch(&model, &foreign).unwrap_err();
        match err {
            Error::MaskMismatch { model, requested } => {
                assert_eq!(model, "raw");
                assert_eq!(requested, "C--");
            }
            other => panic!("expected MaskMismatch, got {other:?}"),
        }
    }

    #[test]
    fn divergent_training_is_reported() {
        let fix = fixture();
        let config = AcrnnConfig {
            optimizer: OptimConfig {
                kind: OptimKind::Sgd,
                learning_rate: 1e200,
                clip_norm: 1e210,
                ..OptimConfig::default()
            },
            ..small_config(20, 0)
        };
        let err = train_acrnn(&fix.train, &fix.valid, &config, "raw").unwrap_err();
        assert!(matches!(err, Error::Diverged { .. }));
    }

    #[test]
    fn artifact_round_trip_is_bit_exact() {
        let fix = fixture();
        let config = small_config(8, 12);
        let (model, report) = train_acrnn(&fix.train, &fix.valid, &config, "raw").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("models/clf.bin");
        save_acrnn(&path, &model, "st", fix.train.len(), report.best_val_uar).unwrap();

        let (loaded, sidecar) = load_acrnn(&path).unwrap();
        assert_eq!(params_to_bytes(&loaded), params_to_bytes(&model));
        assert_eq!(sidecar.mask_tag, "raw");
        assert_eq!(sidecar.train_corpus, "st");
        assert_eq!(sidecar.n_train, fix.train.len());
        assert_eq!(sidecar.best_val_uar, report.best_val_uar);

        // loaded and in-memory models must agree on every prediction
        let a = predict_batch(&model, &fix.test).unwrap();
        let b = predict_batch(&loaded, &fix.test).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn wrong_artifact_kind_is_rejected() {
        let fix = fixture();
        let config = small_config(3, 2);
        let (model, _) = train_acrnn(&fix.train, &fix.valid, &config, "raw").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clf.bin");
        save_acrnn(&path, &model, "st", 1, None).unwrap();
        // corrupt the kind field in the sidecar
        let meta = artifact::sidecar_path(&path);
        let text = std::fs::read_to_string(&meta).unwrap();
        std::fs::write(&meta, text.replace("\"acrnn\"", "\"flow\"")).unwrap();
        assert!(matches!(load_acrnn(&path), Err(Error::Invalid(_))));
    }

    #[test]
    fn empty_training_set_is_rejected() {
        let err = train_acrnn(&[], &[], &small_config(10, 0), "raw").unwrap_err();
        assert!(matches!(err, Error::Invalid(_)));
    }

    #[test]
    fn class_weights_inverse_frequency_oracle() {
        // 6 examples: three of class 0, two of class 1, one of class 3.
        let targets = [0, 0, 0, 1, 1, 3];
        let w = class_weights(&targets, true);
        // three classes present, total 6: w_c = 6 / (3 * count_c)
        assert!((w[0] - 6.0 / 9.0).abs() < 1e-12);
        assert!((w[1] - 1.0).abs() < 1e-12);
        assert_eq!(w[2], 0.0);
        assert!((w[3] - 2.0).abs() < 1e-12);
        let uniform = class_weights(&targets, false);
        assert_eq!(uniform, [1.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn missing_features_listed_when_building_examples() {
        let mut mels = BTreeMap::new();
        let mut labels = BTreeMap::new();
        mels.insert(
            "u1".to_string(),
            MelSpectrogram::new(Array2::zeros((5, 80)), 0.016, 16_000),
        );
        labels.insert("u1".to_string(), EmotionLabel::A);
        labels.insert("u2".to_string(), EmotionLabel::H);
        let ids = vec!["u1".to_string(), "u2".to_string(), "u0".to_string()];
        let err = examples_from_features(&mels, &labels, &ids, "raw").unwrap_err();
        match err {
            Error::MissingFeatures(m) => assert_eq!(m, vec!["u0".to_string(), "u2".into()]),
            other => panic!("expected MissingFeatures, got {other:?}"),
        }
    }

    #[test]
    fn early_stopping_restores_best_checkpoint() {
        let fix = fixture();
        let config = AcrnnConfig {
            eval_every: 10,
            patience: 2,
            ..small_config(400, 21)
        };
        let (model, report) = train_acrnn(&fix.train, &fix.valid, &config, "raw").unwrap();
        let best = report.best_val_uar.unwrap();
        let (step, recorded) = report
            .val_uars
            .iter()
            .cloned()
            .fold((0usize, f64::NEG_INFINITY), |acc, (s, v)| {
                if v > acc.1 {
                    (s, v)
                } else {
                    acc
                }
            });
        assert_eq!(report.best_step, step);
        assert!((best - recorded).abs() < 1e-12);
        let val_now = evaluate_acrnn(&model, &fix.valid).unwrap().0;
        assert!((val_now - best).abs() < 1e-9);
        if report.stopped_early {
            assert!(report.steps_run < config.steps);
        }
    }

    #[test]
    fn training_without_validation_set_runs_all_steps() {
        let fix = fixture();
        let config = AcrnnConfig {
            steps: 3,
            ..small_config(3, 33)
        };
        let (_, report) = train_acrnn(&fix.train, &[], &config, "raw").unwrap();
        assert_eq!(report.losses.len(), 3);
        assert!(report.losses.iter().all(|l| l.is_finite()));
        assert!(report.best_val_uar.is_none());
        assert!(report.val_uars.is_empty());
        assert_eq!(report.best_step, 3);
    }
}
