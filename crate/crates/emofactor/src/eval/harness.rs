//! Drives the ablation grid: build each system's dataset (raw features or
//! masked reconstructions), retrain the classifier from scratch, and score
//! it within or across corpora.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dsp::features::FeatureSet;
use crate::error::{Error, Result};
use crate::eval::metrics::ConfusionMatrix;
use crate::eval::systems::{enumerate_systems, AblationSystem, SystemKind};
use crate::flow::{reconstruct_corpus, SpeechFlowModel};
use crate::ingest::record::{CorpusManifest, EmotionLabel, Split};
use crate::nn::serialize::params_to_bytes;
use crate::ser::model::{AcrnnConfig, AcrnnModel};
use crate::ser::train::{evaluate_acrnn, examples_from_features, train_acrnn, SerExample};
use crate::util::{hash_bytes, seed_for};

/// A labeled corpus with cached features and speaker-disjoint id splits;
/// the unit of data every harness run works on.
#[derive(Debug, Clone)]
pub struct LabeledSplits {
    pub corpus: String,
    pub features: FeatureSet,
    pub labels: BTreeMap<String, EmotionLabel>,
    pub train_ids: Vec<String>,
    pub valid_ids: Vec<String>,
    pub test_ids: Vec<String>,
}

impl LabeledSplits {
    /// Collects split membership and labels from a manifest whose records
    /// have already been assigned to train/valid/test.
    pub fn from_manifest(manifest: &CorpusManifest, features: FeatureSet) -> Result<LabeledSplits> {
        let corpus = manifest.corpus_name().to_string();
        let mut labels = BTreeMap::new();
        let (mut train_ids, mut valid_ids, mut test_ids) = (Vec::new(), Vec::new(), Vec::new());
        let mut unlabeled = Vec::new();
        let mut missing = Vec::new();
        for rec in &manifest.records {
            match rec.label {
                Some(l) => {
                    labels.insert(rec.id.clone(), l);
                }
                None => {
                    unlabeled.push(rec.id.clone());
                    continue;
                }
            }
            if !features.records.contains_key(&rec.id) {
                missing.push(rec.id.clone());
                continue;
            }
            match rec.split {
                Split::Train => train_ids.push(rec.id.clone()),
                Split::Valid => valid_ids.push(rec.id.clone()),
                Split::Test => test_ids.push(rec.id.clone()),
                Split::Unassigned => {
                    return Err(Error::Invalid(format!(
                        "utterance {} has no split assignment; split the manifest first",
                        rec.id
                    )))
                }
            }
        }
        if !unlabeled.is_empty() {
            return Err(Error::Invalid(format!(
                "classifier data must be fully labeled; unlabeled: {unlabeled:?}"
            )));
        }
        if !missing.is_empty() {
            missing.sort();
            return Err(Error::MissingFeatures(missing));
        }
        if train_ids.is_empty() || test_ids.is_empty() {
            return Err(Error::Invalid(
                "need non-empty train and test splits".into(),
            ));
        }
        for ids in [&mut train_ids, &mut valid_ids, &mut test_ids] {
            ids.sort();
        }
        Ok(LabeledSplits {
            corpus,
            features,
            labels,
            train_ids,
            valid_ids,
            test_ids,
        })
    }

    /// Concatenated train, valid, and test ids, in that order.
    pub fn all_ids(&self) -> Vec<String> {
        let mut ids = Vec::with_capacity(
            self.train_ids.len() + self.valid_ids.len() + self.test_ids.len(),
        );
        ids.extend_from_slice(&self.train_ids);
        ids.extend_from_slice(&self.valid_ids);
        ids.extend_from_slice(&self.test_ids);
        ids
    }
}

/// Harness-level settings; the classifier config is a template whose seed is
/// re-derived per system so every system trains from independent randomness.
#[derive(Debug, Clone)]
pub struct AblationConfig {
    pub acrnn: AcrnnConfig,
    /// Global seed; per-system classifier seeds derive from it.
    pub seed: u64,
    /// Restrict the run to these system numbers; `None` runs all nine.
    pub systems: Option<Vec<u8>>,
}

/// One scored (system, train corpus, test corpus) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultRow {
    pub system_no: u8,
    /// `"raw"` for the baseline, otherwise the factor-mask string.
    pub mask_tag: String,
    pub train_corpus: String,
    pub test_corpus: String,
    /// Unweighted average recall over classes present, in percent.
    pub uar: f64,
    pub confusion: ConfusionMatrix,
    pub acrnn_seed: u64,
    /// Hash of the trained classifier parameters.
    pub acrnn_hash: String,
    /// Hash of the reconstruction model; `None` for the raw baseline.
    pub flow_hash: Option<String>,
    pub best_val_uar: Option<f64>,
}

/// A system that could not be scored, with the error it failed on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemFailure {
    pub system_no: u8,
    pub error: String,
}

/// Everything a grid run produces: scored rows, per-system failures, and
/// the trained classifiers (so callers can persist them or reuse them for
/// cross-corpus evaluation).
pub struct AblationOutcome {
    pub rows: Vec<ResultRow>,
    pub failures: Vec<SystemFailure>,
    pub models: BTreeMap<u8, AcrnnModel>,
}

pub(crate) fn raw_mels(
    features: &FeatureSet,
    ids: &[String],
) -> BTreeMap<String, crate::dsp::mel::MelSpectrogram> {
    ids.iter()
        .filter_map(|id| {
            features
                .records
                .get(id)
                .map(|r| (id.clone(), r.mel.clone()))
        })
        .collect()
}

/// Builds the train/valid/test example lists for one system: raw features
/// for the baseline, masked reconstructions (applied identically to every
/// split) otherwise.
fn system_examples(
    flow: &SpeechFlowModel,
    data: &LabeledSplits,
    system: &AblationSystem,
) -> Result<(Vec<SerExample>, Vec<SerExample>, Vec<SerExample>)> {
    let tag = system.mask_tag();
    let mels = match system.kind {
        SystemKind::RawBaseline => raw_mels(&data.features, &data.all_ids()),
        SystemKind::Reconstructed => {
            let mask = system.mask.expect("reconstructed systems carry a mask");
            reconstruct_corpus(&data.features, &data.all_ids(), mask, flow)?.mels
        }
    };
    let train = examples_from_features(&mels, &data.labels, &data.train_ids, &tag)?;
    let valid = examples_from_features(&mels, &data.labels, &data.valid_ids, &tag)?;
    let test = examples_from_features(&mels, &data.labels, &data.test_ids, &tag)?;
    Ok((train, valid, test))
}

fn run_system(
    flow: &SpeechFlowModel,
    data: &LabeledSplits,
    config: &AblationConfig,
    system: &AblationSystem,
) -> Result<(ResultRow, AcrnnModel)> {
    let (train, valid, test) = system_examples(flow, data, system)?;
    let acrnn_config = AcrnnConfig {
        seed: seed_for(&format!("acrnn-system-{}", system.system_no), config.seed),
        ..config.acrnn.clone()
    };
    let tag = system.mask_tag();
    let (model, report) = train_acrnn(&train, &valid, &acrnn_config, &tag)?;
    let (uar, confusion) = evaluate_acrnn(&model, &test)?;
    debug_assert!((0.0..=100.0).contains(&uar));
    let row = ResultRow {
        system_no: system.system_no,
        mask_tag: tag,
        train_corpus: data.corpus.clone(),
        test_corpus: data.corpus.clone(),
        uar,
        confusion,
        acrnn_seed: acrnn_config.seed,
        acrnn_hash: hash_bytes(&params_to_bytes(&model)),
        flow_hash: match system.kind {
            SystemKind::RawBaseline => None,
            SystemKind::Reconstructed => Some(flow.param_hash()),
        },
        best_val_uar: report.best_val_uar,
    };
    Ok((row, model))
}

/// Runs the ablation grid within one corpus.
///
/// Each selected system is scored independently; a failing system is
/// recorded in `failures` and does not abort the others. The caller decides
/// whether partial results are acceptable.
pub fn run_ablation(
    flow: &SpeechFlowModel,
    data: &LabeledSplits,
    config: &AblationConfig,
) -> Result<AblationOutcome> {
    config.acrnn.validate()?;
    if let Some(subset) = &config.systems {
        for no in subset {
            if !(1..=9).contains(no) {
                return Err(Error::Invalid(format!("unknown system number {no}")));
            }
        }
    }
    let mut outcome = AblationOutcome {
        rows: Vec::new(),
        failures: Vec::new(),
        models: BTreeMap::new(),
    };
    for system in enumerate_systems() {
        let selected = config
            .systems
            .as_ref()
            .map_or(true, |subset| subset.contains(&system.system_no));
        if !selected {
            continue;
        }
        match run_system(flow, data, config, &system) {
            Ok((row, model)) => {
                outcome.rows.push(row);
                outcome.models.insert(system.system_no, model);
            }
            Err(e) => outcome.failures.push(SystemFailure {
                system_no: system.system_no,
                error: e.to_string(),
            }),
        }
    }
    Ok(outcome)
}

/// Scores a classifier trained on corpus X against the test split of corpus
/// Y, reconstructing Y's test data with X's reconstruction model under the
/// same factor mask the classifier was trained on.
pub fn cross_corpus_eval(
    model: &AcrnnModel,
    train_corpus: &str,
    flow_x: &SpeechFlowModel,
    data_y: &LabeledSplits,
    system: &AblationSystem,
) -> Result<ResultRow> {
    let tag = system.mask_tag();
    if model.mask_tag != tag {
        return Err(Error::MaskMismatch {
            model: model.mask_tag.clone(),
            requested: tag,
        });
    }
    let mels = match system.kind {
        SystemKind::RawBaseline => raw_mels(&data_y.features, &data_y.test_ids),
        SystemKind::Reconstructed => {
            let mask = system.mask.expect("reconstructed systems carry a mask");
            reconstruct_corpus(&data_y.features, &data_y.test_ids, mask, flow_x)?.mels
        }
    };
    let test = examples_from_features(&mels, &data_y.labels, &data_y.test_ids, &tag)?;
    let (uar, confusion) = evaluate_acrnn(model, &test)?;
    debug_assert!((0.0..=100.0).contains(&uar));
    Ok(ResultRow {
        system_no: system.system_no,
        mask_tag: tag,
        train_corpus: train_corpus.to_string(),
        test_corpus: data_y.corpus.clone(),
        uar,
        confusion,
        acrnn_seed: model.config.seed,
        acrnn_hash: hash_bytes(&params_to_bytes(model)),
        flow_hash: match system.kind {
            SystemKind::RawBaseline => None,
            SystemKind::Reconstructed => Some(flow_x.param_hash()),
        },
        best_val_uar: None,
    })
}
