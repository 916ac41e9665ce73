//! Command-line driver for the full pipeline: corpus synthesis, split
//! assignment, feature extraction, model training, masked reconstruction,
//! the ablation grid, and cross-corpus evaluation.
//!
//! Conventions: logs go to stderr, the primary output path (or score) goes
//! to stdout, and the exit code is 0 on success, 1 on a domain error or
//! partial ablation failure, and 2 on a usage error.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::{load_run_config, shape_hash, RunConfig};
use crate::dsp::features::{featurize_manifest, load_feature_set, FeatureSet};
use crate::dsp::image::render_spectrogram_png;
use crate::dsp::mel::MelSpectrogram;
use crate::error::{Error, Result};
use crate::eval::harness::raw_mels;
use crate::eval::{
    cross_corpus_eval, emit_report, system_for_tag, AblationConfig, LabeledSplits, ReportBundle,
    ResultRow, REPORT_SCHEMA_VERSION,
};
use crate::flow::{load_flow, reconstruct_corpus, save_flow, train_speechflow, FactorMask};
use crate::ingest::{
    load_manifest, save_manifest, split_corpus, synth_toy_corpus, CorpusManifest, Split,
    ToyCorpusSpec,
};
use crate::ser::{
    evaluate_acrnn, examples_from_features, load_acrnn, save_acrnn, train_acrnn,
};
use crate::timbre::{load_timbre, save_timbre, train_timbre_encoder};
use crate::util::seed_for;

#[derive(Debug, Parser)]
#[command(
    name = "emofactor",
    version,
    about = "Factor-masked speech resynthesis and emotion-recognition ablations"
)]
pub struct Cli {
    /// TOML run configuration; built-in defaults apply when omitted.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Override the global seed from the configuration.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    /// Proceed past configuration-hash mismatches between artifacts.
    #[arg(long, global = true)]
    pub force: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic labeled corpus whose emotion cue rides on one
    /// chosen factor (rhythm, pitch, or content).
    SynthToy {
        /// TOML corpus spec; omitted fields take their defaults.
        #[arg(long, value_name = "FILE")]
        spec: Option<PathBuf>,
        /// Directory for wav files, manifest.jsonl, and toy_params.json.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },

    /// Assign speaker-disjoint train/valid/test splits to a manifest.
    Prepare {
        #[arg(long, value_name = "FILE")]
        manifest: PathBuf,
        /// Where to write the manifest with split assignments.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Train,valid,test fractions; must be positive and sum to 1.
        #[arg(long, value_name = "A,B,C", default_value = "0.6,0.2,0.2")]
        ratios: String,
    },

    /// Extract mel and pitch features for every utterance in a manifest.
    Featurize {
        #[arg(long, value_name = "FILE")]
        manifest: PathBuf,
        /// Directory the manifest's audio paths are relative to.
        #[arg(long, value_name = "DIR")]
        audio_dir: PathBuf,
        /// Feature cache directory.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Keep cached records whose configuration hash matches.
        #[arg(long)]
        reuse: bool,
    },

    /// Train the speaker (timbre) encoder on the training split.
    TrainTimbre {
        #[arg(long, value_name = "FILE")]
        manifest: PathBuf,
        /// Feature cache directory from `featurize`.
        #[arg(long, value_name = "DIR")]
        features: PathBuf,
        /// Output model file.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },

    /// Train the factorized autoencoder on the training split.
    TrainFlow {
        #[arg(long, value_name = "FILE")]
        manifest: PathBuf,
        #[arg(long, value_name = "DIR")]
        features: PathBuf,
        /// Trained timbre model from `train-timbre`.
        #[arg(long, value_name = "FILE")]
        timbre: PathBuf,
        /// Output model file.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },

    /// Reconstruct utterances under a factor mask and render inspection
    /// spectrogram images plus an index.json with per-utterance errors.
    Reconstruct {
        #[arg(long, value_name = "FILE")]
        manifest: PathBuf,
        #[arg(long, value_name = "DIR")]
        features: PathBuf,
        /// Trained autoencoder from `train-flow`.
        #[arg(long, value_name = "FILE")]
        flow: PathBuf,
        /// Factor mask such as CRP, -R-, or --- (kept factors spelled out).
        #[arg(long, value_name = "MASK", allow_hyphen_values = true)]
        mask: String,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Only process the first N utterances (sorted by id).
        #[arg(long, value_name = "N")]
        limit: Option<usize>,
    },

    /// Train one emotion classifier on raw features or, with --mask and
    /// --flow, on masked reconstructions.
    TrainSer {
        #[arg(long, value_name = "FILE")]
        manifest: PathBuf,
        #[arg(long, value_name = "DIR")]
        features: PathBuf,
        /// Factor mask for reconstructed training data; omit to train on
        /// raw features.
        #[arg(long, value_name = "MASK", requires = "flow", allow_hyphen_values = true)]
        mask: Option<String>,
        /// Autoencoder used to reconstruct the training data.
        #[arg(long, value_name = "FILE", requires = "mask")]
        flow: Option<PathBuf>,
        /// Output model file.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },

    /// Run the nine-system ablation grid within one corpus and write the
    /// trained classifiers plus a report.
    Ablate {
        #[arg(long, value_name = "FILE")]
        manifest: PathBuf,
        #[arg(long, value_name = "DIR")]
        features: PathBuf,
        #[arg(long, value_name = "FILE")]
        flow: PathBuf,
        /// Output directory; models land in models/, the report in report/.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Comma-separated system numbers (1-9) to run; default all nine.
        #[arg(long, value_name = "N,N,...")]
        systems: Option<String>,
    },

    /// Evaluate a trained classifier on another corpus's test split, using
    /// the training side's autoencoder for reconstructed systems.
    Xeval {
        /// Trained classifier from `train-ser` or `ablate`.
        #[arg(long, value_name = "FILE")]
        ser: PathBuf,
        /// Autoencoder the classifier's training data came from.
        #[arg(long, value_name = "FILE")]
        flow: PathBuf,
        /// Manifest of the evaluation corpus, with split assignments.
        #[arg(long, value_name = "FILE")]
        test_manifest: PathBuf,
        /// Feature cache of the evaluation corpus.
        #[arg(long, value_name = "DIR")]
        test_features: PathBuf,
        /// Optional directory for a single-row report.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },

    /// Regenerate report files (CSV tables and heatmaps) from a saved
    /// report.json bundle.
    Report {
        #[arg(long, value_name = "FILE")]
        bundle: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
}

/// Parses arguments, runs the selected command, and returns the process
/// exit code. Never panics on bad input; clap usage errors exit with 2.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    let base = match &cli.config {
        Some(path) => load_run_config(path)?,
        None => RunConfig::default(),
    };
    let run_config = base.resolved_with_seed(cli.seed);
    let force = cli.force;

    match cli.command {
        Command::SynthToy { spec, out } => cmd_synth_toy(spec.as_deref(), &out, cli.seed),
        Command::Prepare {
            manifest,
            out,
            ratios,
        } => cmd_prepare(&manifest, &out, &ratios, run_config.seed),
        Command::Featurize {
            manifest,
            audio_dir,
            out,
            reuse,
        } => cmd_featurize(&manifest, &audio_dir, &out, reuse, &run_config),
        Command::TrainTimbre {
            manifest,
            features,
            out,
        } => cmd_train_timbre(&manifest, &features, &out, &run_config, force),
        Command::TrainFlow {
            manifest,
            features,
            timbre,
            out,
        } => cmd_train_flow(&manifest, &features, &timbre, &out, &run_config, force),
        Command::Reconstruct {
            manifest,
            features,
            flow,
            mask,
            out,
            limit,
        } => cmd_reconstruct(&manifest, &features, &flow, &mask, &out, limit, &run_config, force),
        Command::TrainSer {
            manifest,
            features,
            mask,
            flow,
            out,
        } => cmd_train_ser(
            &manifest,
            &features,
            mask.as_deref(),
            flow.as_deref(),
            &out,
            &run_config,
            force,
        ),
        Command::Ablate {
            manifest,
            features,
            flow,
            out,
            systems,
        } => cmd_ablate(&manifest, &features, &flow, &out, systems.as_deref(), &run_config, force),
        Command::Xeval {
            ser,
            flow,
            test_manifest,
            test_features,
            out,
        } => cmd_xeval(
            &ser,
            &flow,
            &test_manifest,
            &test_features,
            out.as_deref(),
            &run_config,
            force,
        ),
        Command::Report { bundle, out } => cmd_report(&bundle, &out),
    }
}

fn log(stage: &str, msg: &str) {
    eprintln!("[{stage}] {msg}");
}

fn short(hash: &str) -> &str {
    &hash[..hash.len().min(12)]
}

fn fmt_opt(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:.4}"),
        None => "n/a".to_string(),
    }
}

/// File-name-safe version of an utterance id.
fn safe_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn parse_ratios(text: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::Invalid(format!(
            "ratios {text:?}: expected three comma-separated numbers"
        )));
    }
    let mut values = [0.0f64; 3];
    for (value, part) in values.iter_mut().zip(&parts) {
        *value = part.trim().parse().map_err(|_| {
            Error::Invalid(format!("ratios {text:?}: {part:?} is not a number"))
        })?;
    }
    Ok((values[0], values[1], values[2]))
}

fn parse_systems(text: &str) -> Result<Vec<u8>> {
    let mut numbers = BTreeSet::new();
    for part in text.split(',') {
        let n: u8 = part.trim().parse().map_err(|_| {
            Error::Invalid(format!("systems {text:?}: {part:?} is not a system number"))
        })?;
        numbers.insert(n);
    }
    if numbers.is_empty() {
        return Err(Error::Invalid("systems list is empty".to_string()));
    }
    Ok(numbers.into_iter().collect())
}

/// Loads a feature cache, insisting it matches the configured frontend
/// unless `--force` downgrades the mismatch to a warning.
fn load_features_checked(
    dir: &Path,
    manifest: &CorpusManifest,
    run_config: &RunConfig,
    force: bool,
) -> Result<FeatureSet> {
    let expected = run_config.frontend.content_hash();
    match load_feature_set(dir, manifest, &expected) {
        Err(Error::FeatureHashMismatch { found, expected }) if force => {
            log(
                "config",
                &format!(
                    "feature cache {} has frontend hash {}, configuration expects {}; \
                     continuing with the cache's configuration (--force)",
                    dir.display(),
                    short(&found),
                    short(&expected)
                ),
            );
            load_feature_set(dir, manifest, &found)
        }
        other => other,
    }
}

/// Compares an artifact's recorded feature-configuration hash against the
/// feature cache in use; `--force` downgrades a mismatch to a warning.
fn check_artifact_hash(artifact: &str, found: &str, expected: &str, force: bool) -> Result<()> {
    if found == expected {
        return Ok(());
    }
    if force {
        log(
            "config",
            &format!(
                "{artifact} was built under frontend hash {}, features use {}; \
                 continuing (--force)",
                short(found),
                short(expected)
            ),
        );
        return Ok(());
    }
    Err(Error::ConfigHashMismatch {
        artifact: artifact.to_string(),
        found: found.to_string(),
        expected: expected.to_string(),
    })
}

/// Sorted ids of each assigned split.
fn split_ids(manifest: &CorpusManifest) -> (Vec<String>, Vec<String>, Vec<String>) {
    let (mut train, mut valid, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for record in &manifest.records {
        match record.split {
            Split::Train => train.push(record.id.clone()),
            Split::Valid => valid.push(record.id.clone()),
            Split::Test => test.push(record.id.clone()),
            Split::Unassigned => {}
        }
    }
    train.sort();
    valid.sort();
    test.sort();
    (train, valid, test)
}

fn cmd_synth_toy(spec_path: Option<&Path>, out: &Path, seed_override: Option<u64>) -> Result<i32> {
    let mut spec = match spec_path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            toml::from_str::<ToyCorpusSpec>(&text)
                .map_err(|e| Error::Invalid(format!("toy spec {}: {e}", path.display())))?
        }
        None => ToyCorpusSpec::default(),
    };
    if let Some(seed) = seed_override {
        spec.seed = seed;
    }
    let (manifest, _) = synth_toy_corpus(&spec, out)?;
    log(
        "synth-toy",
        &format!(
            "corpus {:?} ({:?}-coded): {} utterances across {} speakers",
            spec.corpus_name,
            spec.coding_factor,
            manifest.records.len(),
            manifest.speakers().len()
        ),
    );
    println!("{}", out.join("manifest.jsonl").display());
    Ok(0)
}

fn cmd_prepare(manifest_path: &Path, out: &Path, ratios_text: &str, seed: u64) -> Result<i32> {
    let manifest = load_manifest(manifest_path)?;
    let ratios = parse_ratios(ratios_text)?;
    let split = split_corpus(&manifest, ratios, seed_for("split", seed))?;
    let (train, valid, test) = split_ids(&split);
    save_manifest(&split, out)?;
    log(
        "prepare",
        &format!(
            "{} train / {} valid / {} test utterances over {} speakers",
            train.len(),
            valid.len(),
            test.len(),
            split.speakers().len()
        ),
    );
    println!("{}", out.display());
    Ok(0)
}

fn cmd_featurize(
    manifest_path: &Path,
    audio_dir: &Path,
    out: &Path,
    reuse: bool,
    run_config: &RunConfig,
) -> Result<i32> {
    let manifest = load_manifest(manifest_path)?;
    let features = featurize_manifest(&manifest, audio_dir, &run_config.frontend, out, reuse)?;
    log(
        "featurize",
        &format!(
            "{} utterances cached under frontend hash {}",
            features.records.len(),
            short(&features.config_hash)
        ),
    );
    println!("{}", out.display());
    Ok(0)
}

fn cmd_train_timbre(
    manifest_path: &Path,
    features_dir: &Path,
    out: &Path,
    run_config: &RunConfig,
    force: bool,
) -> Result<i32> {
    let manifest = load_manifest(manifest_path)?;
    let features = load_features_checked(features_dir, &manifest, run_config, force)?;
    let (train_ids, _, _) = split_ids(&manifest);
    if train_ids.is_empty() {
        return Err(Error::Invalid(
            "manifest has no training-split records; run `prepare` first".to_string(),
        ));
    }
    let (model, report) = train_timbre_encoder(&features, &train_ids, &run_config.timbre)?;
    save_timbre(&model, &features.config_hash, out)?;
    log(
        "train-timbre",
        &format!(
            "{} speakers, loss {:.4} -> {:.4} over {} steps",
            model.speakers.len(),
            report.initial_loss,
            report.final_loss,
            report.steps
        ),
    );
    println!("{}", out.display());
    Ok(0)
}

fn cmd_train_flow(
    manifest_path: &Path,
    features_dir: &Path,
    timbre_path: &Path,
    out: &Path,
    run_config: &RunConfig,
    force: bool,
) -> Result<i32> {
    let manifest = load_manifest(manifest_path)?;
    let features = load_features_checked(features_dir, &manifest, run_config, force)?;
    let (timbre, timbre_sidecar) = load_timbre(timbre_path)?;
    check_artifact_hash(
        "timbre model",
        &timbre_sidecar.feature_config_hash,
        &features.config_hash,
        force,
    )?;
    let (train_ids, valid_ids, _) = split_ids(&manifest);
    if train_ids.is_empty() {
        return Err(Error::Invalid(
            "manifest has no training-split records; run `prepare` first".to_string(),
        ));
    }
    let (model, report) =
        train_speechflow(&features, &train_ids, &valid_ids, &timbre, &run_config.flow)?;
    save_flow(
        &model,
        &features.config_hash,
        manifest.corpus_name(),
        report.best_val_loss,
        out,
    )?;
    log(
        "train-flow",
        &format!(
            "loss {:.4} -> {:.4}; best validation loss {} at step {}",
            report.initial_loss,
            report.final_loss,
            fmt_opt(report.best_val_loss),
            report.best_step
        ),
    );
    println!("{}", out.display());
    Ok(0)
}

#[derive(Serialize)]
struct ReconstructionItem {
    id: String,
    mse: f64,
    source_png: String,
    recon_png: String,
}

#[derive(Serialize)]
struct ReconstructionIndex {
    mask: String,
    model_hash: String,
    feature_config_hash: String,
    mean_mse: f64,
    items: Vec<ReconstructionItem>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_reconstruct(
    manifest_path: &Path,
    features_dir: &Path,
    flow_path: &Path,
    mask_text: &str,
    out: &Path,
    limit: Option<usize>,
    run_config: &RunConfig,
    force: bool,
) -> Result<i32> {
    let manifest = load_manifest(manifest_path)?;
    let features = load_features_checked(features_dir, &manifest, run_config, force)?;
    let (flow, flow_sidecar) = load_flow(flow_path)?;
    check_artifact_hash(
        "flow model",
        &flow_sidecar.feature_config_hash,
        &features.config_hash,
        force,
    )?;
    let mask: FactorMask = mask_text.parse()?;

    let mut ids: Vec<String> = manifest.records.iter().map(|r| r.id.clone()).collect();
    ids.sort();
    if let Some(n) = limit {
        ids.truncate(n);
    }
    if ids.is_empty() {
        return Err(Error::Invalid("no utterances to reconstruct".to_string()));
    }

    let recon = reconstruct_corpus(&features, &ids, mask, &flow)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    let mut items = Vec::with_capacity(ids.len());
    for id in &ids {
        let source = &features.get(id)?.mel;
        let rebuilt = &recon.mels[id];
        let stem = safe_stem(id);
        let source_png = format!("{stem}_source.png");
        let recon_png = format!("{stem}_recon.png");
        render_spectrogram_png(source, &out.join(&source_png), None)?;
        render_spectrogram_png(rebuilt, &out.join(&recon_png), None)?;
        let diff = &source.frames - &rebuilt.frames;
        let mse = diff.mapv(|v| v * v).mean().unwrap_or(0.0);
        items.push(ReconstructionItem {
            id: id.clone(),
            mse,
            source_png,
            recon_png,
        });
    }
    let mean_mse = items.iter().map(|i| i.mse).sum::<f64>() / items.len() as f64;

    let index = ReconstructionIndex {
        mask: mask.to_string(),
        model_hash: recon.model_hash.clone(),
        feature_config_hash: recon.feature_config_hash.clone(),
        mean_mse,
        items,
    };
    let index_path = out.join("index.json");
    let json = serde_json::to_string_pretty(&index).map_err(|e| Error::json(&index_path, e))?;
    std::fs::write(&index_path, json).map_err(|e| Error::io(&index_path, e))?;

    log(
        "reconstruct",
        &format!(
            "mask {} over {} utterances, mean reconstruction MSE {:.4}",
            mask,
            ids.len(),
            mean_mse
        ),
    );
    println!("{}", index_path.display());
    Ok(0)
}

fn cmd_train_ser(
    manifest_path: &Path,
    features_dir: &Path,
    mask_text: Option<&str>,
    flow_path: Option<&Path>,
    out: &Path,
    run_config: &RunConfig,
    force: bool,
) -> Result<i32> {
    let manifest = load_manifest(manifest_path)?;
    let features = load_features_checked(features_dir, &manifest, run_config, force)?;
    let data = LabeledSplits::from_manifest(&manifest, features)?;

    let (tag, mels): (String, BTreeMap<String, MelSpectrogram>) = match (mask_text, flow_path) {
        (Some(text), Some(path)) => {
            let mask: FactorMask = text.parse()?;
            let (flow, flow_sidecar) = load_flow(path)?;
            check_artifact_hash(
                "flow model",
                &flow_sidecar.feature_config_hash,
                &data.features.config_hash,
                force,
            )?;
            let recon = reconstruct_corpus(&data.features, &data.all_ids(), mask, &flow)?;
            (mask.to_string(), recon.mels)
        }
        (None, None) => (
            crate::eval::RAW_TAG.to_string(),
            raw_mels(&data.features, &data.all_ids()),
        ),
        // clap's `requires` links make --mask and --flow appear together.
        _ => unreachable!("--mask and --flow require each other"),
    };

    let train = examples_from_features(&mels, &data.labels, &data.train_ids, &tag)?;
    let valid = examples_from_features(&mels, &data.labels, &data.valid_ids, &tag)?;
    let test = examples_from_features(&mels, &data.labels, &data.test_ids, &tag)?;
    let (model, report) = train_acrnn(&train, &valid, &run_config.acrnn, &tag)?;
    let (test_uar, _) = evaluate_acrnn(&model, &test)?;
    save_acrnn(out, &model, &data.corpus, train.len(), report.best_val_uar)?;
    log(
        "train-ser",
        &format!(
            "[{tag}] {} steps, best validation UAR {}, test UAR {test_uar:.2}",
            report.steps_run,
            fmt_opt(report.best_val_uar)
        ),
    );
    println!("{}", out.display());
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_ablate(
    manifest_path: &Path,
    features_dir: &Path,
    flow_path: &Path,
    out: &Path,
    systems_text: Option<&str>,
    run_config: &RunConfig,
    force: bool,
) -> Result<i32> {
    let manifest = load_manifest(manifest_path)?;
    let features = load_features_checked(features_dir, &manifest, run_config, force)?;
    let data = LabeledSplits::from_manifest(&manifest, features)?;
    let (flow, flow_sidecar) = load_flow(flow_path)?;
    check_artifact_hash(
        "flow model",
        &flow_sidecar.feature_config_hash,
        &data.features.config_hash,
        force,
    )?;
    let systems = match systems_text {
        Some(text) => Some(parse_systems(text)?),
        None => None,
    };
    let config = AblationConfig {
        acrnn: run_config.acrnn.clone(),
        seed: run_config.seed,
        systems,
    };
    log(
        "ablate",
        &format!(
            "corpus {:?}: {}/{}/{} train/valid/test, classifier shape {}",
            data.corpus,
            data.train_ids.len(),
            data.valid_ids.len(),
            data.test_ids.len(),
            short(&shape_hash(&config.acrnn))
        ),
    );

    let outcome = crate::eval::run_ablation(&flow, &data, &config)?;

    let models_dir = out.join("models");
    std::fs::create_dir_all(&models_dir).map_err(|e| Error::io(&models_dir, e))?;
    for (system_no, model) in &outcome.models {
        let best = outcome
            .rows
            .iter()
            .find(|r| r.system_no == *system_no)
            .and_then(|r| r.best_val_uar);
        let path = models_dir.join(format!("ser_sys{system_no}.bin"));
        save_acrnn(&path, model, &data.corpus, data.train_ids.len(), best)?;
    }

    for row in &outcome.rows {
        log(
            "ablate",
            &format!(
                "system {} [{}] {}->{} UAR {:.2}",
                row.system_no, row.mask_tag, row.train_corpus, row.test_corpus, row.uar
            ),
        );
    }
    for failure in &outcome.failures {
        log(
            "ablate",
            &format!("system {} failed: {}", failure.system_no, failure.error),
        );
    }

    let report_dir = out.join("report");
    emit_report(&outcome.rows, &outcome.failures, &report_dir)?;
    println!("{}", report_dir.join("results.csv").display());
    Ok(i32::from(!outcome.failures.is_empty()))
}

fn cmd_xeval(
    ser_path: &Path,
    flow_path: &Path,
    test_manifest_path: &Path,
    test_features_dir: &Path,
    out: Option<&Path>,
    run_config: &RunConfig,
    force: bool,
) -> Result<i32> {
    let (model, ser_sidecar) = load_acrnn(ser_path)?;
    let system = system_for_tag(&model.mask_tag).ok_or_else(|| {
        Error::Invalid(format!(
            "classifier mask tag {:?} does not match any grid system",
            model.mask_tag
        ))
    })?;
    let test_manifest = load_manifest(test_manifest_path)?;
    let test_features = load_features_checked(test_features_dir, &test_manifest, run_config, force)?;
    let (flow, flow_sidecar) = load_flow(flow_path)?;
    check_artifact_hash(
        "flow model",
        &flow_sidecar.feature_config_hash,
        &test_features.config_hash,
        force,
    )?;
    let data = LabeledSplits::from_manifest(&test_manifest, test_features)?;
    let row: ResultRow =
        cross_corpus_eval(&model, &ser_sidecar.train_corpus, &flow, &data, &system)?;
    log(
        "xeval",
        &format!(
            "system {} [{}] {}->{} UAR {:.2} over {} test utterances",
            row.system_no,
            row.mask_tag,
            row.train_corpus,
            row.test_corpus,
            row.uar,
            data.test_ids.len()
        ),
    );
    match out {
        Some(dir) => {
            emit_report(std::slice::from_ref(&row), &[], dir)?;
            println!("{}", dir.join("results.csv").display());
        }
        None => println!("{:.4}", row.uar),
    }
    Ok(0)
}

fn cmd_report(bundle_path: &Path, out: &Path) -> Result<i32> {
    let text = std::fs::read_to_string(bundle_path).map_err(|e| Error::io(bundle_path, e))?;
    let bundle: ReportBundle =
        serde_json::from_str(&text).map_err(|e| Error::json(bundle_path, e))?;
    if bundle.version != REPORT_SCHEMA_VERSION {
        return Err(Error::Invalid(format!(
            "report bundle version {} unsupported (expected {})",
            bundle.version, REPORT_SCHEMA_VERSION
        )));
    }
    let written = emit_report(&bundle.rows, &bundle.failures, out)?;
    log(
        "report",
        &format!("{} files regenerated in {}", written.len(), out.display()),
    );
    println!("{}", out.join("results.csv").display());
    Ok(0)
}
