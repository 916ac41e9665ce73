//! Synthetic factor-coded corpora.
//!
//! Each corpus hides the class identity in exactly one acoustic factor
//! (syllable rate, f0 slope, or vowel-template sequence) while the other
//! factors are drawn independently of the class. Per-speaker voice traits
//! (base f0, formant shift, spectral tilt) are drawn per speaker and are
//! also class-independent. All generation parameters are persisted next to
//! the audio so tests can read them back as oracles.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::batch::run_batch;
use crate::dsp::Waveform;
use crate::error::{Error, Result};
use crate::ingest::audio::write_wav;
use crate::ingest::record::{CorpusManifest, EmotionLabel, Split, UtteranceRecord};
use crate::util::seed_for;

pub const SAMPLE_RATE: u32 = 16_000;

/// Vowel formant templates (F1, F2, F3 in Hz): /i/, /a/, /u/, /ae/.
const TEMPLATES: [[f64; 3]; 4] = [
    [270.0, 2290.0, 3010.0],
    [730.0, 1090.0, 2440.0],
    [300.0, 870.0, 2240.0],
    [660.0, 1720.0, 2410.0],
];
const BANDWIDTHS: [f64; 3] = [90.0, 110.0, 170.0];
const FORMANT_AMPS: [f64; 3] = [1.0, 0.7, 0.35];

/// Which factor carries the class identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodingFactor {
    Rhythm,
    Pitch,
    Content,
}

impl std::str::FromStr for CodingFactor {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rhythm" => Ok(CodingFactor::Rhythm),
            "pitch" => Ok(CodingFactor::Pitch),
            "content" => Ok(CodingFactor::Content),
            other => Err(Error::Invalid(format!(
                "unknown coding factor {other:?} (rhythm|pitch|content)"
            ))),
        }
    }
}

/// Recipe for one synthetic corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ToyCorpusSpec {
    pub coding_factor: CodingFactor,
    pub n_speakers: usize,
    pub n_utterances_per_class: usize,
    pub utterance_duration: f64,
    pub seed: u64,
    /// Corpus name stamped on every record and used in id prefixes.
    pub corpus_name: String,
    /// Class -> syllable rate in Hz (rhythm coding).
    pub rate_set: [f64; 4],
    /// Class -> f0 slope in Hz/s (pitch coding).
    pub slope_set: [f64; 4],
}

impl Default for ToyCorpusSpec {
    fn default() -> Self {
        Self {
            coding_factor: CodingFactor::Rhythm,
            n_speakers: 8,
            n_utterances_per_class: 16,
            utterance_duration: 1.0,
            seed: 0,
            corpus_name: "toy".to_string(),
            rate_set: [2.0, 3.5, 5.0, 6.5],
            slope_set: [-80.0, -30.0, 30.0, 80.0],
        }
    }
}

/// Per-speaker voice traits, drawn independently of class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpeakerTraits {
    pub base_f0: f64,
    pub formant_shift: f64,
    pub tilt: f64,
}

/// Everything the generator decided for one utterance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToyUtteranceParams {
    pub id: String,
    pub label: EmotionLabel,
    pub speaker_id: String,
    pub rate_hz: f64,
    pub f0_base: f64,
    pub f0_slope: f64,
    pub template_ids: Vec<usize>,
    pub formant_shift: f64,
    pub tilt: f64,
}

/// Sidecar written next to the manifest; the oracle tests read this.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToyParams {
    pub spec: ToyCorpusSpec,
    pub speakers: BTreeMap<String, SpeakerTraits>,
    pub utterances: BTreeMap<String, ToyUtteranceParams>,
}

fn formant_gain(f: f64, template: usize, shift: f64, tilt: f64) -> f64 {
    let mut g = 0.02;
    for i in 0..3 {
        let center = TEMPLATES[template][i] * shift;
        let d = (f - center) / BANDWIDTHS[i];
        g += FORMANT_AMPS[i] / (1.0 + d * d);
    }
    g * (f.max(50.0) / 400.0).powf(tilt)
}

/// Renders one utterance: harmonic source following the f0 track, filtered
/// by the per-syllable formant template, shaped by a syllable-rate envelope.
pub fn render_utterance(p: &ToyUtteranceParams, traits: &SpeakerTraits, duration: f64) -> Waveform {
    let n = (duration * SAMPLE_RATE as f64).round() as usize;
    let sr = SAMPLE_RATE as f64;
    let mut samples = vec![0.0f64; n];
    let mut phase = 0.0f64;
    // Harmonic gains are refreshed every 64 samples (4 ms).
    let block = 64;
    let mut gains: Vec<f64> = Vec::new();
    for i in 0..n {
        let t = i as f64 / sr;
        let f0 = (p.f0_base + p.f0_slope * (t - duration / 2.0)).clamp(70.0, 380.0);
        let syl_phase = p.rate_hz * t;
        let k_syl = (syl_phase.floor() as usize).min(p.template_ids.len().saturating_sub(1));
        let template = p.template_ids[k_syl];
        if i % block == 0 {
            let n_harm = ((4000.0 / f0).floor() as usize).max(1);
            gains = (1..=n_harm)
                .map(|k| formant_gain(k as f64 * f0, template, traits.formant_shift, traits.tilt))
                .collect();
        }
        let bump = (std::f64::consts::PI * syl_phase.fract()).sin().powi(2);
        let env = 0.05 + 0.95 * bump;
        phase += 2.0 * std::f64::consts::PI * f0 / sr;
        let mut s = 0.0;
        for (k, &g) in gains.iter().enumerate() {
            s += g * ((k + 1) as f64 * phase).sin();
        }
        samples[i] = env * s;
    }
    let peak = samples.iter().fold(0.0f64, |m, &s| m.max(s.abs()));
    if peak > 0.0 {
        let scale = 0.85 / peak;
        for s in &mut samples {
            *s *= scale;
        }
    }
    Waveform {
        samples,
        sample_rate: SAMPLE_RATE,
    }
}

fn draw_params(spec: &ToyCorpusSpec, traits: &SpeakerTraits, id: &str, speaker_id: &str, class: usize) -> ToyUtteranceParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed_for(
        &format!("toy/{}/{id}", spec.corpus_name),
        spec.seed,
    ));
    let rate_lo = spec.rate_set.iter().cloned().fold(f64::INFINITY, f64::min) - 0.25;
    let rate_hi = spec.rate_set.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 0.25;
    let rate_hz = match spec.coding_factor {
        CodingFactor::Rhythm => spec.rate_set[class] + rng.gen_range(-0.25..0.25),
        _ => rng.gen_range(rate_lo..rate_hi),
    };
    let slope_lo = spec.slope_set.iter().cloned().fold(f64::INFINITY, f64::min) - 10.0;
    let slope_hi = spec.slope_set.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 10.0;
    let f0_slope = match spec.coding_factor {
        CodingFactor::Pitch => spec.slope_set[class] + rng.gen_range(-10.0..10.0),
        _ => rng.gen_range(slope_lo..slope_hi),
    };
    let n_syllables = ((rate_hz * spec.utterance_duration).ceil() as usize).max(1);
    let template_ids: Vec<usize> = match spec.coding_factor {
        CodingFactor::Content => vec![class; n_syllables],
        _ => (0..n_syllables).map(|_| rng.gen_range(0usize..4)).collect(),
    };
    ToyUtteranceParams {
        id: id.to_string(),
        label: EmotionLabel::ALL[class],
        speaker_id: speaker_id.to_string(),
        rate_hz,
        f0_base: traits.base_f0,
        f0_slope,
        template_ids,
        formant_shift: traits.formant_shift,
        tilt: traits.tilt,
    }
}

/// Generates the corpus under `out_dir`: WAV files in `audio/`, a manifest
/// in `manifest.jsonl` (audio paths relative to `out_dir`), and the full
/// parameter sidecar in `toy_params.json`. Byte-identical for a fixed spec.
pub fn synth_toy_corpus(spec: &ToyCorpusSpec, out_dir: impl AsRef<Path>) -> Result<(CorpusManifest, ToyParams)> {
    if spec.n_speakers < 4 {
        return Err(Error::TooFewSpeakers(spec.n_speakers, 4));
    }
    if spec.n_utterances_per_class < 8 {
        return Err(Error::BadConfig(format!(
            "need at least 8 utterances per class, got {}",
            spec.n_utterances_per_class
        )));
    }
    if spec.utterance_duration < 0.2 {
        return Err(Error::BadConfig(format!(
            "utterance_duration {} too short",
            spec.utterance_duration
        )));
    }
    let out_dir = out_dir.as_ref();
    let audio_dir = out_dir.join("audio");
    std::fs::create_dir_all(&audio_dir).map_err(|e| Error::io(&audio_dir, e))?;

    let mut speakers = BTreeMap::new();
    for k in 0..spec.n_speakers {
        let speaker_id = format!("spk{k:02}");
        let mut rng = ChaCha8Rng::seed_from_u64(seed_for(
            &format!("toy-speaker/{}/{speaker_id}", spec.corpus_name),
            spec.seed,
        ));
        speakers.insert(
            speaker_id,
            SpeakerTraits {
                base_f0: rng.gen_range(120.0..260.0),
                formant_shift: rng.gen_range(0.85..1.15),
                tilt: rng.gen_range(-0.35..0.35),
            },
        );
    }

    let mut utterances = BTreeMap::new();
    let mut records = Vec::new();
    for class in 0..4 {
        let letter = EmotionLabel::ALL[class];
        for i in 0..spec.n_utterances_per_class {
            let speaker_id = format!("spk{:02}", i % spec.n_speakers);
            let id = format!("{}-{letter}{i:03}", spec.corpus_name);
            let params = draw_params(spec, &speakers[&speaker_id], &id, &speaker_id, class);
            let rel_path = format!("audio/{id}.wav");
            let n = (spec.utterance_duration * SAMPLE_RATE as f64).round() as usize;
            records.push(UtteranceRecord {
                id: id.clone(),
                speaker_id,
                label: Some(letter),
                audio_path: rel_path,
                duration: n as f64 / SAMPLE_RATE as f64,
                corpus: spec.corpus_name.clone(),
                split: Split::Unassigned,
            });
            utterances.insert(id, params);
        }
    }

    let jobs: Vec<&ToyUtteranceParams> = records.iter().map(|r| &utterances[&r.id]).collect();
    let duration = spec.utterance_duration;
    let results: Vec<Result<()>> = run_batch(&jobs, |p| {
        let wav = render_utterance(p, &speakers[&p.speaker_id], duration);
        write_wav(&wav, audio_dir.join(format!("{}.wav", p.id)))
    });
    for r in results {
        r?;
    }

    let manifest = CorpusManifest::new(records);
    crate::ingest::record::save_manifest(&manifest, out_dir.join("manifest.jsonl"))?;
    let params = ToyParams {
        spec: spec.clone(),
        speakers,
        utterances,
    };
    let params_path = out_dir.join("toy_params.json");
    let json = serde_json::to_string_pretty(&params).map_err(|e| Error::json(&params_path, e))?;
    std::fs::write(&params_path, json).map_err(|e| Error::io(&params_path, e))?;
    Ok((manifest, params))
}

/// Loads the parameter sidecar written by [`synth_toy_corpus`].
pub fn load_toy_params(out_dir: impl AsRef<Path>) -> Result<ToyParams> {
    let path = out_dir.as_ref().join("toy_params.json");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(factor: CodingFactor, name: &str, seed: u64) -> ToyCorpusSpec {
        ToyCorpusSpec {
            coding_factor: factor,
            n_speakers: 4,
            n_utterances_per_class: 8,
            utterance_duration: 0.4,
            seed,
            corpus_name: name.to_string(),
            ..ToyCorpusSpec::default()
        }
    }

    #[test]
    fn rhythm_rate_params_recover_class() {
        let dir = tempfile::tempdir().unwrap();
        let spec = small_spec(CodingFactor::Rhythm, "tr", 3);
        let (manifest, params) = synth_toy_corpus(&spec, dir.path()).unwrap();
        let mut correct = 0;
        for r in &manifest.records {
            let p = &params.utterances[&r.id];
            let guess = spec
                .rate_set
                .iter()
                .enumerate()
                .min_by(|a, b| {
                    (a.1 - p.rate_hz)
                        .abs()
                        .partial_cmp(&(b.1 - p.rate_hz).abs())
                        .unwrap()
                })
                .unwrap()
                .0;
            if EmotionLabel::ALL[guess] == r.label.unwrap() {
                correct += 1;
            }
        }
        let acc = correct as f64 / manifest.records.len() as f64;
        assert!(acc >= 0.95, "rate-threshold classifier accuracy {acc}");
    }

    #[test]
    fn pitch_slopes_are_well_separated_across_classes() {
        let dir = tempfile::tempdir().unwrap();
        let spec = small_spec(CodingFactor::Pitch, "tp", 4);
        let (manifest, params) = synth_toy_corpus(&spec, dir.path()).unwrap();
        let mut by_class: [Vec<f64>; 4] = Default::default();
        for r in &manifest.records {
            by_class[r.label.unwrap().index()].push(params.utterances[&r.id].f0_slope);
        }
        let stats: Vec<(f64, f64)> = by_class
            .iter()
            .map(|v| {
                let n = v.len() as f64;
                let mean = v.iter().sum::<f64>() / n;
                let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
                (mean, var.sqrt())
            })
            .collect();
        for i in 0..4 {
            for j in (i + 1)..4 {
                let gap = (stats[i].0 - stats[j].0).abs();
                let spread = stats[i].1.max(stats[j].1);
                assert!(
                    gap >= 3.0 * spread,
                    "classes {i}/{j}: gap {gap} < 3 x std {spread}"
                );
            }
        }
    }

    #[test]
    fn same_spec_and_seed_is_byte_identical() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let spec = small_spec(CodingFactor::Rhythm, "td", 9);
        let (manifest, _) = synth_toy_corpus(&spec, dir_a.path()).unwrap();
        synth_toy_corpus(&spec, dir_b.path()).unwrap();
        for r in manifest.records.iter().step_by(7) {
            let a = std::fs::read(dir_a.path().join(&r.audio_path)).unwrap();
            let b = std::fs::read(dir_b.path().join(&r.audio_path)).unwrap();
            assert_eq!(a, b, "{}", r.id);
        }
        assert_eq!(
            std::fs::read(dir_a.path().join("manifest.jsonl")).unwrap(),
            std::fs::read(dir_b.path().join("manifest.jsonl")).unwrap()
        );
    }

    #[test]
    fn non_coding_factors_are_uninformative_for_a_stump() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = small_spec(CodingFactor::Rhythm, "ts", 5);
        spec.n_speakers = 8;
        spec.n_utterances_per_class = 50; // 200 utterances total
        let (manifest, params) = synth_toy_corpus(&spec, dir.path()).unwrap();

        let labels: Vec<usize> = manifest
            .records
            .iter()
            .map(|r| r.label.unwrap().index())
            .collect();
        let features: Vec<Vec<f64>> = manifest
            .records
            .iter()
            .map(|r| {
                let p = &params.utterances[&r.id];
                vec![
                    p.f0_slope,
                    p.f0_base,
                    p.tilt,
                    p.formant_shift,
                    p.template_ids[0] as f64,
                ]
            })
            .collect();

        // Best decision stump over all features and 15 quantile thresholds.
        let n = labels.len();
        let mut best = 0.0f64;
        for f in 0..features[0].len() {
            let mut vals: Vec<f64> = features.iter().map(|r| r[f]).collect();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for q in 1..16 {
                let thr = vals[q * n / 16];
                let mut counts = [[0usize; 4]; 2];
                for (i, row) in features.iter().enumerate() {
                    let side = usize::from(row[f] > thr);
                    counts[side][labels[i]] += 1;
                }
                let acc = (counts[0].iter().max().unwrap() + counts[1].iter().max().unwrap())
                    as f64
                    / n as f64;
                best = best.max(acc);
            }
        }
        assert!(best <= 0.35, "stump on non-coding factors reached {best}");
    }

    #[test]
    fn preconditions_are_enforced() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = small_spec(CodingFactor::Rhythm, "tx", 0);
        spec.n_speakers = 3;
        assert!(matches!(
            synth_toy_corpus(&spec, dir.path()),
            Err(Error::TooFewSpeakers(3, 4))
        ));
        let mut spec = small_spec(CodingFactor::Rhythm, "ty", 0);
        spec.n_utterances_per_class = 4;
        assert!(synth_toy_corpus(&spec, dir.path()).is_err());
    }

    #[test]
    fn rendered_audio_is_in_range_and_right_length() {
        let spec = small_spec(CodingFactor::Content, "tc", 1);
        let traits = SpeakerTraits {
            base_f0: 180.0,
            formant_shift: 1.0,
            tilt: 0.1,
        };
        let p = draw_params(&spec, &traits, "tc-A000", "spk00", 0);
        let wav = render_utterance(&p, &traits, spec.utterance_duration);
        assert_eq!(wav.samples.len(), 6400);
        assert!(wav.samples.iter().all(|s| s.abs() <= 0.85 + 1e-12));
        assert!(p.template_ids.iter().all(|&t| t == 0));
    }
}
