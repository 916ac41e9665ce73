//! Per-utterance feature cache: mel + normalized pitch, bound to the
//! frontend configuration that produced them.

use std::collections::BTreeMap;
use std::io::Read as _;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::batch::run_batch;
use crate::dsp::mel::{extract_mel, MelSpectrogram};
use crate::dsp::pitch::{
    compute_speaker_pitch_stats, extract_pitch, normalize_pitch, PitchContour, SpeakerPitchStats,
};
use crate::dsp::FrontendConfig;
use crate::error::{Error, Result};
use crate::ingest::audio::load_standardized;
use crate::ingest::record::CorpusManifest;
use crate::util::hash_bytes;

const MAGIC: &[u8; 8] = b"EFFEAT01";

/// Cached features for one utterance (pitch already speaker-normalized).
#[derive(Debug, Clone)]
pub struct FeatureRecord {
    pub id: String,
    pub speaker_id: String,
    pub mel: MelSpectrogram,
    pub pitch: PitchContour,
}

/// All features for a manifest, keyed by utterance id.
#[derive(Debug, Clone)]
pub struct FeatureSet {
    pub config_hash: String,
    pub records: BTreeMap<String, FeatureRecord>,
    pub speaker_stats: BTreeMap<String, SpeakerPitchStats>,
}

impl FeatureSet {
    pub fn get(&self, id: &str) -> Result<&FeatureRecord> {
        self.records
            .get(id)
            .ok_or_else(|| Error::MissingFeatures(vec![id.to_string()]))
    }
}

/// Sidecar describing a feature directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub config_hash: String,
    pub frontend: FrontendConfig,
    pub speakers: BTreeMap<String, SpeakerPitchStats>,
    /// What data the pitch statistics were pooled over.
    pub stats_scope: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RecordHeader {
    id: String,
    speaker_id: String,
    config_hash: String,
    t: usize,
    n_mels: usize,
    hop_secs: f64,
    sample_rate: u32,
    normalized: bool,
}

fn feature_file_name(id: &str) -> String {
    let sanitized: String = id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("{sanitized}-{}.feat", hash_bytes(id.as_bytes()))
}

/// Writes one record; the layout is a JSON header followed by raw
/// little-endian f64 mel rows, f64 pitch values, and voiced bytes.
pub fn write_feature_record(dir: &Path, rec: &FeatureRecord, config_hash: &str) -> Result<PathBuf> {
    let path = dir.join(feature_file_name(&rec.id));
    let header = RecordHeader {
        id: rec.id.clone(),
        speaker_id: rec.speaker_id.clone(),
        config_hash: config_hash.to_string(),
        t: rec.mel.n_frames(),
        n_mels: rec.mel.frames.ncols(),
        hop_secs: rec.mel.hop_secs,
        sample_rate: rec.mel.sample_rate,
        normalized: rec.pitch.normalized,
    };
    let header_json = serde_json::to_vec(&header).map_err(|e| Error::json(&path, e))?;
    let mut buf = Vec::with_capacity(header_json.len() + rec.mel.frames.len() * 8 + 64);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(header_json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&header_json);
    for &v in rec.mel.frames.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for &v in &rec.pitch.f0 {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for &v in &rec.pitch.voiced {
        buf.push(u8::from(v));
    }
    std::fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Reads one record back; returns the record and the config hash it was
/// extracted under.
pub fn read_feature_record(path: &Path) -> Result<(FeatureRecord, String)> {
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    let fail = |reason: &str| Error::Invalid(format!("{}: {reason}", path.display()));
    if bytes.len() < 12 || &bytes[..8] != MAGIC {
        return Err(fail("not a feature record (bad magic)"));
    }
    let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let header_end = 12 + header_len;
    if bytes.len() < header_end {
        return Err(fail("truncated header"));
    }
    let header: RecordHeader =
        serde_json::from_slice(&bytes[12..header_end]).map_err(|e| Error::json(path, e))?;
    let mel_len = header.t * header.n_mels * 8;
    let f0_len = header.t * 8;
    let expected = header_end + mel_len + f0_len + header.t;
    if bytes.len() != expected {
        return Err(fail("truncated payload"));
    }
    let read_f64s = |from: usize, count: usize| -> Vec<f64> {
        (0..count)
            .map(|i| {
                let at = from + i * 8;
                f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap())
            })
            .collect()
    };
    let mel_values = read_f64s(header_end, header.t * header.n_mels);
    let frames = Array2::from_shape_vec((header.t, header.n_mels), mel_values)
        .map_err(|_| fail("bad mel shape"))?;
    let f0 = read_f64s(header_end + mel_len, header.t);
    let voiced: Vec<bool> = bytes[header_end + mel_len + f0_len..expected]
        .iter()
        .map(|&b| b != 0)
        .collect();
    let rec = FeatureRecord {
        id: header.id,
        speaker_id: header.speaker_id,
        mel: MelSpectrogram::new(frames, header.hop_secs, header.sample_rate),
        pitch: PitchContour {
            f0,
            voiced,
            hop_secs: header.hop_secs,
            normalized: header.normalized,
        },
    };
    Ok((rec, header.config_hash))
}

/// Extracts features for every record in the manifest and caches them under
/// `out_dir`.
///
/// Audio paths are resolved relative to `base_dir`. Pitch statistics are
/// pooled per speaker over this manifest's contours (recorded in the meta
/// sidecar as the stats scope). With `reuse` set and a complete cache whose
/// config hash matches, the cache is loaded instead of recomputed.
pub fn featurize_manifest(
    manifest: &CorpusManifest,
    base_dir: &Path,
    cfg: &FrontendConfig,
    out_dir: &Path,
    reuse: bool,
) -> Result<FeatureSet> {
    cfg.validate()?;
    let config_hash = cfg.content_hash();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    if reuse {
        if let Ok(set) = load_feature_set(out_dir, manifest, &config_hash) {
            return Ok(set);
        }
    }

    let jobs: Vec<(String, String, PathBuf)> = manifest
        .records
        .iter()
        .map(|r| {
            (
                r.id.clone(),
                r.speaker_id.clone(),
                base_dir.join(&r.audio_path),
            )
        })
        .collect();
    let extracted: Vec<Result<(String, String, MelSpectrogram, PitchContour)>> =
        run_batch(&jobs, |(id, speaker, path)| {
            let wav = load_standardized(path)?;
            let mel = extract_mel(&wav, cfg)?;
            let pitch = extract_pitch(&wav, cfg)?;
            if mel.n_frames() != pitch.n_frames() {
                return Err(Error::FrameMisaligned {
                    mel: mel.n_frames(),
                    pitch: pitch.n_frames(),
                });
            }
            Ok((id.clone(), speaker.clone(), mel, pitch))
        });

    let mut raw: Vec<(String, String, MelSpectrogram, PitchContour)> = Vec::new();
    for r in extracted {
        raw.push(r?);
    }

    let mut by_speaker: BTreeMap<String, Vec<&PitchContour>> = BTreeMap::new();
    for (_, speaker, _, pitch) in &raw {
        by_speaker.entry(speaker.clone()).or_default().push(pitch);
    }
    let speaker_stats: BTreeMap<String, SpeakerPitchStats> = by_speaker
        .iter()
        .map(|(s, contours)| (s.clone(), compute_speaker_pitch_stats(contours.iter().copied(), s)))
        .collect();

    let mut records = BTreeMap::new();
    for (id, speaker, mel, pitch) in raw {
        let normalized = normalize_pitch(&pitch, &speaker_stats[&speaker])?;
        let rec = FeatureRecord {
            id: id.clone(),
            speaker_id: speaker,
            mel,
            pitch: normalized,
        };
        write_feature_record(out_dir, &rec, &config_hash)?;
        records.insert(id, rec);
    }

    let meta = FeatureMeta {
        config_hash: config_hash.clone(),
        frontend: cfg.clone(),
        speakers: speaker_stats.clone(),
        stats_scope: "manifest".to_string(),
    };
    let meta_path = out_dir.join("features_meta.json");
    let json = serde_json::to_string_pretty(&meta).map_err(|e| Error::json(&meta_path, e))?;
    std::fs::write(&meta_path, json).map_err(|e| Error::io(&meta_path, e))?;

    Ok(FeatureSet {
        config_hash,
        records,
        speaker_stats,
    })
}

/// Loads cached features for every id in the manifest, refusing caches made
/// under a different frontend configuration and naming any missing ids.
pub fn load_feature_set(
    dir: &Path,
    manifest: &CorpusManifest,
    expected_hash: &str,
) -> Result<FeatureSet> {
    let mut records = BTreeMap::new();
    let mut missing = Vec::new();
    for r in &manifest.records {
        let path = dir.join(feature_file_name(&r.id));
        if !path.exists() {
            missing.push(r.id.clone());
            continue;
        }
        let (rec, hash) = read_feature_record(&path)?;
        if hash != expected_hash {
            return Err(Error::FeatureHashMismatch {
                found: hash,
                expected: expected_hash.to_string(),
            });
        }
        records.insert(r.id.clone(), rec);
    }
    if !missing.is_empty() {
        return Err(Error::MissingFeatures(missing));
    }
    let meta_path = dir.join("features_meta.json");
    let speaker_stats = if meta_path.exists() {
        let text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: FeatureMeta =
            serde_json::from_str(&text).map_err(|e| Error::json(&meta_path, e))?;
        meta.speakers
    } else {
        BTreeMap::new()
    };
    Ok(FeatureSet {
        config_hash: expected_hash.to_string(),
        records,
        speaker_stats,
    })
}
