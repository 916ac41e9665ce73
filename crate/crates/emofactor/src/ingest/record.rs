//! Corpus manifests: utterance records and line-delimited JSON storage.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four emotion classes, in fixed index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EmotionLabel {
    A,
    H,
    S,
    N,
}

impl EmotionLabel {
    pub const ALL: [EmotionLabel; 4] = [
        EmotionLabel::A,
        EmotionLabel::H,
        EmotionLabel::S,
        EmotionLabel::N,
    ];

    pub fn index(self) -> usize {
        match self {
            EmotionLabel::A => 0,
            EmotionLabel::H => 1,
            EmotionLabel::S => 2,
            EmotionLabel::N => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<EmotionLabel> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EmotionLabel::A => "A",
            EmotionLabel::H => "H",
            EmotionLabel::S => "S",
            EmotionLabel::N => "N",
        };
        f.write_str(s)
    }
}

/// Dataset partition an utterance belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
    #[default]
    Unassigned,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
            Split::Unassigned => "unassigned",
        };
        f.write_str(s)
    }
}

/// One manifest line: a single audio file with its metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UtteranceRecord {
    pub id: String,
    pub speaker_id: String,
    /// Four-class label; `None` for unlabeled material (e.g. flow-only data).
    pub label: Option<EmotionLabel>,
    pub audio_path: String,
    /// Seconds; must be positive.
    pub duration: f64,
    pub corpus: String,
    #[serde(default)]
    pub split: Split,
}

/// An ordered collection of records plus the standardized audio format.
#[derive(Debug, Clone)]
pub struct CorpusManifest {
    pub records: Vec<UtteranceRecord>,
    pub sample_rate: u32,
    pub bit_depth: u16,
}

impl CorpusManifest {
    pub fn new(records: Vec<UtteranceRecord>) -> Self {
        Self {
            records,
            sample_rate: 16_000,
            bit_depth: 16,
        }
    }

    /// Distinct speaker ids in sorted order.
    pub fn speakers(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.records.iter().map(|r| r.speaker_id.as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    /// Records belonging to one split.
    pub fn split_records(&self, split: Split) -> Vec<&UtteranceRecord> {
        self.records.iter().filter(|r| r.split == split).collect()
    }

    /// Name of the corpus, taken from the first record ("" when empty).
    pub fn corpus_name(&self) -> &str {
        self.records.first().map(|r| r.corpus.as_str()).unwrap_or("")
    }
}

/// Loads a line-delimited JSON manifest, rejecting duplicate ids and
/// non-positive durations. Blank lines are ignored; record order is
/// preserved.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<CorpusManifest> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = std::io::BufReader::new(file);

    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: UtteranceRecord =
            serde_json::from_str(&line).map_err(|e| Error::ManifestParse {
                line: idx + 1,
                reason: e.to_string(),
            })?;
        if record.duration <= 0.0 {
            return Err(Error::ManifestParse {
                line: idx + 1,
                reason: format!("duration must be > 0, got {}", record.duration),
            });
        }
        if !seen.insert(record.id.clone()) {
            return Err(Error::DuplicateId(record.id));
        }
        records.push(record);
    }
    Ok(CorpusManifest::new(records))
}

/// Writes a manifest as line-delimited JSON, one record per line.
pub fn save_manifest(manifest: &CorpusManifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for record in &manifest.records {
        let line = serde_json::to_string(record).map_err(|e| Error::json(path, e))?;
        out.write_all(line.as_bytes()).expect("vec write");
        out.push(b'\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
