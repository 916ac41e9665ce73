//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any stage of the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("manifest parse error at line {line}: {reason}")]
    ManifestParse { line: usize, reason: String },

    #[error("duplicate utterance id {0:?} in manifest")]
    DuplicateId(String),

    #[error("unsupported sample rate {0} Hz (expected 8000..=48000)")]
    UnsupportedSampleRate(u32),

    #[error("unknown label scheme {0:?}")]
    UnknownScheme(String),

    #[error("corpus has {0} speakers, need at least {1}")]
    TooFewSpeakers(usize, usize),

    #[error("invalid split ratios {0:?}: must be positive and sum to 1")]
    BadRatios([f64; 3]),

    #[error("waveform too short: {got} samples, need at least {need}")]
    WaveformTooShort { got: usize, need: usize },

    #[error("empty frame sequence")]
    EmptySequence,

    #[error("pitch contour already normalized")]
    AlreadyNormalized,

    #[error("frame misalignment: mel has {mel} frames, pitch has {pitch}")]
    FrameMisaligned { mel: usize, pitch: usize },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("invalid model config: {0}")]
    BadConfig(String),

    #[error("training diverged at step {step}: loss is not finite")]
    Diverged { step: usize },

    #[error("missing cached features for utterances: {0:?}")]
    MissingFeatures(Vec<String>),

    #[error("feature config hash mismatch: cache has {found}, expected {expected}")]
    FeatureHashMismatch { found: String, expected: String },

    #[error("config hash mismatch for {artifact}: {found} vs expected {expected} (use --force to override)")]
    ConfigHashMismatch {
        artifact: String,
        found: String,
        expected: String,
    },

    #[error("dataset mixes mask tags: {0:?}")]
    MixedMaskTags(Vec<String>),

    #[error("mask mismatch: model was trained under {model}, requested {requested}")]
    MaskMismatch { model: String, requested: String },

    #[error("length mismatch: {0} predictions vs {1} labels")]
    LengthMismatch(usize, usize),

    #[error("invalid factor mask string {0:?}: expected 3 chars over CRP-")]
    BadMaskString(String),

    #[error("{0}")]
    Invalid(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("wav error on {path}: {reason}")]
    Wav { path: String, reason: String },

    #[error("json error on {path}: {reason}")]
    Json { path: String, reason: String },
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn json(path: impl AsRef<std::path::Path>, err: impl std::fmt::Display) -> Self {
        Error::Json {
            path: path.as_ref().display().to_string(),
            reason: err.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
