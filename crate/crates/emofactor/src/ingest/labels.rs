//! Per-corpus raw-label mapping onto the four-class scheme.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::ingest::record::EmotionLabel;

/// Outcome of mapping one raw label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelOutcome {
    Mapped(EmotionLabel),
    /// The raw label falls outside the four-class overlap and the utterance
    /// should be dropped.
    Rejected,
}

/// Registered label schemes.
pub const SCHEMES: [&str; 3] = ["default", "iemocap", "savee"];

fn common_alias(raw: &str) -> Option<EmotionLabel> {
    match raw {
        "a" | "angry" | "anger" => Some(EmotionLabel::A),
        "h" | "happy" | "happiness" => Some(EmotionLabel::H),
        "s" | "sad" | "sadness" => Some(EmotionLabel::S),
        "n" | "neutral" => Some(EmotionLabel::N),
        _ => None,
    }
}

/// Maps a raw corpus label to one of {A, H, S, N} or rejects it.
///
/// Scheme-specific codes are consulted first, then the common aliases
/// (angry/happy/sad/neutral and their single letters, case-insensitive).
/// Anything else — including labels outside the four-class overlap such as
/// "fear" or IEMOCAP's "excited" — is rejected rather than guessed; an
/// explicit merge map can fold such labels in (see [`map_labels_with`]).
pub fn map_labels(raw: &str, scheme: &str) -> Result<LabelOutcome> {
    map_labels_with(raw, scheme, &BTreeMap::new())
}

/// [`map_labels`] with a per-corpus merge map consulted before everything
/// else, e.g. `{"excited": H}` to fold IEMOCAP's excited class into happy.
pub fn map_labels_with(
    raw: &str,
    scheme: &str,
    merge: &BTreeMap<String, EmotionLabel>,
) -> Result<LabelOutcome> {
    let lower = raw.trim().to_ascii_lowercase();
    if let Some(&l) = merge.get(&lower) {
        return Ok(LabelOutcome::Mapped(l));
    }
    let scheme_hit = match scheme {
        "default" => None,
        "iemocap" => match lower.as_str() {
            "ang" => Some(EmotionLabel::A),
            "hap" => Some(EmotionLabel::H),
            "sad" => Some(EmotionLabel::S),
            "neu" => Some(EmotionLabel::N),
            _ => None,
        },
        "savee" => match lower.as_str() {
            "a" => Some(EmotionLabel::A),
            "h" => Some(EmotionLabel::H),
            "sa" => Some(EmotionLabel::S),
            "n" => Some(EmotionLabel::N),
            _ => None,
        },
        other => return Err(Error::UnknownScheme(other.to_string())),
    };
    Ok(match scheme_hit.or_else(|| common_alias(&lower)) {
        Some(l) => LabelOutcome::Mapped(l),
        None => LabelOutcome::Rejected,
    })
}
