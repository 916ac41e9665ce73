//! Corpus ingestion: manifests, label mapping, audio standardization,
//! speaker-disjoint splits, and synthetic factor-coded corpora.

pub mod audio;
pub mod labels;
pub mod record;
pub mod split;
pub mod toy;

pub use audio::{load_standardized, read_wav, standardize_audio, write_wav, MultichannelAudio};
pub use labels::{map_labels, map_labels_with, LabelOutcome};
pub use record::{load_manifest, save_manifest, CorpusManifest, EmotionLabel, Split, UtteranceRecord};
pub use split::split_corpus;
pub use toy::{synth_toy_corpus, CodingFactor, ToyCorpusSpec, ToyParams};
