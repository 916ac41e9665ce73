//! Toolkit for probing which speech factors carry emotion cues.
//!
//! The pipeline decomposes speech into content, rhythm, and pitch factors
//! with a bottlenecked factorized autoencoder, reconstructs speech with
//! chosen factors removed, and measures how each factor configuration
//! affects a downstream attention-based emotion classifier, within and
//! across corpora.

pub mod artifact;
pub mod batch;
pub mod cli;
pub mod config;
pub mod diag;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod flow;
pub mod ingest;
pub mod nn;
pub mod ser;
pub mod timbre;
pub mod util;

pub use error::{Error, Result};
