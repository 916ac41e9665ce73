//! Factor masks and configuration for the factorized autoencoder.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dsp::resample::RrConfig;
use crate::error::{Error, Result};
use crate::nn::optim::OptimConfig;
use crate::util;

/// Which factors a reconstruction preserves. Timbre always passes through;
/// it is not maskable here.
///
/// The canonical string form is three characters, one slot per factor:
/// `C` or `-`, then `R` or `-`, then `P` or `-` (for example `CRP`, `-R-`,
/// `C-P`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FactorMask {
    pub content: bool,
    pub rhythm: bool,
    pub pitch: bool,
}

impl FactorMask {
    /// All factors preserved (`CRP`).
    pub fn full() -> Self {
        FactorMask { content: true, rhythm: true, pitch: true }
    }

    /// All factors removed (`---`); reconstruction keeps only timbre.
    pub fn none() -> Self {
        FactorMask { content: false, rhythm: false, pitch: false }
    }

    /// Parses the 3-character form. Each slot accepts exactly its factor
    /// letter or `-`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::BadMaskString(s.to_string());
        let chars: Vec<char> = s.chars().collect();
        if chars.len() != 3 {
            return Err(bad());
        }
        let slot = |c: char, on: char| match c {
            c if c == on => Ok(true),
            '-' => Ok(false),
            _ => Err(bad()),
        };
        Ok(FactorMask {
            content: slot(chars[0], 'C')?,
            rhythm: slot(chars[1], 'R')?,
            pitch: slot(chars[2], 'P')?,
        })
    }

    /// Number of preserved factors (timbre not counted).
    pub fn n_preserved(&self) -> usize {
        usize::from(self.content) + usize::from(self.rhythm) + usize::from(self.pitch)
    }
}

impl std::fmt::Display for FactorMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}{}{}",
            if self.content { 'C' } else { '-' },
            if self.rhythm { 'R' } else { '-' },
            if self.pitch { 'P' } else { '-' },
        )
    }
}

impl std::str::FromStr for FactorMask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FactorMask::parse(s)
    }
}

impl Serialize for FactorMask {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FactorMask {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        FactorMask::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Hyperparameters of the factorized autoencoder.
///
/// The per-frame latent budget `d_c/down_c + d_r/down_r + d_f/down_f` must
/// stay below the 80 mel channels of the input; this is the bottleneck that
/// forces the encoders to split information rather than copy the input.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SpeechFlowConfig {
    /// Content latent width.
    pub d_c: usize,
    /// Rhythm latent width.
    pub d_r: usize,
    /// Pitch latent width.
    pub d_f: usize,
    /// Timbre vector width; must match the timbre encoder in use.
    pub d_t: usize,
    /// Temporal downsampling factor of the content encoder.
    pub down_c: usize,
    /// Temporal downsampling factor of the rhythm encoder.
    pub down_r: usize,
    /// Temporal downsampling factor of the pitch encoder.
    pub down_f: usize,
    /// Hidden width of each encoder's recurrent stack.
    pub enc_hidden: usize,
    /// Hidden width of the decoder's recurrent stack.
    pub dec_hidden: usize,
    /// Recurrent layers per stack (1 or 2).
    pub n_layers: usize,
    /// Random-resampling parameters used on content and pitch inputs during
    /// training.
    pub rr: RrConfig,
    pub optimizer: OptimConfig,
    pub batch_size: usize,
    /// Optimizer steps.
    pub steps: usize,
    /// Validation cadence in steps; the best-validation parameters win.
    pub eval_every: usize,
    pub seed: u64,
}

impl Default for SpeechFlowConfig {
    fn default() -> Self {
        SpeechFlowConfig {
            d_c: 8,
            d_r: 2,
            d_f: 32,
            d_t: 64,
            down_c: 8,
            down_r: 8,
            down_f: 8,
            enc_hidden: 32,
            dec_hidden: 64,
            n_layers: 1,
            rr: RrConfig::default(),
            optimizer: OptimConfig::default(),
            batch_size: 8,
            steps: 300,
            eval_every: 25,
            seed: 0,
        }
    }
}

impl SpeechFlowConfig {
    /// Per-frame latent width after projecting each latent stream to the mel
    /// frame rate. Timbre is per-utterance and does not count against the
    /// frame budget.
    pub fn per_frame_latent_width(&self) -> f64 {
        self.d_c as f64 / self.down_c as f64
            + self.d_r as f64 / self.down_r as f64
            + self.d_f as f64 / self.down_f as f64
    }

    pub fn validate(&self) -> Result<()> {
        let positive: [(usize, &str); 9] = [
            (self.d_c, "d_c"),
            (self.d_r, "d_r"),
            (self.d_f, "d_f"),
            (self.d_t, "d_t"),
            (self.down_c, "down_c"),
            (self.down_r, "down_r"),
            (self.down_f, "down_f"),
            (self.enc_hidden, "enc_hidden"),
            (self.dec_hidden, "dec_hidden"),
        ];
        for (v, name) in positive {
            if v == 0 {
                return Err(Error::BadConfig(format!("{name} must be positive")));
            }
        }
        if !(1..=2).contains(&self.n_layers) {
            return Err(Error::BadConfig(format!(
                "n_layers must be 1 or 2, got {}",
                self.n_layers
            )));
        }
        if self.batch_size == 0 || self.steps == 0 || self.eval_every == 0 {
            return Err(Error::BadConfig(
                "batch_size, steps and eval_every must be positive".to_string(),
            ));
        }
        if !(self.optimizer.learning_rate >= 0.0) || !(self.optimizer.clip_norm > 0.0) {
            return Err(Error::BadConfig(
                "learning_rate must be >= 0 and clip_norm > 0".to_string(),
            ));
        }
        self.rr.validate()?;
        let width = self.per_frame_latent_width();
        if !(width < 80.0) {
            return Err(Error::BadConfig(format!(
                "latent bottleneck violated: per-frame latent width {width} must stay below 80"
            )));
        }
        Ok(())
    }

    /// Stable hash of this config, stamped on model artifacts.
    pub fn content_hash(&self) -> String {
        util::hash_json(self)
    }
}
