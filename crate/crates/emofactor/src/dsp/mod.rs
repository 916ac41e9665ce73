//! Signal-processing frontend: mel spectrograms, pitch contours, random
//! resampling, and spectrogram image rendering.

pub mod features;
pub mod image;
pub mod mel;
pub mod pitch;
pub mod resample;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mono PCM audio at a known sample rate, samples in [-1, 1].
#[derive(Debug, Clone)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Parameters for mel and pitch extraction.
///
/// Defaults: 16 kHz audio, 1024-sample Hann window, 256-sample hop,
/// 80 mel bins spanning 90-7600 Hz, energies floored at 1e-10 before the
/// natural log; pitch search range 50-600 Hz with aperiodicity threshold 0.3.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FrontendConfig {
    pub sample_rate: u32,
    pub window: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub fmin: f64,
    pub fmax: f64,
    pub energy_floor: f64,
    pub f0_min: f64,
    pub f0_max: f64,
    pub yin_threshold: f64,
}

impl Default for FrontendConfig {
    fn default() -> Self {
        Self {
            sample_rate: 16_000,
            window: 1024,
            hop: 256,
            n_mels: 80,
            fmin: 90.0,
            fmax: 7600.0,
            energy_floor: 1e-10,
            f0_min: 50.0,
            f0_max: 600.0,
            yin_threshold: 0.3,
        }
    }
}

impl FrontendConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_mels != mel::N_MELS {
            return Err(Error::BadConfig(format!(
                "n_mels must be {}, got {}",
                mel::N_MELS,
                self.n_mels
            )));
        }
        if self.window == 0 || self.hop == 0 || self.hop > self.window {
            return Err(Error::BadConfig(format!(
                "need 0 < hop <= window, got window={} hop={}",
                self.window, self.hop
            )));
        }
        if !(0.0 < self.fmin && self.fmin < self.fmax) {
            return Err(Error::BadConfig(format!(
                "need 0 < fmin < fmax, got fmin={} fmax={}",
                self.fmin, self.fmax
            )));
        }
        if self.fmax > self.sample_rate as f64 / 2.0 {
            return Err(Error::BadConfig(format!(
                "fmax {} exceeds Nyquist {}",
                self.fmax,
                self.sample_rate as f64 / 2.0
            )));
        }
        if !(0.0 < self.f0_min && self.f0_min < self.f0_max) {
            return Err(Error::BadConfig(format!(
                "need 0 < f0_min < f0_max, got f0_min={} f0_max={}",
                self.f0_min, self.f0_max
            )));
        }
        if self.energy_floor <= 0.0 {
            return Err(Error::BadConfig("energy_floor must be positive".into()));
        }
        Ok(())
    }

    /// Number of analysis frames for a waveform of `len` samples.
    pub fn frame_count(&self, len: usize) -> Result<usize> {
        if len < self.window {
            return Err(Error::WaveformTooShort {
                got: len,
                need: self.window,
            });
        }
        Ok((len - self.window) / self.hop + 1)
    }

    /// Hop duration in seconds.
    pub fn hop_secs(&self) -> f64 {
        self.hop as f64 / self.sample_rate as f64
    }

    /// Short content hash used to tie cached features to the settings that
    /// produced them.
    pub fn content_hash(&self) -> String {
        crate::util::hash_json(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        FrontendConfig::default().validate().unwrap();
    }

    #[test]
    fn frame_count_matches_closed_form() {
        let cfg = FrontendConfig::default();
        // 1.0 s at 16 kHz: (16000 - 1024) / 256 + 1 = 59 frames.
        assert_eq!(cfg.frame_count(16_000).unwrap(), 59);
        assert_eq!(cfg.frame_count(1024).unwrap(), 1);
        assert!(matches!(
            cfg.frame_count(1023),
            Err(Error::WaveformTooShort { got: 1023, need: 1024 })
        ));
    }

    #[test]
    fn validate_rejects_bad_ranges() {
        let mut cfg = FrontendConfig::default();
        cfg.fmax = 9000.0;
        assert!(cfg.validate().is_err());

        let mut cfg = FrontendConfig::default();
        cfg.n_mels = 40;
        assert!(cfg.validate().is_err());

        let mut cfg = FrontendConfig::default();
        cfg.hop = 2048;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_hash_tracks_content() {
        let a = FrontendConfig::default();
        let mut b = FrontendConfig::default();
        assert_eq!(a.content_hash(), b.content_hash());
        b.fmin = 100.0;
        assert_ne!(a.content_hash(), b.content_hash());
    }
}
