//! Log-mel spectrogram extraction.

use ndarray::Array2;
use rustfft::{num_complex::Complex, FftPlanner};

use crate::dsp::{FrontendConfig, Waveform};
use crate::error::{Error, Result};

/// Fixed mel-bin count; downstream model shapes assume it.
pub const N_MELS: usize = 80;

/// Log-mel frames, one row per analysis frame, `N_MELS` columns.
#[derive(Debug, Clone)]
pub struct MelSpectrogram {
    pub frames: Array2<f64>,
    pub hop_secs: f64,
    pub sample_rate: u32,
}

impl MelSpectrogram {
    pub fn new(frames: Array2<f64>, hop_secs: f64, sample_rate: u32) -> Self {
        assert_eq!(frames.ncols(), N_MELS, "mel frames must have {N_MELS} columns");
        Self {
            frames,
            hop_secs,
            sample_rate,
        }
    }

    pub fn n_frames(&self) -> usize {
        self.frames.nrows()
    }
}

/// HTK mel scale.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filterbank, rows = mel filters, cols = rfft bins.
///
/// Filter centers are spaced uniformly on the mel scale between `fmin` and
/// `fmax`; each triangle rises from the previous center to 1.0 at its own
/// center and falls to the next center (no area normalization).
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    pub weights: Array2<f64>,
    pub centers_hz: Vec<f64>,
}

impl MelFilterbank {
    pub fn new(cfg: &FrontendConfig) -> Self {
        let n_fft = cfg.window;
        let n_bins = n_fft / 2 + 1;
        let mel_lo = hz_to_mel(cfg.fmin);
        let mel_hi = hz_to_mel(cfg.fmax);
        let n = cfg.n_mels;
        let edges_hz: Vec<f64> = (0..n + 2)
            .map(|k| mel_to_hz(mel_lo + (mel_hi - mel_lo) * k as f64 / (n + 1) as f64))
            .collect();
        let bin_hz = cfg.sample_rate as f64 / n_fft as f64;

        let mut weights = Array2::zeros((n, n_bins));
        for i in 0..n {
            let (lo, center, hi) = (edges_hz[i], edges_hz[i + 1], edges_hz[i + 2]);
            for b in 0..n_bins {
                let f = b as f64 * bin_hz;
                let rising = (f - lo) / (center - lo);
                let falling = (hi - f) / (hi - center);
                let w = rising.min(falling);
                if w > 0.0 {
                    weights[[i, b]] = w;
                }
            }
        }
        Self {
            weights,
            centers_hz: edges_hz[1..=n].to_vec(),
        }
    }
}

/// Computes the log-mel spectrogram of a waveform.
///
/// Frames are Hann-windowed `window`-sample slices every `hop` samples
/// (no padding; the final partial frame is dropped). Mel energies are
/// floored at `energy_floor` before the natural log, so digital silence
/// maps every cell to `ln(energy_floor)`.
pub fn extract_mel(wav: &Waveform, cfg: &FrontendConfig) -> Result<MelSpectrogram> {
    cfg.validate()?;
    if wav.sample_rate != cfg.sample_rate {
        return Err(Error::Invalid(format!(
            "waveform is {} Hz but frontend expects {} Hz (standardize first)",
            wav.sample_rate, cfg.sample_rate
        )));
    }
    let n_frames = cfg.frame_count(wav.samples.len())?;
    let n_fft = cfg.window;
    let n_bins = n_fft / 2 + 1;

    let hann: Vec<f64> = (0..n_fft)
        .map(|i| {
            let x = std::f64::consts::PI * i as f64 / n_fft as f64;
            x.sin().powi(2)
        })
        .collect();
    let bank = MelFilterbank::new(cfg);

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n_fft);
    let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
    let mut power = vec![0.0f64; n_bins];

    let log_floor = cfg.energy_floor.ln();
    let mut frames = Array2::zeros((n_frames, cfg.n_mels));
    for t in 0..n_frames {
        let start = t * cfg.hop;
        for i in 0..n_fft {
            buf[i] = Complex::new(wav.samples[start + i] * hann[i], 0.0);
        }
        fft.process(&mut buf);
        for b in 0..n_bins {
            power[b] = buf[b].norm_sqr();
        }
        for m in 0..cfg.n_mels {
            let row = bank.weights.row(m);
            let mut e = 0.0;
            for b in 0..n_bins {
                e += row[b] * power[b];
            }
            frames[[t, m]] = if e > cfg.energy_floor { e.ln() } else { log_floor };
        }
    }
    Ok(MelSpectrogram::new(frames, cfg.hop_secs(), cfg.sample_rate))
}
