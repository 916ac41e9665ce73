//! WAV reading/writing and audio standardization to mono 16 kHz.

use std::path::Path;

use crate::dsp::Waveform;
use crate::error::{Error, Result};

pub const TARGET_SAMPLE_RATE: u32 = 16_000;

/// Decoded audio before standardization; one vector per channel.
#[derive(Debug, Clone)]
pub struct MultichannelAudio {
    pub channels: Vec<Vec<f64>>,
    pub sample_rate: u32,
}

/// Reads any PCM or float WAV into f64 channels scaled to [-1, 1].
pub fn read_wav(path: impl AsRef<Path>) -> Result<MultichannelAudio> {
    let path = path.as_ref();
    let mut reader = hound::WavReader::open(path).map_err(|e| Error::Wav {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    let spec = reader.spec();
    let n_channels = spec.channels as usize;
    let mut interleaved: Vec<f64> = Vec::new();
    match spec.sample_format {
        hound::SampleFormat::Int => {
            let scale = (1i64 << (spec.bits_per_sample - 1)) as f64;
            for s in reader.samples::<i32>() {
                let s = s.map_err(|e| Error::Wav {
                    path: path.display().to_string(),
                    reason: e.to_string(),
                })?;
                interleaved.push(s as f64 / scale);
            }
        }
        hound::SampleFormat::Float => {
            for s in reader.samples::<f32>() {
                let s = s.map_err(|e| Error::Wav {
                    path: path.display().to_string(),
                    reason: e.to_string(),
                })?;
                interleaved.push(s as f64);
            }
        }
    }
    let frames = interleaved.len() / n_channels;
    let mut channels = vec![Vec::with_capacity(frames); n_channels];
    for (i, s) in interleaved.into_iter().enumerate() {
        channels[i % n_channels].push(s);
    }
    Ok(MultichannelAudio {
        channels,
        sample_rate: spec.sample_rate,
    })
}

/// Writes a waveform as mono 16-bit PCM at its own sample rate.
pub fn write_wav(wav: &Waveform, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: wav.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| Error::Wav {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    for &s in &wav.samples {
        let q = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        writer.write_sample(q).map_err(|e| Error::Wav {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
    }
    writer.finalize().map_err(|e| Error::Wav {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

/// Downmixes to mono, resamples to 16 kHz (linear interpolation), and
/// rescales so every sample fits the 16-bit range.
///
/// A mono 16 kHz input within range passes through untouched. Output length
/// is `round(len * 16000 / sr)`, preserving duration to within one output
/// sample period.
pub fn standardize_audio(raw: &MultichannelAudio) -> Result<Waveform> {
    if !(8_000..=48_000).contains(&raw.sample_rate) {
        return Err(Error::UnsupportedSampleRate(raw.sample_rate));
    }
    if raw.channels.is_empty() || raw.channels[0].is_empty() {
        return Err(Error::Invalid("audio has no samples".into()));
    }
    let len = raw.channels[0].len();
    if raw.channels.iter().any(|c| c.len() != len) {
        return Err(Error::Invalid("channels have unequal lengths".into()));
    }

    let n_ch = raw.channels.len() as f64;
    let mono: Vec<f64> = (0..len)
        .map(|i| raw.channels.iter().map(|c| c[i]).sum::<f64>() / n_ch)
        .collect();

    let mut samples = if raw.sample_rate == TARGET_SAMPLE_RATE {
        mono
    } else {
        let ratio = raw.sample_rate as f64 / TARGET_SAMPLE_RATE as f64;
        let out_len = ((len as f64 / ratio).round() as usize).max(1);
        (0..out_len)
            .map(|i| {
                let pos = i as f64 * ratio;
                let i0 = pos.floor() as usize;
                if i0 + 1 >= len {
                    mono[len - 1]
                } else {
                    let frac = pos - i0 as f64;
                    mono[i0] * (1.0 - frac) + mono[i0 + 1] * frac
                }
            })
            .collect()
    };

    let peak = samples.iter().fold(0.0f64, |m, &s| m.max(s.abs()));
    if peak > 1.0 {
        for s in &mut samples {
            *s /= peak;
        }
    }
    Ok(Waveform {
        samples,
        sample_rate: TARGET_SAMPLE_RATE,
    })
}

/// Reads a WAV file and standardizes it in one step.
pub fn load_standardized(path: impl AsRef<Path>) -> Result<Waveform> {
    standardize_audio(&read_wav(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(sr: u32, secs: f64, freq: f64) -> Vec<f64> {
        let n = (sr as f64 * secs) as usize;
        (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / sr as f64).sin() * 0.5)
            .collect()
    }

    #[test]
    fn mono_16k_in_range_is_untouched() {
        let samples = tone(16_000, 0.5, 220.0);
        let raw = MultichannelAudio {
            channels: vec![samples.clone()],
            sample_rate: 16_000,
        };
        let out = standardize_audio(&raw).unwrap();
        assert_eq!(out.sample_rate, 16_000);
        assert_eq!(out.samples, samples);
    }

    #[test]
    fn resampling_32k_preserves_duration() {
        let raw = MultichannelAudio {
            channels: vec![tone(32_000, 2.0, 220.0)],
            sample_rate: 32_000,
        };
        let out = standardize_audio(&raw).unwrap();
        let diff = out.samples.len() as i64 - 32_000;
        assert!(diff.abs() <= 1, "got {} samples", out.samples.len());
    }

    #[test]
    fn identical_stereo_channels_pass_through_downmix() {
        let samples = tone(16_000, 0.25, 330.0);
        let raw = MultichannelAudio {
            channels: vec![samples.clone(), samples.clone()],
            sample_rate: 16_000,
        };
        let out = standardize_audio(&raw).unwrap();
        for (a, b) in out.samples.iter().zip(&samples) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn stereo_downmix_is_channel_mean() {
        let raw = MultichannelAudio {
            channels: vec![vec![0.5; 16_000], vec![-0.1; 16_000]],
            sample_rate: 16_000,
        };
        let out = standardize_audio(&raw).unwrap();
        assert!(out.samples.iter().all(|&s| (s - 0.2).abs() < 1e-12));
    }

    #[test]
    fn out_of_range_rate_is_rejected() {
        let raw = MultichannelAudio {
            channels: vec![vec![0.0; 100]],
            sample_rate: 4_000,
        };
        assert!(matches!(
            standardize_audio(&raw),
            Err(Error::UnsupportedSampleRate(4_000))
        ));
    }

    #[test]
    fn loud_audio_is_rescaled_into_range() {
        let raw = MultichannelAudio {
            channels: vec![vec![2.0, -4.0, 1.0]],
            sample_rate: 16_000,
        };
        let out = standardize_audio(&raw).unwrap();
        let peak = out.samples.iter().fold(0.0f64, |m, &s| m.max(s.abs()));
        assert!((peak - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wav_round_trip_is_within_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.wav");
        let wav = Waveform {
            samples: tone(16_000, 0.1, 440.0),
            sample_rate: 16_000,
        };
        write_wav(&wav, &path).unwrap();
        let back = load_standardized(&path).unwrap();
        assert_eq!(back.samples.len(), wav.samples.len());
        for (a, b) in back.samples.iter().zip(&wav.samples) {
            assert!((a - b).abs() < 1.0 / 32000.0);
        }
    }

    #[test]
    fn wav_write_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.wav");
        let b = dir.path().join("b.wav");
        let wav = Waveform {
            samples: tone(16_000, 0.05, 200.0),
            sample_rate: 16_000,
        };
        write_wav(&wav, &a).unwrap();
        write_wav(&wav, &b).unwrap();
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }
}
