//! Pitch contour extraction (YIN) and per-speaker normalization.

use crate::dsp::{FrontendConfig, Waveform};
use crate::error::{Error, Result};

/// Frame-aligned fundamental-frequency track.
///
/// `f0[t]` is in Hz for voiced frames and exactly 0.0 for unvoiced ones
/// until normalization, after which voiced values are z-scores.
#[derive(Debug, Clone)]
pub struct PitchContour {
    pub f0: Vec<f64>,
    pub voiced: Vec<bool>,
    pub hop_secs: f64,
    pub normalized: bool,
}

impl PitchContour {
    pub fn n_frames(&self) -> usize {
        self.f0.len()
    }
}

/// Population statistics over a speaker's voiced frames.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SpeakerPitchStats {
    pub speaker_id: String,
    pub mean: f64,
    pub std: f64,
    pub n_voiced: usize,
}

/// Extracts a pitch contour with the same framing as [`super::mel::extract_mel`].
///
/// Per frame, the YIN cumulative-mean-normalized difference d'(tau) is
/// computed over an integration window of `window / 2` samples; the frame is
/// voiced iff some lag in [sr/f0_max, sr/f0_min] has d'(tau) below the
/// aperiodicity threshold. The first dip below threshold is refined to its
/// local minimum and parabolically interpolated.
pub fn extract_pitch(wav: &Waveform, cfg: &FrontendConfig) -> Result<PitchContour> {
    cfg.validate()?;
    if wav.sample_rate != cfg.sample_rate {
        return Err(Error::Invalid(format!(
            "waveform is {} Hz but frontend expects {} Hz (standardize first)",
            wav.sample_rate, cfg.sample_rate
        )));
    }
    let n_frames = cfg.frame_count(wav.samples.len())?;
    let sr = cfg.sample_rate as f64;
    let w = cfg.window / 2;
    let tau_min = (sr / cfg.f0_max).ceil().max(2.0) as usize;
    let tau_max = ((sr / cfg.f0_min).floor() as usize).min(cfg.window - w);

    let mut f0 = vec![0.0; n_frames];
    let mut voiced = vec![false; n_frames];
    let mut d = vec![0.0; tau_max + 1];
    let mut dp = vec![1.0; tau_max + 1];

    for t in 0..n_frames {
        let frame = &wav.samples[t * cfg.hop..t * cfg.hop + cfg.window];
        let mut cum = 0.0;
        for tau in 1..=tau_max {
            let mut acc = 0.0;
            for i in 0..w {
                let diff = frame[i] - frame[i + tau];
                acc += diff * diff;
            }
            d[tau] = acc;
            cum += acc;
            dp[tau] = if cum > 1e-300 { acc * tau as f64 / cum } else { 1.0 };
        }

        let mut best = None;
        for tau in tau_min..=tau_max {
            if dp[tau] < cfg.yin_threshold {
                let mut tau = tau;
                while tau + 1 <= tau_max && dp[tau + 1] < dp[tau] {
                    tau += 1;
                }
                best = Some(tau);
                break;
            }
        }

        if let Some(tau) = best {
            let period = if tau > tau_min && tau < tau_max {
                let (dm, d0, dplus) = (dp[tau - 1], dp[tau], dp[tau + 1]);
                let denom = dm - 2.0 * d0 + dplus;
                let delta = if denom.abs() > 1e-300 {
                    (0.5 * (dm - dplus) / denom).clamp(-1.0, 1.0)
                } else {
                    0.0
                };
                tau as f64 + delta
            } else {
                tau as f64
            };
            f0[t] = (sr / period).clamp(cfg.f0_min, cfg.f0_max);
            voiced[t] = true;
        }
    }

    Ok(PitchContour {
        f0,
        voiced,
        hop_secs: cfg.hop_secs(),
        normalized: false,
    })
}

/// Pools pitch statistics over every voiced frame of a speaker's contours.
///
/// Uses the population standard deviation. Degenerate cases (no voiced
/// frames, or all voiced values equal) pin `std` to 1 so normalization is
/// always well-defined; with no voiced frames the mean is 0.
pub fn compute_speaker_pitch_stats<'a, I>(contours: I, speaker_id: &str) -> SpeakerPitchStats
where
    I: IntoIterator<Item = &'a PitchContour>,
{
    let mut values = Vec::new();
    for c in contours {
        for (i, &v) in c.f0.iter().enumerate() {
            if c.voiced[i] {
                values.push(v);
            }
        }
    }
    if values.is_empty() {
        return SpeakerPitchStats {
            speaker_id: speaker_id.to_string(),
            mean: 0.0,
            std: 1.0,
            n_voiced: 0,
        };
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    SpeakerPitchStats {
        speaker_id: speaker_id.to_string(),
        mean,
        std: if std > 1e-12 { std } else { 1.0 },
        n_voiced: values.len(),
    }
}

/// Z-normalizes voiced frames with the given speaker statistics.
///
/// Unvoiced frames stay exactly 0. Normalizing an already-normalized
/// contour is an error so stats can never be applied twice.
pub fn normalize_pitch(contour: &PitchContour, stats: &SpeakerPitchStats) -> Result<PitchContour> {
    if contour.normalized {
        return Err(Error::AlreadyNormalized);
    }
    let mut out = contour.clone();
    for (i, v) in out.f0.iter_mut().enumerate() {
        if out.voiced[i] {
            *v = (*v - stats.mean) / stats.std;
        }
    }
    out.normalized = true;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn contour(f0: Vec<f64>, voiced: Vec<bool>) -> PitchContour {
        PitchContour {
            f0,
            voiced,
            hop_secs: 0.016,
            normalized: false,
        }
    }

    #[test]
    fn impulse_train_at_200hz_is_tracked() {
        let sr = 16_000u32;
        let mut samples = vec![0.0; sr as usize];
        let mut i = 0;
        while i < samples.len() {
            samples[i] = 0.8;
            i += 80; // 16000 / 200
        }
        let wav = Waveform {
            samples,
            sample_rate: sr,
        };
        let cfg = FrontendConfig::default();
        let p = extract_pitch(&wav, &cfg).unwrap();
        let n_voiced = p.voiced.iter().filter(|&&v| v).count();
        assert!(
            n_voiced as f64 >= 0.9 * p.n_frames() as f64,
            "only {n_voiced}/{} frames voiced",
            p.n_frames()
        );
        let mut voiced_f0: Vec<f64> = p
            .f0
            .iter()
            .zip(&p.voiced)
            .filter(|(_, &v)| v)
            .map(|(&f, _)| f)
            .collect();
        voiced_f0.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = voiced_f0[voiced_f0.len() / 2];
        assert!(
            (196.0..=204.0).contains(&median),
            "median f0 {median} outside [196, 204]"
        );
    }

    #[test]
    fn white_noise_is_mostly_unvoiced() {
        let cfg = FrontendConfig::default();
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let wav = Waveform {
                samples: (0..16_000).map(|_| rng.gen_range(-0.9..0.9)).collect(),
                sample_rate: 16_000,
            };
            let p = extract_pitch(&wav, &cfg).unwrap();
            let frac = p.voiced.iter().filter(|&&v| v).count() as f64 / p.n_frames() as f64;
            assert!(frac < 0.2, "seed {seed}: voiced fraction {frac}");
        }
    }

    #[test]
    fn silence_is_fully_unvoiced_with_zero_f0() {
        let cfg = FrontendConfig::default();
        let wav = Waveform {
            samples: vec![0.0; 16_000],
            sample_rate: 16_000,
        };
        let p = extract_pitch(&wav, &cfg).unwrap();
        assert_eq!(p.n_frames(), 59);
        assert!(p.voiced.iter().all(|&v| !v));
        assert!(p.f0.iter().all(|&f| f == 0.0));
    }

    #[test]
    fn sine_440_is_tracked_within_one_percent() {
        let cfg = FrontendConfig::default();
        let samples: Vec<f64> = (0..16_000)
            .map(|i| (2.0 * std::f64::consts::PI * 440.0 * i as f64 / 16_000.0).sin() * 0.5)
            .collect();
        let wav = Waveform {
            samples,
            sample_rate: 16_000,
        };
        let p = extract_pitch(&wav, &cfg).unwrap();
        for t in 0..p.n_frames() {
            assert!(p.voiced[t], "frame {t} unvoiced");
            assert!(
                (p.f0[t] - 440.0).abs() < 4.4,
                "frame {t}: f0 {}",
                p.f0[t]
            );
        }
    }

    #[test]
    fn normalization_matches_population_zscore() {
        let c = contour(
            vec![100.0, 0.0, 110.0, 120.0],
            vec![true, false, true, true],
        );
        let stats = compute_speaker_pitch_stats([&c], "spk");
        assert_eq!(stats.n_voiced, 3);
        assert_eq!(stats.speaker_id, "spk");
        assert!((stats.mean - 110.0).abs() < 1e-12);
        // Population std of [100, 110, 120] = sqrt(200/3) = 8.1650.
        let expected_std = (200.0f64 / 3.0).sqrt();
        assert!((stats.std - expected_std).abs() < 1e-12);
        assert!((stats.std - 8.165).abs() < 1e-3);

        let n = normalize_pitch(&c, &stats).unwrap();
        assert!((n.f0[0] + 1.2247).abs() < 1e-4);
        assert_eq!(n.f0[1], 0.0);
        assert!(!n.voiced[1]);
        assert!(n.f0[2].abs() < 1e-6);
        assert!((n.f0[3] - 1.2247).abs() < 1e-4);
        assert!(n.normalized);
    }

    #[test]
    fn stats_are_invariant_under_list_duplication() {
        let c = contour(vec![100.0, 140.0, 180.0], vec![true, true, true]);
        let once = compute_speaker_pitch_stats([&c], "spk");
        let twice = compute_speaker_pitch_stats([&c, &c], "spk");
        assert_eq!(once.mean, twice.mean);
        assert_eq!(once.std, twice.std);
        assert_eq!(twice.n_voiced, 2 * once.n_voiced);
    }

    #[test]
    fn double_normalization_is_rejected() {
        let c = contour(vec![100.0], vec![true]);
        let stats = compute_speaker_pitch_stats([&c], "spk");
        let n = normalize_pitch(&c, &stats).unwrap();
        assert!(matches!(
            normalize_pitch(&n, &stats),
            Err(Error::AlreadyNormalized)
        ));
    }

    #[test]
    fn degenerate_stats_pin_std_to_one() {
        let silent = contour(vec![0.0, 0.0], vec![false, false]);
        let s = compute_speaker_pitch_stats([&silent], "spk");
        assert_eq!((s.mean, s.std, s.n_voiced), (0.0, 1.0, 0));

        let flat = contour(vec![150.0, 150.0], vec![true, true]);
        let s = compute_speaker_pitch_stats([&flat], "spk");
        assert_eq!(s.std, 1.0);
        assert_eq!(s.mean, 150.0);
        // Constant voiced pitch therefore normalizes to exactly zero.
        let n = normalize_pitch(&flat, &s).unwrap();
        assert!(n.f0.iter().all(|&v| v == 0.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn voiced_f0_stays_in_search_range(seed in any::<u64>(), len in 2048usize..6000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let freq = rng.gen_range(80.0..400.0);
            let cfg = FrontendConfig::default();
            let samples: Vec<f64> = (0..len)
                .map(|i| {
                    let t = i as f64 / 16_000.0;
                    (2.0 * std::f64::consts::PI * freq * t).sin() * 0.4
                        + rng.gen_range(-0.05..0.05)
                })
                .collect();
            let wav = Waveform { samples, sample_rate: 16_000 };
            let p = extract_pitch(&wav, &cfg).unwrap();
            prop_assert_eq!(p.n_frames(), cfg.frame_count(len).unwrap());
            for t in 0..p.n_frames() {
                if p.voiced[t] {
                    prop_assert!(p.f0[t] >= cfg.f0_min && p.f0[t] <= cfg.f0_max);
                } else {
                    prop_assert_eq!(p.f0[t], 0.0);
                }
            }
        }
    }
}
