//! Classifier input construction: static log-mel plus its first and second
//! temporal differences, stacked as three channels.

use ndarray::Array3;

use crate::dsp::mel::MelSpectrogram;
use crate::error::{Error, Result};

pub use crate::dsp::mel::N_MELS;

/// Three-channel classifier input of shape `(3, T, 80)`.
///
/// Channel 0 is the raw log-mel. Channel 1 is the forward temporal
/// difference of channel 0 with the last frame repeated (so it keeps `T`
/// rows). Channel 2 is the forward difference of channel 1, built the same
/// way.
#[derive(Debug, Clone)]
pub struct AcrnnInput {
    pub channels: Array3<f64>,
}

fn forward_diff(x: &ndarray::Array2<f64>) -> ndarray::Array2<f64> {
    let (t_len, f_len) = x.dim();
    ndarray::Array2::from_shape_fn((t_len, f_len), |(t, f)| {
        if t + 1 < t_len {
            x[[t + 1, f]] - x[[t, f]]
        } else {
            // repeat the last difference row so the channel keeps T frames
            x[[t, f]] - x[[t - 1, f]]
        }
    })
}

/// Builds the three-channel input for one utterance.
///
/// Fails with [`Error::Invalid`] when the mel has fewer than 3 frames, since
/// a second difference needs at least that much context.
pub fn make_acrnn_input(mel: &MelSpectrogram) -> Result<AcrnnInput> {
    let (t_len, f_len) = mel.frames.dim();
    if t_len < 3 {
        return Err(Error::Invalid(format!(
            "classifier input needs at least 3 frames, got {t_len}"
        )));
    }
    debug_assert_eq!(f_len, N_MELS, "enforced by MelSpectrogram::new");
    let d1 = forward_diff(&mel.frames);
    let d2 = forward_diff(&d1);
    let mut channels = Array3::zeros((3, t_len, f_len));
    channels.index_axis_mut(ndarray::Axis(0), 0).assign(&mel.frames);
    channels.index_axis_mut(ndarray::Axis(0), 1).assign(&d1);
    channels.index_axis_mut(ndarray::Axis(0), 2).assign(&d2);
    Ok(AcrnnInput { channels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn mel_from(frames: Array2<f64>) -> MelSpectrogram {
        MelSpectrogram::new(frames, 0.01, 16_000)
    }

    #[test]
    fn constant_mel_has_zero_difference_channels() {
        let mel = mel_from(Array2::from_elem((6, N_MELS), -3.25));
        let x = make_acrnn_input(&mel).unwrap();
        assert_eq!(x.channels.dim(), (3, 6, N_MELS));
        for t in 0..6 {
            for f in 0..N_MELS {
                assert_eq!(x.channels[[0, t, f]], -3.25);
                assert_eq!(x.channels[[1, t, f]], 0.0);
                assert_eq!(x.channels[[2, t, f]], 0.0);
            }
        }
    }

    #[test]
    fn linear_ramp_gives_constant_first_and_zero_second_difference() {
        let frames = Array2::from_shape_fn((8, N_MELS), |(t, f)| 0.5 * t as f64 + f as f64);
        let x = make_acrnn_input(&mel_from(frames)).unwrap();
        for t in 0..8 {
            for f in 0..N_MELS {
                assert!((x.channels[[1, t, f]] - 0.5).abs() < 1e-12);
                assert!(x.channels[[2, t, f]].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn output_shape_is_three_by_t_by_80() {
        for t_len in [3usize, 7, 40] {
            let frames = Array2::from_shape_fn((t_len, N_MELS), |(t, f)| {
                ((t * 31 + f * 7) % 13) as f64 * 0.1 - 2.0
            });
            let x = make_acrnn_input(&mel_from(frames)).unwrap();
            assert_eq!(x.channels.dim(), (3, t_len, N_MELS));
        }
    }

    #[test]
    fn inputs_shorter_than_three_frames_are_rejected() {
        for t_len in [1usize, 2] {
            let short = mel_from(Array2::zeros((t_len, N_MELS)));
            assert!(matches!(make_acrnn_input(&short), Err(Error::Invalid(_))));
        }
    }

    #[test]
    fn last_difference_row_repeats_previous_one() {
        let frames = Array2::from_shape_fn((5, N_MELS), |(t, f)| (t * t) as f64 + 0.01 * f as f64);
        let x = make_acrnn_input(&mel_from(frames)).unwrap();
        for f in 0..N_MELS {
            assert_eq!(x.channels[[1, 4, f]], x.channels[[1, 3, f]]);
        }
    }
}
