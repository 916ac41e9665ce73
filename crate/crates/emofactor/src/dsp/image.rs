//! PNG rendering of mel spectrograms and other matrices on a fixed color
//! scale, so images from different runs are directly comparable.

use std::path::Path;

use image::{ImageError, Rgb, RgbImage};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dsp::mel::MelSpectrogram;
use crate::error::{Error, Result};

/// Name recorded in image sidecars; bump when the ramp changes.
pub const COLORMAP_NAME: &str = "ember-v1";

/// Dark-to-bright perceptual ramp (magma-like anchor points).
const RAMP: [[u8; 3]; 8] = [
    [0, 0, 4],
    [40, 11, 84],
    [101, 21, 110],
    [159, 42, 99],
    [212, 72, 66],
    [245, 125, 21],
    [250, 193, 39],
    [252, 255, 164],
];

/// Maps v in [0, 1] (clamped) onto the ramp.
pub fn colormap(v: f64) -> [u8; 3] {
    let v = v.clamp(0.0, 1.0);
    let x = v * (RAMP.len() - 1) as f64;
    let i = (x.floor() as usize).min(RAMP.len() - 2);
    let frac = x - i as f64;
    let mut out = [0u8; 3];
    for c in 0..3 {
        let lo = RAMP[i][c] as f64;
        let hi = RAMP[i + 1][c] as f64;
        out[c] = (lo + (hi - lo) * frac).round() as u8;
    }
    out
}

/// Scale and geometry actually used for a rendered image.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImageMeta {
    pub width: u32,
    pub height: u32,
    pub vmin: f64,
    pub vmax: f64,
    pub colormap: String,
}

/// Renders a matrix with rows as the vertical axis; row 0 is drawn at the
/// bottom (so mel bin 0 = lowest frequency sits at the bottom of the image)
/// and columns advance left to right.
pub fn render_matrix(m: &Array2<f64>, vmin: f64, vmax: f64) -> RgbImage {
    let (rows, cols) = m.dim();
    let span = if vmax > vmin { vmax - vmin } else { 1.0 };
    let mut img = RgbImage::new(cols.max(1) as u32, rows.max(1) as u32);
    for y in 0..rows {
        for x in 0..cols {
            let v = (m[[y, x]] - vmin) / span;
            img.put_pixel(x as u32, (rows - 1 - y) as u32, Rgb(colormap(v)));
        }
    }
    img
}

fn save_png(img: &RgbImage, path: &Path) -> Result<()> {
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| match e {
            ImageError::IoError(io) => Error::io(path, io),
            other => Error::Invalid(format!("png write {}: {other}", path.display())),
        })
}

/// Writes a mel spectrogram as a PNG (time on x, frequency on y, low bins at
/// the bottom) plus a `.json` sidecar recording the color scale.
///
/// `scale` defaults to `[ln(energy_floor), 5.0]` with the standard 1e-10
/// floor, which keeps images from different utterances and runs comparable.
pub fn render_spectrogram_png(
    mel: &MelSpectrogram,
    path: &Path,
    scale: Option<(f64, f64)>,
) -> Result<ImageMeta> {
    let (vmin, vmax) = scale.unwrap_or((1e-10f64.ln(), 5.0));
    // Transpose: mel rows are time, image rows are frequency bins.
    let img = render_matrix(&mel.frames.t().to_owned(), vmin, vmax);
    save_png(&img, path)?;
    let meta = ImageMeta {
        width: img.width(),
        height: img.height(),
        vmin,
        vmax,
        colormap: COLORMAP_NAME.to_string(),
    };
    let sidecar = path.with_extension("png.json");
    let json = serde_json::to_string_pretty(&meta).expect("meta serializes");
    std::fs::write(&sidecar, json).map_err(|e| Error::io(&sidecar, e))?;
    Ok(meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn toy_mel(frames: Array2<f64>) -> MelSpectrogram {
        MelSpectrogram::new(frames, 0.016, 16_000)
    }

    #[test]
    fn colormap_hits_ramp_endpoints_and_clamps() {
        assert_eq!(colormap(0.0), RAMP[0]);
        assert_eq!(colormap(1.0), RAMP[7]);
        assert_eq!(colormap(-3.0), RAMP[0]);
        assert_eq!(colormap(7.0), RAMP[7]);
    }

    #[test]
    fn png_has_time_by_mel_geometry() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("spec.png");
        let mel = toy_mel(Array2::zeros((59, 80)));
        let meta = render_spectrogram_png(&mel, &path, None).unwrap();
        assert_eq!((meta.width, meta.height), (59, 80));
        let img = image::open(&path).unwrap();
        assert_eq!((img.width(), img.height()), (59, 80));
        assert!(path.with_extension("png.json").exists());
    }

    #[test]
    fn single_cell_difference_changes_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let a_path = dir.path().join("a.png");
        let b_path = dir.path().join("b.png");
        let a = Array2::zeros((10, 80));
        let mut b = a.clone();
        b[[3, 40]] = 4.0;
        render_spectrogram_png(&toy_mel(a), &a_path, None).unwrap();
        render_spectrogram_png(&toy_mel(b), &b_path, None).unwrap();
        let bytes_a = std::fs::read(&a_path).unwrap();
        let bytes_b = std::fs::read(&b_path).unwrap();
        assert_ne!(bytes_a, bytes_b);
    }

    #[test]
    fn identical_input_gives_identical_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let a_path = dir.path().join("a.png");
        let b_path = dir.path().join("b.png");
        let m = Array2::from_shape_fn((12, 80), |(t, f)| ((t * 80 + f) % 17) as f64 / 4.0);
        render_spectrogram_png(&toy_mel(m.clone()), &a_path, None).unwrap();
        render_spectrogram_png(&toy_mel(m), &b_path, None).unwrap();
        assert_eq!(
            std::fs::read(&a_path).unwrap(),
            std::fs::read(&b_path).unwrap()
        );
    }

    #[test]
    fn unwritable_path_is_an_error() {
        let mel = toy_mel(Array2::zeros((5, 80)));
        let path = Path::new("/nonexistent-dir/spec.png");
        assert!(render_spectrogram_png(&mel, path, None).is_err());
    }
}
