//! Renders scored rows to disk: a summary CSV, one confusion CSV and
//! heatmap per row, and a JSON bundle carrying full provenance.
//!
//! Every file is a pure function of the rows, so re-emitting the same rows
//! produces byte-identical output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::dsp::image::colormap;
use crate::error::{Error, Result};
use crate::eval::harness::{ResultRow, SystemFailure};
use crate::eval::systems::RAW_TAG;
use crate::ingest::record::EmotionLabel;

/// Bumped whenever the JSON bundle layout changes.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Pixel width/height of one confusion-matrix cell in the heatmap.
const CELL_PX: u32 = 40;

/// The provenance bundle written next to the CSVs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportBundle {
    pub version: u32,
    pub rows: Vec<ResultRow>,
    pub failures: Vec<SystemFailure>,
}

/// `"raw"` baselines show `raw` in all three factor columns; reconstructed
/// systems show `yes`/`no` per preserved factor.
fn factor_cells(mask_tag: &str) -> Result<[String; 3]> {
    if mask_tag == RAW_TAG {
        return Ok([RAW_TAG.to_string(), RAW_TAG.to_string(), RAW_TAG.to_string()]);
    }
    let mask: crate::flow::FactorMask = mask_tag.parse()?;
    let cell = |on: bool| if on { "yes".to_string() } else { "no".to_string() };
    Ok([cell(mask.content), cell(mask.rhythm), cell(mask.pitch)])
}

fn results_csv(rows: &[ResultRow]) -> Result<String> {
    let mut out = String::from("system_no,content,rhythm,pitch,train_corpus,test_corpus,uar\n");
    for row in rows {
        let [c, r, p] = factor_cells(&row.mask_tag)?;
        writeln!(
            out,
            "{},{},{},{},{},{},{:.4}",
            row.system_no, c, r, p, row.train_corpus, row.test_corpus, row.uar
        )
        .expect("string writes cannot fail");
    }
    Ok(out)
}

fn confusion_csv(row: &ResultRow) -> String {
    let normalized = row.confusion.normalized();
    let mut out = String::from("label,A,H,S,N\n");
    for (i, label) in EmotionLabel::ALL.iter().enumerate() {
        let mut line = label.to_string();
        for j in 0..4 {
            write!(line, ",{:.6}", normalized[i][j]).expect("string writes cannot fail");
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Ground-truth rows top to bottom, predictions left to right, on a fixed
/// 0-100% color scale so heatmaps from different runs are comparable.
fn confusion_heatmap(row: &ResultRow) -> RgbImage {
    let normalized = row.confusion.normalized();
    let mut img = RgbImage::new(4 * CELL_PX, 4 * CELL_PX);
    for (i, matrix_row) in normalized.iter().enumerate() {
        for (j, &v) in matrix_row.iter().enumerate() {
            let color = Rgb(colormap(v / 100.0));
            for dy in 0..CELL_PX {
                for dx in 0..CELL_PX {
                    img.put_pixel(j as u32 * CELL_PX + dx, i as u32 * CELL_PX + dy, color);
                }
            }
        }
    }
    img
}

fn row_stem(row: &ResultRow) -> String {
    format!(
        "confusion_sys{}_{}_{}",
        row.system_no, row.train_corpus, row.test_corpus
    )
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes all report artifacts into `out_dir` and returns the paths written.
///
/// Emits `results.csv`, `report.json`, and one `confusion_*.csv` plus
/// `confusion_*.png` pair per row.
pub fn emit_report(
    rows: &[ResultRow],
    failures: &[SystemFailure],
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    if rows.is_empty() && failures.is_empty() {
        return Err(Error::Invalid("nothing to report: no rows, no failures".into()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();

    let results = out_dir.join("results.csv");
    write_text(&results, &results_csv(rows)?)?;
    written.push(results);

    let bundle = ReportBundle {
        version: REPORT_SCHEMA_VERSION,
        rows: rows.to_vec(),
        failures: failures.to_vec(),
    };
    let json_path = out_dir.join("report.json");
    let json = serde_json::to_string_pretty(&bundle).map_err(|e| Error::json(&json_path, e))?;
    write_text(&json_path, &json)?;
    written.push(json_path);

    for row in rows {
        let stem = row_stem(row);
        let csv_path = out_dir.join(format!("{stem}.csv"));
        write_text(&csv_path, &confusion_csv(row))?;
        written.push(csv_path);

        let png_path = out_dir.join(format!("{stem}.png"));
        confusion_heatmap(row)
            .save_with_format(&png_path, image::ImageFormat::Png)
            .map_err(|e| Error::Invalid(format!("png write {}: {e}", png_path.display())))?;
        written.push(png_path);
    }
    Ok(written)
}
