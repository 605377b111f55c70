use std::fs;
use std::path::Path;

use serde::Serialize;

use super::metrics::MetricReport;
use super::run::SummaryRow;
use super::sequence::{fmt_num, parse_groundtruth};
use crate::error::{Error, Result};
use crate::imaging::BoundingBox;

/// First line of every results file.
pub const RESULTS_HEADER: &str = "# format: 1-based x,y,w,h";
const FORMAT_PREFIX: &str = "# format:";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |e| Error::Format { path: path.to_path_buf(), msg: e.to_string() }
}

/// Writes 0-based boxes as a 1-based results file.
pub fn write_results(path: &Path, boxes: &[BoundingBox]) -> Result<()> {
    let mut text = format!("{RESULTS_HEADER}\n");
    for b in boxes {
        text.push_str(&format!("{},{},{},{}\n", fmt_num(b.x + 1.0), fmt_num(b.y + 1.0), fmt_num(b.w), fmt_num(b.h)));
    }
    fs::write(path, text).map_err(io_err(path))
}

/// Reads a results file or a plain groundtruth file into 0-based boxes.
/// A format header other than [`RESULTS_HEADER`] is rejected.
pub fn read_boxes(path: &Path) -> Result<Vec<BoundingBox>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    if let Some(line) = text.lines().map(str::trim).find(|l| l.starts_with(FORMAT_PREFIX)) {
        if line != RESULTS_HEADER {
            return Err(Error::Format { path: path.to_path_buf(), msg: format!("unsupported header `{line}`") });
        }
    }
    parse_groundtruth(&text, path)
}

#[derive(Serialize)]
struct CurveRow<'a> {
    curve: &'a str,
    threshold: f64,
    value: f64,
}

/// Writes the precision and success curves as `curve,threshold,value` rows.
pub fn write_curves(path: &Path, report: &MetricReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let rows = report.precision.iter().map(|&(t, v)| ("precision", t, v)).chain(report.success.iter().map(|&(t, v)| ("success", t, v)));
    for (curve, threshold, value) in rows {
        w.serialize(CurveRow { curve, threshold, value }).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Writes one `sequence,dp,auc,fps` row per entry.
pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}
