use crate::error::{invalid, Result};
use crate::imaging::BoundingBox;

/// Center-distance threshold of the DP score, in pixels.
pub const DP_THRESHOLD: f64 = 20.0;
/// Largest precision-curve threshold; the curve samples every pixel.
pub const PRECISION_THRESHOLDS: usize = 50;
/// Spacing of the overlap thresholds of the success curve.
pub const SUCCESS_STEP: f64 = 0.05;

/// Precision and success curves with their summary scores.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    /// Fraction of frames with center error within 20 px.
    pub dp: f64,
    /// Mean of the success curve.
    pub auc: f64,
    /// `(threshold px, fraction)` for thresholds 0..=50.
    pub precision: Vec<(f64, f64)>,
    /// `(overlap threshold, fraction)` for thresholds 0, 0.05, .., 1.
    pub success: Vec<(f64, f64)>,
    /// Frames with usable groundtruth.
    pub frames: usize,
}

fn usable(b: &BoundingBox) -> bool {
    b.is_valid()
}

fn center_distance(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let (p, q) = (a.center(), b.center());
    let d = ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt();
    if d.is_finite() {
        d
    } else {
        f64::INFINITY
    }
}

fn overlap(a: &BoundingBox, b: &BoundingBox) -> f64 {
    if a.is_valid() {
        a.iou(b)
    } else {
        0.0
    }
}

/// Scores predictions against groundtruth. Frames whose groundtruth is
/// absent or degenerate are skipped. A frame counts toward the success
/// curve at overlap threshold `τ` when its IoU is positive and at least
/// `τ`.
pub fn evaluate(predictions: &[BoundingBox], groundtruth: &[BoundingBox]) -> Result<MetricReport> {
    if predictions.len() != groundtruth.len() {
        return Err(invalid(format!("{} predictions for {} groundtruth boxes", predictions.len(), groundtruth.len())));
    }
    let pairs: Vec<(f64, f64)> =
        predictions.iter().zip(groundtruth).filter(|(_, g)| usable(g)).map(|(p, g)| (center_distance(p, g), overlap(p, g))).collect();
    if pairs.is_empty() {
        return Err(invalid("no frame has usable groundtruth"));
    }
    let n = pairs.len() as f64;
    let precision: Vec<(f64, f64)> = (0..=PRECISION_THRESHOLDS)
        .map(|t| {
            let t = t as f64;
            (t, pairs.iter().filter(|p| p.0 <= t).count() as f64 / n)
        })
        .collect();
    let steps = (1.0 / SUCCESS_STEP).round() as usize;
    let success: Vec<(f64, f64)> = (0..=steps)
        .map(|i| {
            let tau = i as f64 / steps as f64;
            (tau, pairs.iter().filter(|p| p.1 > 0.0 && p.1 >= tau).count() as f64 / n)
        })
        .collect();
    let dp = pairs.iter().filter(|p| p.0 <= DP_THRESHOLD).count() as f64 / n;
    let auc = success.iter().map(|s| s.1).sum::<f64>() / success.len() as f64;
    Ok(MetricReport { dp, auc, precision, success, frames: pairs.len() })
}
