//! Lost-object recovery: trusted-template bookkeeping, the two appearance
//! similarities, the baseline-versus-motion decision rule and the activation
//! test.

use crate::dcf::Filter;
use crate::error::{invalid, Error, Result};
use crate::features::{color_histogram, extract_features, quantize_colors, ColorHistogram, FeatureMap, Palette};
use crate::imaging::{crop_patch, BoundingBox, Frame};

/// Side of the resampled object patch used for appearance comparison.
pub const APPEARANCE_SIDE: usize = 32;

/// Features and color histogram of one object box.
#[derive(Debug, Clone, PartialEq)]
pub struct Appearance {
    pub features: FeatureMap,
    pub histogram: ColorHistogram,
}

/// Describes `bbox` of `frame` at a fixed resolution.
pub fn appearance(frame: &Frame, bbox: &BoundingBox, palette: &Palette, cell_size: usize) -> Result<Appearance> {
    let patch = crop_patch(frame, bbox, APPEARANCE_SIDE, APPEARANCE_SIDE)?;
    let features = extract_features(&patch, cell_size, palette)?;
    let keys = quantize_colors(&patch, palette)?;
    let whole = BoundingBox::new(0.0, 0.0, APPEARANCE_SIDE as f64, APPEARANCE_SIDE as f64);
    let histogram = color_histogram(&keys, &whole, palette.len())?;
    Ok(Appearance { features, histogram })
}

/// Cosine of the angle between two flattened feature maps.
pub fn similarity_corr(trusted: &FeatureMap, x: &FeatureMap) -> Result<f64> {
    if !trusted.same_shape(x) {
        return Err(invalid("feature maps differ in shape"));
    }
    let (a, b) = (trusted.as_slice(), x.as_slice());
    let dot: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::UndefinedSimilarity);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Chi-square distance between two histograms; bins empty in both are
/// skipped. Smaller means more similar.
pub fn similarity_chisq(trusted: &ColorHistogram, x: &ColorHistogram) -> Result<f64> {
    if trusted.len() != x.len() {
        return Err(invalid(format!("histograms have {} and {} bins", trusted.len(), x.len())));
    }
    Ok(trusted.bins().iter().zip(x.bins()).filter(|(a, b)| **a + **b > 0.0).map(|(a, b)| (a - b).powi(2) / (a + b)).sum())
}

/// Uncontaminated reference appearance of the target.
#[derive(Debug, Clone, PartialEq)]
pub struct TrustedTemplate {
    pub appearance: Appearance,
    pub source_frame: usize,
    pub confidence: f64,
    /// Correlation filter learned on the trusted frame, if any.
    pub filter: Option<Filter>,
}

impl TrustedTemplate {
    /// The template from the first frame.
    pub fn initial(appearance: Appearance, filter: Option<Filter>) -> Self {
        Self { appearance, source_frame: 0, confidence: 1.0, filter }
    }
}

/// When a high-confidence frame may replace the trusted template.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustPolicy {
    pub threshold: f64,
    pub refresh_interval: usize,
}

impl Default for TrustPolicy {
    fn default() -> Self {
        Self { threshold: 0.5, refresh_interval: 50 }
    }
}

/// Returns the candidate as the new trusted template when the frame is
/// confident, recovery is inactive and the refresh interval has elapsed;
/// otherwise the current template. Frame 0 is always accepted.
pub fn update_trusted(
    current: &TrustedTemplate,
    candidate: &Appearance,
    filter: Option<&Filter>,
    score: f64,
    frame_idx: usize,
    recovery_active: bool,
    policy: &TrustPolicy,
) -> TrustedTemplate {
    let fresh = TrustedTemplate { appearance: candidate.clone(), source_frame: frame_idx, confidence: score, filter: filter.cloned() };
    if frame_idx == 0 {
        return TrustedTemplate { confidence: 1.0, ..fresh };
    }
    let due = frame_idx >= current.source_frame + policy.refresh_interval;
    if score >= policy.threshold && !recovery_active && due {
        fresh
    } else {
        current.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chosen {
    Baseline,
    Motion,
}

/// Outcome of the location decision with all four similarity values.
/// Undefined similarities are reported as `-inf` (s1) and `+inf` (s2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocationChoice {
    pub chosen: Chosen,
    pub s1_base: f64,
    pub s1_motion: f64,
    pub s2_base: f64,
    pub s2_motion: f64,
}

fn scores(trusted: &Appearance, cand: &Appearance) -> (f64, f64) {
    match (similarity_corr(&trusted.features, &cand.features), similarity_chisq(&trusted.histogram, &cand.histogram)) {
        (Ok(s1), Ok(s2)) => (s1, s2),
        _ => (f64::NEG_INFINITY, f64::INFINITY),
    }
}

/// Takes the motion proposal only when it is strictly more correlated with
/// the trusted template and no farther from it in color distribution.
pub fn choose_location(trusted: &TrustedTemplate, baseline: &Appearance, motion: &Appearance) -> LocationChoice {
    let (s1_base, s2_base) = scores(&trusted.appearance, baseline);
    let (s1_motion, s2_motion) = scores(&trusted.appearance, motion);
    let chosen = if s1_motion > s1_base && s2_motion <= s2_base { Chosen::Motion } else { Chosen::Baseline };
    LocationChoice { chosen, s1_base, s1_motion, s2_base, s2_motion }
}

/// When the recovery path should run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivationRule {
    pub threshold: f64,
    /// Frames a center must stay put to count as stuck.
    pub stuck_frames: usize,
    pub stuck_radius: f64,
    pub border_margin: f64,
}

impl Default for ActivationRule {
    fn default() -> Self {
        Self { threshold: 0.2, stuck_frames: 10, stuck_radius: 2.0, border_margin: 5.0 }
    }
}

fn centroid(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n)
}

fn spread(pts: &[(f64, f64)]) -> f64 {
    let c = centroid(pts);
    pts.iter().map(|p| ((p.0 - c.0).powi(2) + (p.1 - c.1).powi(2)).sqrt()).fold(0.0, f64::max)
}

fn mean_step(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 2 {
        return 0.0;
    }
    pts.windows(2).map(|w| ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt()).sum::<f64>() / (pts.len() - 1) as f64
}

impl ActivationRule {
    /// Low appearance score, a center that stopped abruptly, or a center
    /// pinned to the frame border.
    pub fn should_recover(&self, score: f64, centers: &[(f64, f64)], frame_size: (usize, usize)) -> bool {
        !(score >= self.threshold) || self.is_stuck(centers) || self.is_pinned(centers, frame_size)
    }

    /// The last `K` centers lie within the stuck radius while the `K` before
    /// them moved more.
    pub fn is_stuck(&self, centers: &[(f64, f64)]) -> bool {
        let k = self.stuck_frames.max(2);
        if centers.len() < k + 2 {
            return false;
        }
        let recent = &centers[centers.len() - k..];
        let start = centers.len().saturating_sub(2 * k);
        let earlier = &centers[start..centers.len() - k + 1];
        spread(recent) <= self.stuck_radius && spread(earlier) > self.stuck_radius && mean_step(earlier) > mean_step(recent)
    }

    /// The last `K` centers all lie within the border margin.
    pub fn is_pinned(&self, centers: &[(f64, f64)], frame_size: (usize, usize)) -> bool {
        let k = self.stuck_frames.max(1);
        if centers.len() < k {
            return false;
        }
        let (w, h) = (frame_size.0 as f64, frame_size.1 as f64);
        let m = self.border_margin;
        centers[centers.len() - k..].iter().all(|&(x, y)| x < m || y < m || x > w - m || y > h - m)
    }
}
