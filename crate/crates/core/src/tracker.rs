//! Per-frame orchestration: correlation tracking on confident frames, and
//! motion-based recovery plus shape adjustment when the tracker loses
//! confidence.

use serde::{Deserialize, Serialize};

use crate::dcf::{CorrelationTracker, DcfParams, Filter, SolverParams};
use crate::error::{invalid, Error, Result};
use crate::features::quantize_colors;
use crate::imaging::{crop_map, crop_patch, BoundingBox, Frame, ScalarMap};
use crate::motion::{estimate_global_motion, motion_proposal, residual_map, MotionModel, MotionParams, SizeMode};
use crate::recovery::{appearance, choose_location, update_trusted, ActivationRule, Chosen, TrustPolicy, TrustedTemplate};
use crate::shape::{
    apply_shape, build_palette, fuse_shape, sample_seeds, segment_mrf, superpixel_candidates, ColorKeyModel, SuperpixelParams,
};

/// Tracker settings. Every field has a default; a JSON config only needs
/// the fields it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    /// Temporal regularization weight of the filter objective.
    pub mu: f64,
    /// Appearance score below which recovery runs.
    pub activation_threshold: f64,
    /// Side of the resampled segmentation patch.
    pub seg_patch: usize,
    pub sigma_blur: f64,
    pub min_superpixel: usize,
    pub superpixel_k: f64,
    pub scale_count: usize,
    pub scale_step: f64,
    pub scale_damping: f64,
    pub stuck_frames: usize,
    pub stuck_radius: f64,
    pub border_margin: f64,
    pub trust_threshold: f64,
    pub trust_refresh: usize,
    pub seeds_fg: usize,
    pub seeds_bg: usize,
    pub mrf_iters: usize,
    pub rng_seed: u64,
    pub cell_size: usize,
    pub search_area_scale: f64,
    pub solver_iterations: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            mu: 15.0,
            activation_threshold: 0.2,
            seg_patch: 48,
            sigma_blur: 0.6,
            min_superpixel: 50,
            superpixel_k: 150.0,
            scale_count: 5,
            scale_step: 1.02,
            scale_damping: 0.98,
            stuck_frames: 10,
            stuck_radius: 2.0,
            border_margin: 5.0,
            trust_threshold: 0.5,
            trust_refresh: 50,
            seeds_fg: 20,
            seeds_bg: 30,
            mrf_iters: 10,
            rng_seed: 0,
            cell_size: 4,
            search_area_scale: 5.0,
            solver_iterations: 2,
        }
    }
}

fn check(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(what.to_string()))
    }
}

impl TrackerConfig {
    /// Parses a JSON object, rejecting unknown keys and out-of-range values.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        check(self.mu.is_finite() && self.mu >= 0.0, "mu must be finite and non-negative")?;
        check(unit(self.activation_threshold), "activation_threshold must lie in [0, 1]")?;
        check((16..=256).contains(&self.seg_patch), "seg_patch must lie in [16, 256]")?;
        check(self.sigma_blur.is_finite() && self.sigma_blur >= 0.0, "sigma_blur must be non-negative")?;
        check(self.min_superpixel >= 1, "min_superpixel must be at least 1")?;
        check(self.superpixel_k.is_finite() && self.superpixel_k > 0.0, "superpixel_k must be positive")?;
        check(self.scale_count >= 1 && self.scale_count <= 33, "scale_count must lie in [1, 33]")?;
        check(self.scale_step.is_finite() && self.scale_step >= 1.0, "scale_step must be at least 1")?;
        check(self.scale_damping > 0.0 && self.scale_damping <= 1.0, "scale_damping must lie in (0, 1]")?;
        check(self.stuck_frames >= 2, "stuck_frames must be at least 2")?;
        check(self.stuck_radius.is_finite() && self.stuck_radius >= 0.0, "stuck_radius must be non-negative")?;
        check(self.border_margin.is_finite() && self.border_margin >= 0.0, "border_margin must be non-negative")?;
        check(unit(self.trust_threshold), "trust_threshold must lie in [0, 1]")?;
        check(self.trust_refresh >= 1, "trust_refresh must be at least 1")?;
        check(self.seeds_fg >= 1 && self.seeds_bg >= 1, "seed counts must be at least 1")?;
        check(self.mrf_iters >= 1, "mrf_iters must be at least 1")?;
        check((1..=16).contains(&self.cell_size), "cell_size must lie in [1, 16]")?;
        check(self.search_area_scale.is_finite() && self.search_area_scale >= 1.0, "search_area_scale must be at least 1")?;
        check(self.solver_iterations >= 1, "solver_iterations must be at least 1")?;
        Ok(())
    }

    fn dcf_params(&self) -> DcfParams {
        DcfParams {
            cell_size: self.cell_size,
            search_area_scale: self.search_area_scale,
            mu: self.mu,
            solver: SolverParams { iterations: self.solver_iterations, ..SolverParams::default() },
            scale_count: self.scale_count,
            scale_step: self.scale_step,
            scale_damping: self.scale_damping,
            ..DcfParams::default()
        }
    }

    fn activation(&self) -> ActivationRule {
        ActivationRule {
            threshold: self.activation_threshold,
            stuck_frames: self.stuck_frames,
            stuck_radius: self.stuck_radius,
            border_margin: self.border_margin,
        }
    }

    fn superpixel(&self) -> SuperpixelParams {
        SuperpixelParams { sigma: self.sigma_blur, k: self.superpixel_k, min_size: self.min_superpixel }
    }
}

/// Which modules run on top of the correlation tracker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ablation {
    /// Correlation tracking only; the filter updates every frame.
    Baseline,
    /// Adds motion-based recovery.
    Motion,
    /// Adds shape adjustment without motion cues.
    Shape,
    #[default]
    Full,
}

impl Ablation {
    pub fn uses_motion(self) -> bool {
        matches!(self, Ablation::Motion | Ablation::Full)
    }

    pub fn uses_shape(self) -> bool {
        matches!(self, Ablation::Shape | Ablation::Full)
    }
}

impl std::str::FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Ablation::Baseline),
            "motion" => Ok(Ablation::Motion),
            "shape" => Ok(Ablation::Shape),
            "full" => Ok(Ablation::Full),
            other => Err(Error::Config(format!("unknown ablation '{other}'"))),
        }
    }
}

/// What happened on the most recent frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameReport {
    pub bbox: BoundingBox,
    pub score: f64,
    pub recovered: bool,
    /// Location decision, when both proposals were available.
    pub chosen: Option<Chosen>,
    pub shape_applied: bool,
}

/// Extrapolates the next box from the mean center velocity over the last
/// five entries, keeping the last size.
pub fn predict_trajectory(history: &[(usize, BoundingBox)]) -> Result<BoundingBox> {
    let (last_idx, last) = *history.last().ok_or_else(|| invalid("empty trajectory"))?;
    let window = &history[history.len().saturating_sub(5)..];
    let (first_idx, first) = window[0];
    if last_idx <= first_idx {
        return Ok(last);
    }
    let span = (last_idx - first_idx) as f64;
    let (c0, c1) = (first.center(), last.center());
    let v = ((c1.0 - c0.0) / span, (c1.1 - c0.1) / span);
    Ok(last.translated(v.0, v.1))
}

/// Single-target tracker.
#[derive(Debug, Clone)]
pub struct Tracker {
    config: TrackerConfig,
    ablation: Ablation,
    frame_size: (usize, usize),
    dcf: CorrelationTracker,
    colors: ColorKeyModel,
    trusted: TrustedTemplate,
    trust: TrustPolicy,
    activation: ActivationRule,
    trajectory: Vec<(usize, BoundingBox, f64)>,
    prev_frame: Frame,
    recovery_active: bool,
    /// Filter to warm-start the next update after a motion acceptance.
    relearn_from: Option<Filter>,
    last: FrameReport,
}

/// Overlap above which the two location proposals are taken to point at
/// the same target, and the baseline box is kept.
const AGREEMENT_IOU: f64 = 0.3;

/// Segmentation patch around `bbox`: twice its size, so the box always has
/// an exterior.
fn seg_region(bbox: &BoundingBox) -> BoundingBox {
    let (cx, cy) = bbox.center();
    BoundingBox::from_center(cx, cy, 2.0 * bbox.w, 2.0 * bbox.h)
}

/// Maps a box between frame and patch coordinates of `region` resampled to
/// `side`×`side`.
fn to_patch(b: &BoundingBox, region: &BoundingBox, side: usize) -> BoundingBox {
    let (sx, sy) = (side as f64 / region.w, side as f64 / region.h);
    BoundingBox::new((b.x - region.x) * sx, (b.y - region.y) * sy, b.w * sx, b.h * sy)
}

fn from_patch(b: &BoundingBox, region: &BoundingBox, side: usize) -> BoundingBox {
    let (sx, sy) = (region.w / side as f64, region.h / side as f64);
    BoundingBox::new(region.x + b.x * sx, region.y + b.y * sy, b.w * sx, b.h * sy)
}

impl Tracker {
    /// Starts tracking `bbox` in the first frame.
    pub fn new(frame: &Frame, bbox: &BoundingBox, config: TrackerConfig, ablation: Ablation) -> Result<Self> {
        config.validate()?;
        if !bbox.is_valid() {
            return Err(invalid(format!("degenerate initial box {bbox:?}")));
        }
        let (cx, cy) = bbox.center();
        if !(0.0..=frame.width() as f64).contains(&cx) || !(0.0..=frame.height() as f64).contains(&cy) {
            return Err(invalid(format!("initial box {bbox:?} lies outside the frame")));
        }
        let side = config.seg_patch;
        let region = seg_region(bbox);
        let patch = crop_patch(frame, &region, side, side)?;
        let colors = build_palette(&patch, &to_patch(bbox, &region, side))?;
        let dcf = CorrelationTracker::new(frame, bbox, colors.palette().clone(), config.dcf_params())?;
        let app = appearance(frame, bbox, colors.palette(), config.cell_size)?;
        let trusted = TrustedTemplate::initial(app, Some(dcf.filter().clone()));
        Ok(Self {
            trust: TrustPolicy { threshold: config.trust_threshold, refresh_interval: config.trust_refresh },
            activation: config.activation(),
            config,
            ablation,
            frame_size: (frame.width(), frame.height()),
            dcf,
            colors,
            trusted,
            trajectory: vec![(0, *bbox, 1.0)],
            prev_frame: frame.clone(),
            recovery_active: false,
            relearn_from: None,
            last: FrameReport { bbox: *bbox, score: 1.0, recovered: false, chosen: None, shape_applied: false },
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn ablation(&self) -> Ablation {
        self.ablation
    }

    pub fn filter(&self) -> &Filter {
        self.dcf.filter()
    }

    pub fn trusted(&self) -> &TrustedTemplate {
        &self.trusted
    }

    pub fn color_model(&self) -> &ColorKeyModel {
        &self.colors
    }

    /// `(frame index, box, appearance score)` for every processed frame.
    pub fn trajectory(&self) -> &[(usize, BoundingBox, f64)] {
        &self.trajectory
    }

    pub fn last_report(&self) -> &FrameReport {
        &self.last
    }

    pub fn is_recovering(&self) -> bool {
        self.recovery_active
    }

    /// Processes the next frame and returns the target box.
    pub fn track(&mut self, frame: &Frame) -> Result<BoundingBox> {
        if (frame.width(), frame.height()) != self.frame_size {
            return Err(invalid(format!(
                "frame is {}x{}, tracker was started on {}x{}",
                frame.width(),
                frame.height(),
                self.frame_size.0,
                self.frame_size.1
            )));
        }
        let idx = self.trajectory.last().map_or(0, |t| t.0) + 1;
        let prev = self.trajectory.last().expect("trajectory starts non-empty").1;

        let baseline = self
            .dcf
            .detect(frame, prev.center(), (prev.w, prev.h))
            .map(|d| (BoundingBox::from_center(d.center.0, d.center.1, prev.w * d.scale, prev.h * d.scale), d.score));
        let score = baseline.as_ref().map_or(f64::NAN, |b| b.1);

        let mut centers: Vec<(f64, f64)> = self.trajectory.iter().map(|t| t.1.center()).collect();
        if let Ok((b, _)) = &baseline {
            centers.push(b.center());
        }
        let recover = self.ablation != Ablation::Baseline && self.activation.should_recover(score, &centers, self.frame_size);

        let report = match (&baseline, recover) {
            (Ok((b_b, s)), false) => {
                let out = self.clamp(b_b);
                self.confident_update(frame, &out, *s, idx)?;
                FrameReport { bbox: out, score: *s, recovered: false, chosen: None, shape_applied: false }
            }
            _ => {
                self.recovery_active = true;
                let b_b = baseline.as_ref().ok().map(|b| b.0);
                self.recover(frame, &prev, b_b, score, idx)
            }
        };
        self.trajectory.push((idx, report.bbox, report.score));
        self.prev_frame = frame.clone();
        let out = report.bbox;
        self.last = report;
        Ok(out)
    }

    fn confident_update(&mut self, frame: &Frame, out: &BoundingBox, score: f64, idx: usize) -> Result<()> {
        self.recovery_active = false;
        let start = self.relearn_from.take();
        self.dcf.update(frame, out, start.as_ref())?;
        let due = idx >= self.trusted.source_frame + self.trust.refresh_interval;
        if due && score >= self.trust.threshold {
            if let Ok(app) = appearance(frame, out, self.colors.palette(), self.config.cell_size) {
                self.trusted = update_trusted(&self.trusted, &app, Some(self.dcf.filter()), score, idx, false, &self.trust);
            }
        }
        Ok(())
    }

    /// Recovery path. The filter is left untouched.
    fn recover(&mut self, frame: &Frame, prev: &BoundingBox, b_b: Option<BoundingBox>, score: f64, idx: usize) -> FrameReport {
        let palette = self.colors.palette().clone();
        let cell = self.config.cell_size;

        let mut residual: Option<ScalarMap> = None;
        let mut b_m: Option<BoundingBox> = None;
        if self.ablation.uses_motion() {
            let model =
                estimate_global_motion(&self.prev_frame, frame, prev, &MotionParams::default()).unwrap_or_else(|_| MotionModel::identity());
            if let Ok(r) = residual_map(&self.prev_frame, frame, &model) {
                let mode = SizeMode::IntegralClip { coverage: SizeMode::DEFAULT_COVERAGE };
                b_m = motion_proposal(&r, (prev.w, prev.h), mode).ok();
                residual = Some(r);
            }
        }

        let mut chosen = None;
        let location = match (b_b, b_m) {
            (Some(b), Some(m)) if b.iou(&m) >= AGREEMENT_IOU => {
                chosen = Some(Chosen::Baseline);
                b
            }
            (Some(b), Some(m)) => {
                let ab = appearance(frame, &b, &palette, cell);
                let am = appearance(frame, &m, &palette, cell);
                let pick = match (ab, am) {
                    (Ok(ab), Ok(am)) => choose_location(&self.trusted, &ab, &am).chosen,
                    (Err(_), Ok(_)) => Chosen::Motion,
                    _ => Chosen::Baseline,
                };
                chosen = Some(pick);
                if pick == Chosen::Motion {
                    self.relearn_from = self.trusted.filter.clone();
                    m
                } else {
                    b
                }
            }
            (Some(b), None) => b,
            (None, Some(m)) => m,
            (None, None) => {
                let history: Vec<(usize, BoundingBox)> = self.trajectory.iter().map(|t| (t.0, t.1)).collect();
                predict_trajectory(&history).unwrap_or(*prev)
            }
        };

        let mut out = location;
        let mut shape_applied = false;
        if self.ablation.uses_shape() {
            let base = b_b.unwrap_or(location);
            if let Some(b_star) = self.shape_box(frame, &location, &base, b_m.as_ref().unwrap_or(&base), residual.as_ref(), idx) {
                out = apply_shape(&location, &b_star);
                shape_applied = true;
            }
        }
        FrameReport { bbox: self.clamp(&out), score, recovered: true, chosen, shape_applied }
    }

    /// Shape candidates from segmentation (or superpixels) around `location`,
    /// fused against both proposals.
    fn shape_box(
        &self,
        frame: &Frame,
        location: &BoundingBox,
        b_b: &BoundingBox,
        b_m: &BoundingBox,
        residual: Option<&ScalarMap>,
        idx: usize,
    ) -> Option<BoundingBox> {
        let side = self.config.seg_patch;
        let region = seg_region(location);
        let patch = crop_patch(frame, &region, side, side).ok()?;
        let inner = to_patch(location, &region, side);

        let from_mask = || -> Option<BoundingBox> {
            let model = self.colors.refreshed(&patch, &inner).ok()?;
            let keys = quantize_colors(&patch, model.palette()).ok()?;
            let seed = self.config.rng_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(idx as u64);
            let seeds = sample_seeds(&model, &keys, &inner, self.config.seeds_fg, self.config.seeds_bg, seed).ok()?;
            let mask = segment_mrf(&patch, &seeds, self.config.mrf_iters).ok()?;
            if mask.is_sane() {
                mask.bounding_box()
            } else {
                None
            }
        };
        let candidates: Vec<BoundingBox> = match from_mask() {
            Some(b) => vec![from_patch(&b, &region, side)],
            None => {
                let res = match residual {
                    Some(r) => crop_map(r, &region, side, side).ok()?,
                    None => ScalarMap::zeros(side, side),
                };
                let base = to_patch(b_b, &region, side);
                superpixel_candidates(&patch, &res, &base, &self.config.superpixel())
                    .ok()?
                    .iter()
                    .map(|b| from_patch(b, &region, side))
                    .collect()
            }
        };
        fuse_shape(&candidates, b_b, b_m).ok().map(|(b, _)| b)
    }

    /// Keeps the box non-degenerate with its center inside the frame and its
    /// size within a sane range of the initial size.
    fn clamp(&self, b: &BoundingBox) -> BoundingBox {
        let (fw, fh) = (self.frame_size.0 as f64, self.frame_size.1 as f64);
        let (bw, bh) = self.dcf.base_size();
        let w = if b.w.is_finite() { b.w.clamp((0.2 * bw).max(1.0), (5.0 * bw).min(fw).max(1.0)) } else { bw };
        let h = if b.h.is_finite() { b.h.clamp((0.2 * bh).max(1.0), (5.0 * bh).min(fh).max(1.0)) } else { bh };
        let (cx, cy) = b.center();
        let cx = if cx.is_finite() { cx.clamp(0.0, fw) } else { fw / 2.0 };
        let cy = if cy.is_finite() { cy.clamp(0.0, fh) } else { fh / 2.0 };
        BoundingBox::from_center(cx, cy, w, h)
    }
}
