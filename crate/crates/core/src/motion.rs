//! Background motion estimation and compensation, motion residual maps and
//! the motion box proposal.

use crate::error::{invalid, Error, Result};
use crate::imaging::{box_blur3, max_sum_window, BoundingBox, Frame, ScalarMap};

/// Parameters of salient-point sampling, block matching and model fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionParams {
    pub grid_step: usize,
    pub max_points: usize,
    pub block_radius: usize,
    pub search_radius: usize,
    pub ratio_test: f64,
    pub inlier_threshold: f64,
    pub min_affine_inliers: usize,
}

impl Default for MotionParams {
    fn default() -> Self {
        Self {
            grid_step: 16,
            max_points: 200,
            block_radius: 4,
            search_radius: 12,
            ratio_test: 0.9,
            inlier_threshold: 1.0,
            min_affine_inliers: 12,
        }
    }
}

/// Global background motion mapping previous-frame coordinates to the
/// current frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MotionKind {
    Translation {
        dx: f64,
        dy: f64,
    },
    /// `x' = a0 x + a1 y + a2`, `y' = a3 x + a4 y + a5`.
    Affine([f64; 6]),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionModel {
    pub kind: MotionKind,
    pub inlier_fraction: f64,
}

impl MotionModel {
    pub fn identity() -> Self {
        Self { kind: MotionKind::Translation { dx: 0.0, dy: 0.0 }, inlier_fraction: 1.0 }
    }

    pub fn translation(dx: f64, dy: f64) -> Self {
        Self { kind: MotionKind::Translation { dx, dy }, inlier_fraction: 1.0 }
    }

    /// Affine model; the linear part must be invertible.
    pub fn affine(a: [f64; 6]) -> Result<Self> {
        let det = a[0] * a[4] - a[1] * a[3];
        if det.abs() < 1e-9 {
            return Err(invalid("affine linear part is singular"));
        }
        Ok(Self { kind: MotionKind::Affine(a), inlier_fraction: 1.0 })
    }

    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        match self.kind {
            MotionKind::Translation { dx, dy } => (x + dx, y + dy),
            MotionKind::Affine(a) => (a[0] * x + a[1] * y + a[2], a[3] * x + a[4] * y + a[5]),
        }
    }

    pub fn apply_inverse(&self, x: f64, y: f64) -> (f64, f64) {
        match self.kind {
            MotionKind::Translation { dx, dy } => (x - dx, y - dy),
            MotionKind::Affine(a) => {
                let det = a[0] * a[4] - a[1] * a[3];
                let (u, v) = (x - a[2], y - a[5]);
                ((a[4] * u - a[1] * v) / det, (-a[3] * u + a[0] * v) / det)
            }
        }
    }
}

/// One salient-point correspondence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMatch {
    pub prev: (f64, f64),
    pub curr: (f64, f64),
    pub valid: bool,
}

pub type PointMatchSet = Vec<PointMatch>;

/// Harris corner response on luma, summed over a 3×3 window.
fn harris_response(luma: &ScalarMap) -> ScalarMap {
    let (w, h) = (luma.width(), luma.height());
    let at = |x: isize, y: isize| luma.get(x.clamp(0, w as isize - 1) as usize, y.clamp(0, h as isize - 1) as usize);
    let mut ixx = ScalarMap::zeros(w, h);
    let mut iyy = ScalarMap::zeros(w, h);
    let mut ixy = ScalarMap::zeros(w, h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (at(x + 1, y) - at(x - 1, y)) * 0.5;
            let gy = (at(x, y + 1) - at(x, y - 1)) * 0.5;
            ixx.set(x as usize, y as usize, gx * gx);
            iyy.set(x as usize, y as usize, gy * gy);
            ixy.set(x as usize, y as usize, gx * gy);
        }
    }
    let (sxx, syy, sxy) = (box_blur3(&ixx), box_blur3(&iyy), box_blur3(&ixy));
    ScalarMap::from_fn(w, h, |x, y| {
        let (a, b, c) = (sxx.get(x, y), syy.get(x, y), sxy.get(x, y));
        a * b - c * c - 0.04 * (a + b) * (a + b)
    })
}

/// Corner-like points on a coarse grid, away from `exclude` and the borders.
fn salient_points(luma: &ScalarMap, exclude: &BoundingBox, params: &MotionParams) -> Vec<(usize, usize)> {
    let (w, h) = (luma.width(), luma.height());
    let r = params.block_radius;
    if w <= 2 * r + 2 || h <= 2 * r + 2 {
        return Vec::new();
    }
    let resp = harris_response(luma);
    let max_resp = resp.values().iter().cloned().fold(0.0, f64::max);
    if max_resp <= 1e-12 {
        return Vec::new();
    }
    let floor = (1e-3 * max_resp).max(1e-10);
    let guard = BoundingBox::new(exclude.x - r as f64, exclude.y - r as f64, exclude.w + 2.0 * r as f64, exclude.h + 2.0 * r as f64);
    let step = params.grid_step.max(1);
    let mut pts: Vec<(f64, usize, usize)> = Vec::new();
    for gy in (r..h - r).step_by(step) {
        for gx in (r..w - r).step_by(step) {
            let mut best: Option<(f64, usize, usize)> = None;
            for y in gy..(gy + step).min(h - r) {
                for x in gx..(gx + step).min(w - r) {
                    let v = resp.get(x, y);
                    if v > floor && !guard.contains_point(x as f64 + 0.5, y as f64 + 0.5) && best.is_none_or(|b| v > b.0) {
                        best = Some((v, x, y));
                    }
                }
            }
            if let Some(b) = best {
                pts.push(b);
            }
        }
    }
    pts.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then((a.2, a.1).cmp(&(b.2, b.1))));
    pts.truncate(params.max_points);
    pts.into_iter().map(|(_, x, y)| (x, y)).collect()
}

fn sad(prev: &ScalarMap, curr: &ScalarMap, px: usize, py: usize, cx: usize, cy: usize, r: usize) -> f64 {
    let mut s = 0.0;
    for j in 0..=2 * r {
        for i in 0..=2 * r {
            s += (prev.get(px + i - r, py + j - r) - curr.get(cx + i - r, cy + j - r)).abs();
        }
    }
    s
}

/// Block-matches salient background points of `prev` into `curr`.
pub fn match_points(prev: &Frame, curr: &Frame, exclude: &BoundingBox, params: &MotionParams) -> Result<PointMatchSet> {
    if prev.width() != curr.width() || prev.height() != curr.height() {
        return Err(invalid("frames differ in size"));
    }
    let (lp, lc) = (prev.luma(), curr.luma());
    let (w, h) = (prev.width() as isize, prev.height() as isize);
    let r = params.block_radius as isize;
    let s = params.search_radius as isize;
    let side = (2 * s + 1) as usize;
    let mut out = Vec::new();
    for (px, py) in salient_points(&lp, exclude, params) {
        let mut costs = vec![f64::INFINITY; side * side];
        let mut best = (f64::INFINITY, 0isize, 0isize);
        for dy in -s..=s {
            for dx in -s..=s {
                let (cx, cy) = (px as isize + dx, py as isize + dy);
                if cx < r || cy < r || cx >= w - r || cy >= h - r {
                    continue;
                }
                let c = sad(&lp, &lc, px, py, cx as usize, cy as usize, r as usize);
                costs[((dy + s) * (2 * s + 1) + dx + s) as usize] = c;
                if c < best.0 {
                    best = (c, dx, dy);
                }
            }
        }
        let (b, bdx, bdy) = best;
        let mut second = f64::INFINITY;
        for dy in -s..=s {
            for dx in -s..=s {
                if (dx - bdx).abs().max((dy - bdy).abs()) >= 2 {
                    second = second.min(costs[((dy + s) * (2 * s + 1) + dx + s) as usize]);
                }
            }
        }
        let valid = b.is_finite() && second.is_finite() && second > 0.0 && b / second <= params.ratio_test;
        let cost = |dx: isize, dy: isize| -> Option<f64> {
            if dx.abs() > s || dy.abs() > s {
                return None;
            }
            let c = costs[((dy + s) * (2 * s + 1) + dx + s) as usize];
            c.is_finite().then_some(c)
        };
        let refine = |l: Option<f64>, r: Option<f64>| match (l, r) {
            (Some(l), Some(r)) if b > 0.0 => {
                let denom = l - 2.0 * b + r;
                if denom > 0.0 {
                    (0.5 * (l - r) / denom).clamp(-0.5, 0.5)
                } else {
                    0.0
                }
            }
            _ => 0.0,
        };
        let sx = refine(cost(bdx - 1, bdy), cost(bdx + 1, bdy));
        let sy = refine(cost(bdx, bdy - 1), cost(bdx, bdy + 1));
        out.push(PointMatch { prev: (px as f64, py as f64), curr: (px as f64 + bdx as f64 + sx, py as f64 + bdy as f64 + sy), valid });
    }
    Ok(out)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(m);
    if d.abs() < 1e-12 {
        return None;
    }
    let mut out = [0.0; 3];
    for (c, o) in out.iter_mut().enumerate() {
        let mut mc = m;
        for r in 0..3 {
            mc[r][c] = b[r];
        }
        *o = det(mc) / d;
    }
    Some(out)
}

fn fit_affine(pts: &[&PointMatch]) -> Option<[f64; 6]> {
    let mut ata = [[0.0; 3]; 3];
    let mut atx = [0.0; 3];
    let mut aty = [0.0; 3];
    for p in pts {
        let row = [p.prev.0, p.prev.1, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atx[i] += row[i] * p.curr.0;
            aty[i] += row[i] * p.curr.1;
        }
    }
    let ax = solve3(ata, atx)?;
    let ay = solve3(ata, aty)?;
    Some([ax[0], ax[1], ax[2], ay[0], ay[1], ay[2]])
}

fn residual(model: &MotionModel, m: &PointMatch) -> f64 {
    let (x, y) = model.apply(m.prev.0, m.prev.1);
    ((x - m.curr.0).powi(2) + (y - m.curr.1).powi(2)).sqrt()
}

/// Robust translation fit, upgraded to affine when enough inliers support a
/// materially better fit.
pub fn fit_motion(matches: &[PointMatch], params: &MotionParams) -> Result<MotionModel> {
    let valid: Vec<&PointMatch> = matches.iter().filter(|m| m.valid).collect();
    if valid.len() < 4 {
        return Err(Error::InsufficientEvidence(format!("{} valid matches, need 4", valid.len())));
    }
    let mut model = MotionModel::translation(
        median(valid.iter().map(|m| m.curr.0 - m.prev.0).collect()),
        median(valid.iter().map(|m| m.curr.1 - m.prev.1).collect()),
    );
    let mut inliers: Vec<&PointMatch> = valid.clone();
    for _ in 0..3 {
        let next: Vec<&PointMatch> = valid.iter().copied().filter(|m| residual(&model, m) < params.inlier_threshold).collect();
        if next.len() < 4 {
            break;
        }
        let n = next.len() as f64;
        model = MotionModel::translation(
            next.iter().map(|m| m.curr.0 - m.prev.0).sum::<f64>() / n,
            next.iter().map(|m| m.curr.1 - m.prev.1).sum::<f64>() / n,
        );
        inliers = next;
    }
    let mean_res = |model: &MotionModel, set: &[&PointMatch]| set.iter().map(|m| residual(model, m)).sum::<f64>() / set.len() as f64;
    let trans_res = mean_res(&model, &inliers);

    if inliers.len() >= params.min_affine_inliers {
        let mut pool: Vec<&PointMatch> = valid.clone();
        let mut affine = None;
        for _ in 0..3 {
            let Some(a) = fit_affine(&pool) else { break };
            let Ok(candidate) = MotionModel::affine(a) else { break };
            let next: Vec<&PointMatch> = valid.iter().copied().filter(|m| residual(&candidate, m) < params.inlier_threshold).collect();
            affine = Some((candidate, next.clone()));
            if next.len() < params.min_affine_inliers {
                break;
            }
            pool = next;
        }
        if let Some((candidate, aff_inliers)) = affine {
            let det = match candidate.kind {
                MotionKind::Affine(a) => a[0] * a[4] - a[1] * a[3],
                MotionKind::Translation { .. } => 1.0,
            };
            if aff_inliers.len() >= params.min_affine_inliers.max(inliers.len())
                && (0.5..=2.0).contains(&det)
                && trans_res > 0.25
                && mean_res(&candidate, &aff_inliers) < 0.5 * trans_res
            {
                model = candidate;
                inliers = aff_inliers;
            }
        }
    }
    model.inlier_fraction = inliers.len() as f64 / valid.len() as f64;
    Ok(model)
}

/// Estimates the background motion from `prev` to `curr`, ignoring the
/// object region `exclude`.
pub fn estimate_global_motion(prev: &Frame, curr: &Frame, exclude: &BoundingBox, params: &MotionParams) -> Result<MotionModel> {
    let matches = match_points(prev, curr, exclude, params)?;
    fit_motion(&matches, params)
}

/// Warps `prev` by `motion` onto `curr`'s grid (bilinear on luma). Cells
/// whose source falls outside `prev` are `None`.
pub fn compensate(prev: &Frame, motion: &MotionModel) -> Vec<Option<f64>> {
    let luma = prev.luma();
    let (w, h) = (prev.width(), prev.height());
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = motion.apply_inverse(x as f64, y as f64);
            let inside = sx >= -1e-9 && sy >= -1e-9 && sx <= (w - 1) as f64 + 1e-9 && sy <= (h - 1) as f64 + 1e-9;
            out.push(inside.then(|| luma.sample(sx, sy)));
        }
    }
    out
}

/// Absolute luma difference between `curr` and the motion-compensated
/// `prev`, blurred 3×3; uncovered cells, their neighbors and the outer frame
/// border are zero.
pub fn residual_map(prev: &Frame, curr: &Frame, motion: &MotionModel) -> Result<ScalarMap> {
    if prev.width() != curr.width() || prev.height() != curr.height() {
        return Err(invalid("frames differ in size"));
    }
    let (w, h) = (curr.width(), curr.height());
    let comp = compensate(prev, motion);
    let lc = curr.luma();
    let raw = ScalarMap::from_fn(w, h, |x, y| match comp[y * w + x] {
        Some(v) => (lc.get(x, y) - v).abs(),
        None => 0.0,
    });
    let mut out = box_blur3(&raw);
    for y in 0..h {
        for x in 0..w {
            let border = x == 0 || y == 0 || x + 1 == w || y + 1 == h;
            let mut uncovered = false;
            for j in y.saturating_sub(1)..(y + 2).min(h) {
                for i in x.saturating_sub(1)..(x + 2).min(w) {
                    uncovered |= comp[j * w + i].is_none();
                }
            }
            if border || uncovered {
                out.set(x, y, 0.0);
            }
        }
    }
    Ok(out)
}

/// How the motion proposal is sized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SizeMode {
    /// Same size as the reference box.
    Fixed,
    /// Smallest per-axis span covering `coverage` of the residual mass,
    /// clamped to `[0.5, 2]` times the reference size.
    IntegralClip { coverage: f64 },
}

impl SizeMode {
    pub const DEFAULT_COVERAGE: f64 = 0.85;
}

/// Length of the shortest contiguous run of `profile` holding at least
/// `target` mass.
fn shortest_span(profile: &[f64], target: f64) -> usize {
    let mut best = profile.len();
    let mut lo = 0;
    let mut acc = 0.0;
    for hi in 0..profile.len() {
        acc += profile[hi];
        while lo <= hi && acc - profile[lo] >= target {
            acc -= profile[lo];
            lo += 1;
        }
        if acc >= target {
            best = best.min(hi - lo + 1);
        }
    }
    best.max(1)
}

/// Box covering the largest amount of residual.
pub fn motion_proposal(residual: &ScalarMap, ref_size: (f64, f64), mode: SizeMode) -> Result<BoundingBox> {
    let (mw, mh) = (residual.width(), residual.height());
    let rw = ref_size.0.round().max(1.0) as usize;
    let rh = ref_size.1.round().max(1.0) as usize;
    if rw > mw || rh > mh {
        return Err(invalid(format!("reference size {rw}x{rh} exceeds map {mw}x{mh}")));
    }
    let total = residual.sum();
    if !(total > 0.0) {
        return Err(Error::NoEvidence);
    }
    let (ww, wh) = match mode {
        SizeMode::Fixed => (rw, rh),
        SizeMode::IntegralClip { coverage } => {
            let cols: Vec<f64> = (0..mw).map(|x| (0..mh).map(|y| residual.get(x, y)).sum()).collect();
            let rows: Vec<f64> = (0..mh).map(|y| (0..mw).map(|x| residual.get(x, y)).sum()).collect();
            let clamp = |span: usize, r: usize, limit: usize| {
                let lo = ((r as f64 * 0.5).round() as usize).max(1);
                let hi = ((r as f64 * 2.0).round() as usize).min(limit);
                span.clamp(lo.min(hi), hi)
            };
            (clamp(shortest_span(&cols, coverage * total), rw, mw), clamp(shortest_span(&rows, coverage * total), rh, mh))
        }
    };
    max_sum_window(residual, ww, wh).map(|(b, _)| b)
}
