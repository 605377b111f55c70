use crate::error::{invalid, Error, Result};
use crate::imaging::{gaussian_blur, BoundingBox, Frame, ScalarMap};

/// Graph-based superpixel settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperpixelParams {
    /// Gaussian blur applied before building the graph.
    pub sigma: f64,
    /// Merge threshold scale; larger values give larger components.
    pub k: f64,
    pub min_size: usize,
}

impl Default for SuperpixelParams {
    fn default() -> Self {
        Self { sigma: 0.6, k: 150.0, min_size: 50 }
    }
}

/// Component id per pixel, ids contiguous from 0 in raster order of first
/// appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperpixelMap {
    width: usize,
    height: usize,
    ids: Vec<usize>,
    count: usize,
}

impl SuperpixelMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn get(&self, x: usize, y: usize) -> usize {
        self.ids[y * self.width + x]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.count];
        for &id in &self.ids {
            s[id] += 1;
        }
        s
    }
}

struct Forest {
    parent: Vec<usize>,
    size: Vec<usize>,
    internal: Vec<f64>,
}

impl Forest {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), size: vec![1; n], internal: vec![0.0; n] }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize, w: f64) {
        let (big, small) = if self.size[a] >= self.size[b] { (a, b) } else { (b, a) };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        self.internal[big] = self.internal[big].max(self.internal[small]).max(w);
    }
}

/// Graph-based segmentation over the 8-connected pixel grid with RGB
/// distance as edge weight. Components smaller than `min_size` are merged
/// into a neighbor.
pub fn felzenszwalb(frame: &Frame, params: &SuperpixelParams) -> Result<SuperpixelMap> {
    if !(params.k > 0.0) || params.sigma < 0.0 {
        return Err(invalid("superpixel k must be positive and sigma non-negative"));
    }
    let img = if params.sigma > 0.0 { gaussian_blur(frame, params.sigma) } else { frame.clone() };
    let (w, h) = (img.width(), img.height());
    let px = img.pixels();
    let dist = |a: usize, b: usize| {
        let (p, q) = (px[a], px[b]);
        (0..3).map(|c| ((p[c] - q[c]) as f64).powi(2)).sum::<f64>().sqrt()
    };
    let mut edges: Vec<(f64, usize, usize)> = Vec::with_capacity(4 * w * h);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if x + 1 < w {
                edges.push((dist(i, i + 1), i, i + 1));
            }
            if y + 1 < h {
                edges.push((dist(i, i + w), i, i + w));
                if x + 1 < w {
                    edges.push((dist(i, i + w + 1), i, i + w + 1));
                }
                if x > 0 {
                    edges.push((dist(i, i + w - 1), i, i + w - 1));
                }
            }
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut forest = Forest::new(w * h);
    for &(wt, a, b) in &edges {
        let (ra, rb) = (forest.find(a), forest.find(b));
        if ra == rb {
            continue;
        }
        let ta = forest.internal[ra] + params.k / forest.size[ra] as f64;
        let tb = forest.internal[rb] + params.k / forest.size[rb] as f64;
        if wt <= ta.min(tb) {
            forest.union(ra, rb, wt);
        }
    }
    for &(wt, a, b) in &edges {
        let (ra, rb) = (forest.find(a), forest.find(b));
        if ra != rb && (forest.size[ra] < params.min_size || forest.size[rb] < params.min_size) {
            forest.union(ra, rb, wt);
        }
    }

    let mut relabel = vec![usize::MAX; w * h];
    let mut ids = vec![0; w * h];
    let mut count = 0;
    for (i, id) in ids.iter_mut().enumerate() {
        let r = forest.find(i);
        if relabel[r] == usize::MAX {
            if forest.size[r] < params.min_size {
                return Err(Error::NoCandidates);
            }
            relabel[r] = count;
            count += 1;
        }
        *id = relabel[r];
    }
    Ok(SuperpixelMap { width: w, height: h, ids, count })
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

const QUANTILES: [f64; 3] = [0.5, 0.75, 0.9];
const ABSOLUTE_THRESHOLD: f64 = 0.5;

/// Candidate boxes from superpixels of `patch`.
///
/// Each superpixel gets an overlap score (fraction of its pixels inside
/// `base_box`), a residual score (mean residual, normalized by the largest
/// such mean) and their average. Every score is thresholded at fixed
/// quantiles and at 0.5; each resulting foreground set yields the enclosing
/// box of its superpixels. When the residual is zero everywhere only the
/// overlap score is used.
pub fn superpixel_candidates(
    patch: &Frame,
    residual: &ScalarMap,
    base_box: &BoundingBox,
    params: &SuperpixelParams,
) -> Result<Vec<BoundingBox>> {
    if residual.width() != patch.width() || residual.height() != patch.height() {
        return Err(invalid("residual is not aligned with the patch"));
    }
    let sp = felzenszwalb(patch, params)?;
    let n = sp.count();
    let sizes = sp.sizes();
    let mut inside = vec![0usize; n];
    let mut energy = vec![0.0; n];
    let mut extent = vec![(usize::MAX, usize::MAX, 0usize, 0usize); n];
    for y in 0..sp.height() {
        for x in 0..sp.width() {
            let id = sp.get(x, y);
            if base_box.contains_point(x as f64 + 0.5, y as f64 + 0.5) {
                inside[id] += 1;
            }
            energy[id] += residual.get(x, y);
            let e = &mut extent[id];
            *e = (e.0.min(x), e.1.min(y), e.2.max(x), e.3.max(y));
        }
    }
    let overlap: Vec<f64> = (0..n).map(|i| inside[i] as f64 / sizes[i] as f64).collect();
    let mean_res: Vec<f64> = (0..n).map(|i| energy[i] / sizes[i] as f64).collect();
    let peak = mean_res.iter().cloned().fold(0.0, f64::max);

    let mut scores = vec![overlap.clone()];
    if peak > 0.0 {
        let res: Vec<f64> = mean_res.iter().map(|r| r / peak).collect();
        let mix = overlap.iter().zip(&res).map(|(a, b)| 0.5 * (a + b)).collect();
        scores.push(res);
        scores.push(mix);
    }

    let mut out: Vec<BoundingBox> = Vec::new();
    for score in &scores {
        let mut sorted = score.clone();
        sorted.sort_by(f64::total_cmp);
        let thresholds = QUANTILES.iter().map(|&q| quantile(&sorted, q)).chain(std::iter::once(ABSOLUTE_THRESHOLD));
        for t in thresholds {
            let mut acc: Option<(usize, usize, usize, usize)> = None;
            for i in (0..n).filter(|&i| score[i] > 0.0 && score[i] >= t) {
                let e = extent[i];
                acc = Some(acc.map_or(e, |a| (a.0.min(e.0), a.1.min(e.1), a.2.max(e.2), a.3.max(e.3))));
            }
            if let Some((x0, y0, x1, y1)) = acc {
                let b = BoundingBox::new(x0 as f64, y0 as f64, (x1 - x0 + 1) as f64, (y1 - y0 + 1) as f64);
                if !out.contains(&b) {
                    out.push(b);
                }
            }
        }
    }
    if out.is_empty() {
        return Err(Error::NoCandidates);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scene() -> (Frame, BoundingBox) {
        let obj = BoundingBox::new(14.0, 12.0, 16.0, 20.0);
        let f = Frame::from_fn(48, 48, |x, y| {
            if obj.contains_point(x as f64 + 0.5, y as f64 + 0.5) {
                [200.0, 180.0, 40.0]
            } else if (x / 12 + y / 12) % 2 == 0 {
                [40.0, 90.0, 60.0]
            } else {
                [60.0, 70.0, 120.0]
            }
        });
        (f, obj)
    }

    #[test]
    fn uniform_patch_one_superpixel() {
        let f = Frame::filled(48, 48, [90.0, 90.0, 90.0]);
        let sp = felzenszwalb(&f, &SuperpixelParams::default()).unwrap();
        assert_eq!(sp.count(), 1);
        let c =
            superpixel_candidates(&f, &ScalarMap::zeros(48, 48), &BoundingBox::new(10.0, 10.0, 20.0, 20.0), &SuperpixelParams::default())
                .unwrap();
        assert_eq!(c, vec![BoundingBox::new(0.0, 0.0, 48.0, 48.0)]);
    }

    #[test]
    fn components_respect_min_size_and_ids() {
        let (f, _) = scene();
        let p = SuperpixelParams::default();
        let sp = felzenszwalb(&f, &p).unwrap();
        assert!(sp.count() > 1);
        assert!(sp.sizes().iter().all(|&s| s >= p.min_size));
        let mut next = 0;
        for &id in sp.ids() {
            assert!(id <= next);
            if id == next {
                next += 1;
            }
        }
        assert_eq!(next, sp.count());
    }

    #[test]
    fn tiny_patch_has_no_superpixels() {
        let f = Frame::filled(5, 5, [0.0; 3]);
        assert!(matches!(felzenszwalb(&f, &SuperpixelParams::default()), Err(Error::NoCandidates)));
    }

    #[test]
    fn residual_guided_candidate_finds_object() {
        let (f, obj) = scene();
        let residual = ScalarMap::from_fn(48, 48, |x, y| if obj.contains_point(x as f64 + 0.5, y as f64 + 0.5) { 1.0 } else { 0.0 });
        let base = BoundingBox::new(10.0, 8.0, 26.0, 28.0);
        let c = superpixel_candidates(&f, &residual, &base, &SuperpixelParams::default()).unwrap();
        let near = |b: &BoundingBox| {
            (b.x - obj.x).abs() <= 2.0 && (b.y - obj.y).abs() <= 2.0 && (b.w - obj.w).abs() <= 2.0 && (b.h - obj.h).abs() <= 2.0
        };
        assert!(c.iter().any(near), "{c:?}");
    }

    #[test]
    fn zero_residual_uses_overlap_only() {
        let (f, obj) = scene();
        let p = SuperpixelParams::default();
        let zero = superpixel_candidates(&f, &ScalarMap::zeros(48, 48), &obj, &p).unwrap();
        // Same candidates as a residual proportional to overlap would not add.
        assert!(!zero.is_empty() && zero.len() <= 4);
        let unique: std::collections::HashSet<String> = zero.iter().map(|b| format!("{b:?}")).collect();
        assert_eq!(unique.len(), zero.len());
    }

    #[test]
    fn misaligned_residual_rejected() {
        let (f, obj) = scene();
        assert!(superpixel_candidates(&f, &ScalarMap::zeros(4, 4), &obj, &SuperpixelParams::default()).is_err());
    }
}
