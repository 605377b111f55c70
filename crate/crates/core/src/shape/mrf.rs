use crate::error::{invalid, Error, Result};
use crate::features::{normalized, sq_dist};
use crate::imaging::{BoundingBox, Frame};

use super::SeedSet;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Segmentation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MrfParams {
    pub max_iters: usize,
    /// Weight of the pairwise term.
    pub smoothness: f64,
    pub components: usize,
    pub em_iters: usize,
    pub var_floor: f64,
}

impl Default for MrfParams {
    fn default() -> Self {
        Self { max_iters: 10, smoothness: 2.0, components: 2, em_iters: 5, var_floor: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Component {
    weight: f64,
    mean: [f64; 3],
    var: [f64; 3],
}

impl Component {
    fn log_density(&self, c: [f64; 3]) -> f64 {
        let mut acc = 0.0;
        for ch in 0..3 {
            let d = c[ch] - self.mean[ch];
            acc += d * d / self.var[ch] + self.var[ch].ln() + LN_2PI;
        }
        self.weight.ln() - 0.5 * acc
    }
}

/// Diagonal-covariance Gaussian mixture over RGB in `[0,1]³`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gmm {
    components: Vec<Component>,
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl Gmm {
    /// Fits `k` components by k-means initialization and EM. Falls back to
    /// a single Gaussian when there are fewer samples than components.
    pub fn fit(samples: &[[f64; 3]], k: usize, em_iters: usize, var_floor: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::NonSalient("no samples for mixture fit".into()));
        }
        let k = if samples.len() < k { 1 } else { k.max(1) };

        let mut centers = vec![samples[0]];
        while centers.len() < k {
            let far = samples
                .iter()
                .max_by(|a, b| {
                    let da = centers.iter().map(|m| sq_dist(*m, **a)).fold(f64::INFINITY, f64::min);
                    let db = centers.iter().map(|m| sq_dist(*m, **b)).fold(f64::INFINITY, f64::min);
                    da.total_cmp(&db)
                })
                .copied()
                .expect("non-empty");
            centers.push(far);
        }
        let mut assign = vec![0usize; samples.len()];
        for _ in 0..5 {
            for (a, s) in assign.iter_mut().zip(samples) {
                *a = (0..k).min_by(|&i, &j| sq_dist(centers[i], *s).total_cmp(&sq_dist(centers[j], *s))).unwrap();
            }
            for (i, c) in centers.iter_mut().enumerate() {
                let members: Vec<&[f64; 3]> = samples.iter().zip(&assign).filter(|(_, &a)| a == i).map(|(s, _)| s).collect();
                if !members.is_empty() {
                    let n = members.len() as f64;
                    *c = [0, 1, 2].map(|ch| members.iter().map(|m| m[ch]).sum::<f64>() / n);
                }
            }
        }
        let mut resp: Vec<Vec<f64>> = assign.iter().map(|&a| (0..k).map(|i| if i == a { 1.0 } else { 0.0 }).collect()).collect();
        let mut gmm = Gmm { components: Vec::new() };
        for iter in 0..=em_iters {
            gmm = Self::m_step(samples, &resp, var_floor);
            if iter == em_iters {
                break;
            }
            for (r, s) in resp.iter_mut().zip(samples) {
                let logs: Vec<f64> = gmm.components.iter().map(|c| c.log_density(*s)).collect();
                let total = log_sum_exp(&logs);
                *r = logs.iter().map(|l| (l - total).exp()).collect();
            }
        }
        Ok(gmm)
    }

    fn m_step(samples: &[[f64; 3]], resp: &[Vec<f64>], var_floor: f64) -> Gmm {
        let k = resp[0].len();
        let n = samples.len() as f64;
        let mut components = Vec::with_capacity(k);
        for i in 0..k {
            let nk: f64 = resp.iter().map(|r| r[i]).sum();
            if nk <= 1e-12 {
                continue;
            }
            let mean = [0, 1, 2].map(|ch| resp.iter().zip(samples).map(|(r, s)| r[i] * s[ch]).sum::<f64>() / nk);
            let var = [0, 1, 2].map(|ch| {
                let v = resp.iter().zip(samples).map(|(r, s)| r[i] * (s[ch] - mean[ch]).powi(2)).sum::<f64>() / nk;
                v.max(var_floor)
            });
            components.push(Component { weight: nk / n, mean, var });
        }
        Gmm { components }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Negative log-likelihood of a color.
    pub fn nll(&self, c: [f64; 3]) -> f64 {
        let logs: Vec<f64> = self.components.iter().map(|m| m.log_density(c)).collect();
        -log_sum_exp(&logs)
    }
}

/// Binary labels over a patch; 1 marks foreground.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationMask {
    width: usize,
    height: usize,
    labels: Vec<u8>,
    energy: f64,
}

impl SegmentationMask {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.labels[y * self.width + x]
    }

    /// Energy of the labels under the model they were optimized for.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn foreground_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn foreground_fraction(&self) -> f64 {
        self.foreground_count() as f64 / self.labels.len() as f64
    }

    /// Pixel count of the largest 4-connected foreground component.
    pub fn largest_component(&self) -> usize {
        let mut seen = vec![false; self.labels.len()];
        let mut best = 0;
        let mut stack = Vec::new();
        for start in 0..self.labels.len() {
            if self.labels[start] != 1 || seen[start] {
                continue;
            }
            seen[start] = true;
            stack.push(start);
            let mut size = 0;
            while let Some(i) = stack.pop() {
                size += 1;
                let (x, y) = (i % self.width, i / self.width);
                let mut visit = |j: usize| {
                    if self.labels[j] == 1 && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                };
                if x > 0 {
                    visit(i - 1);
                }
                if x + 1 < self.width {
                    visit(i + 1);
                }
                if y > 0 {
                    visit(i - self.width);
                }
                if y + 1 < self.height {
                    visit(i + self.width);
                }
            }
            best = best.max(size);
        }
        best
    }

    /// Foreground fraction within `[0.05, 0.95]` and the largest component
    /// holding at least 70% of the foreground.
    pub fn is_sane(&self) -> bool {
        let frac = self.foreground_fraction();
        if !(0.05..=0.95).contains(&frac) {
            return false;
        }
        self.largest_component() as f64 >= 0.7 * self.foreground_count() as f64
    }

    /// Enclosing box of the foreground pixels.
    pub fn bounding_box(&self) -> Option<BoundingBox> {
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) == 1 {
                    x0 = x0.min(x);
                    y0 = y0.min(y);
                    x1 = x1.max(x);
                    y1 = y1.max(y);
                }
            }
        }
        (x0 != usize::MAX).then(|| BoundingBox::new(x0 as f64, y0 as f64, (x1 - x0 + 1) as f64, (y1 - y0 + 1) as f64))
    }
}

struct Model {
    width: usize,
    height: usize,
    /// Per pixel: cost of label 0 and label 1.
    unary: Vec<[f64; 2]>,
    /// Pairwise weight to the right and lower neighbor.
    right: Vec<f64>,
    down: Vec<f64>,
    smoothness: f64,
}

impl Model {
    fn energy(&self, labels: &[u8]) -> f64 {
        let mut e = 0.0;
        for y in 0..self.height {
            for x in 0..self.width {
                let i = y * self.width + x;
                e += self.unary[i][labels[i] as usize];
                if x + 1 < self.width && labels[i] != labels[i + 1] {
                    e += self.smoothness * self.right[i];
                }
                if y + 1 < self.height && labels[i] != labels[i + self.width] {
                    e += self.smoothness * self.down[i];
                }
            }
        }
        e
    }

    /// Energy terms touching pixel `i` if it took label `l`.
    fn local(&self, labels: &[u8], i: usize, l: u8) -> f64 {
        let (x, y) = (i % self.width, i / self.width);
        let mut e = self.unary[i][l as usize];
        let pen = |j: usize, w: f64| if labels[j] != l { self.smoothness * w } else { 0.0 };
        if x > 0 {
            e += pen(i - 1, self.right[i - 1]);
        }
        if x + 1 < self.width {
            e += pen(i + 1, self.right[i]);
        }
        if y > 0 {
            e += pen(i - self.width, self.down[i - self.width]);
        }
        if y + 1 < self.height {
            e += pen(i + self.width, self.down[i]);
        }
        e
    }
}

fn build_model(patch: &Frame, seeds: &SeedSet, params: &MrfParams) -> Result<(Model, Vec<Option<u8>>)> {
    let (w, h) = (patch.width(), patch.height());
    if seeds.fg.is_empty() || seeds.bg.is_empty() {
        return Err(Error::NonSalient("seed set lacks a label".into()));
    }
    let colors: Vec<[f64; 3]> = patch.pixels().iter().map(|p| normalized(*p)).collect();
    let mut clamp: Vec<Option<u8>> = vec![None; w * h];
    let mut samples = [Vec::new(), Vec::new()];
    for (label, list) in [(1u8, &seeds.fg), (0u8, &seeds.bg)] {
        for &(x, y) in list.iter() {
            if x >= w || y >= h {
                return Err(invalid(format!("seed ({x},{y}) outside {w}x{h} patch")));
            }
            let i = y * w + x;
            if clamp[i].is_some_and(|l| l != label) {
                return Err(invalid(format!("seed ({x},{y}) is both foreground and background")));
            }
            clamp[i] = Some(label);
            samples[label as usize].push(colors[i]);
        }
    }
    let bg = Gmm::fit(&samples[0], params.components, params.em_iters, params.var_floor)?;
    let fg = Gmm::fit(&samples[1], params.components, params.em_iters, params.var_floor)?;
    let unary: Vec<[f64; 2]> = colors.iter().map(|c| [bg.nll(*c), fg.nll(*c)]).collect();

    let mut right = vec![0.0; w * h];
    let mut down = vec![0.0; w * h];
    let (mut total, mut pairs) = (0.0, 0usize);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if x + 1 < w {
                right[i] = sq_dist(colors[i], colors[i + 1]);
                total += right[i];
                pairs += 1;
            }
            if y + 1 < h {
                down[i] = sq_dist(colors[i], colors[i + w]);
                total += down[i];
                pairs += 1;
            }
        }
    }
    let mean = if pairs > 0 { total / pairs as f64 } else { 0.0 };
    let beta = if mean > 0.0 { 1.0 / (2.0 * mean) } else { 0.0 };
    for v in right.iter_mut().chain(down.iter_mut()) {
        *v = (-beta * *v).exp();
    }
    Ok((Model { width: w, height: h, unary, right, down, smoothness: params.smoothness }, clamp))
}

/// Binary segmentation by iterated conditional modes, returning the mask and
/// the energy before the first sweep and after each sweep.
pub fn segment_mrf_traced(patch: &Frame, seeds: &SeedSet, params: &MrfParams) -> Result<(SegmentationMask, Vec<f64>)> {
    let (model, clamp) = build_model(patch, seeds, params)?;
    let mut labels: Vec<u8> = model.unary.iter().zip(&clamp).map(|(u, c)| c.unwrap_or(if u[1] < u[0] { 1 } else { 0 })).collect();
    let mut energies = vec![model.energy(&labels)];
    for _ in 0..params.max_iters {
        let mut changed = false;
        for i in 0..labels.len() {
            if clamp[i].is_some() {
                continue;
            }
            let cur = labels[i];
            let other = 1 - cur;
            if model.local(&labels, i, other) < model.local(&labels, i, cur) {
                labels[i] = other;
                changed = true;
            }
        }
        energies.push(model.energy(&labels));
        if !changed {
            break;
        }
    }
    let energy = *energies.last().expect("initial energy recorded");
    Ok((SegmentationMask { width: model.width, height: model.height, labels, energy }, energies))
}

/// Binary segmentation of `patch` from seed pixels with default settings and
/// at most `max_iters` sweeps.
pub fn segment_mrf(patch: &Frame, seeds: &SeedSet, max_iters: usize) -> Result<SegmentationMask> {
    let params = MrfParams { max_iters, ..MrfParams::default() };
    segment_mrf_traced(patch, seeds, &params).map(|(m, _)| m)
}

/// Energy of an arbitrary labeling under the model [`segment_mrf_traced`]
/// builds from `patch` and `seeds`.
pub fn mrf_energy(patch: &Frame, seeds: &SeedSet, params: &MrfParams, labels: &[u8]) -> Result<f64> {
    if labels.len() != patch.width() * patch.height() || labels.iter().any(|&l| l > 1) {
        return Err(invalid("labels must be 0/1, one per pixel"));
    }
    let (model, _) = build_model(patch, seeds, params)?;
    Ok(model.energy(labels))
}
