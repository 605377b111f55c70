//! Color-saliency-based shape proposals.
//!
//! A palette of color keys is chosen once on the first frame. For a patch
//! around the current location, the distribution of keys inside and outside
//! the box gives each key a saliency score; salient keys seed a binary MRF
//! segmentation whose mask yields shape candidates. When no salient colors
//! exist or the mask looks wrong, superpixels guided by the motion residual
//! and the baseline box provide candidates instead. Candidates are fused with
//! the baseline and motion proposals by IoU.

mod fusion;
mod mrf;
mod superpixel;

pub use fusion::{apply_shape, fuse_shape, iou, SHAPE_MAX_AREA_RATIO, SHAPE_MIN_IOU};
pub use mrf::{mrf_energy, segment_mrf, segment_mrf_traced, Gmm, MrfParams, SegmentationMask};
pub use superpixel::{felzenszwalb, superpixel_candidates, SuperpixelMap, SuperpixelParams};

use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::features::{normalized, quantize_colors, region_pixels, sq_dist, ColorHistogram, KeyMap, Palette};
use crate::imaging::{BoundingBox, Frame};

/// Minimum `max |CSS|` for a palette to count as salient.
pub const SALIENCE_FLOOR: f64 = 0.05;
/// Keys covering less of the patch than this are dropped from the default
/// palette.
const MIN_KEY_FRACTION: f64 = 0.01;
/// Cluster centers closer than this (normalized RGB) are merged.
const MERGE_RADIUS: f64 = 0.12;
const KMEANS_ITERS: usize = 10;

/// Palette with in/out-of-box key distributions and saliency scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorKeyModel {
    palette: Palette,
    p_in: ColorHistogram,
    p_out: ColorHistogram,
    css: Vec<f64>,
    z: f64,
    salient: bool,
}

impl ColorKeyModel {
    /// Builds the model and its saliency scores from given distributions.
    pub fn new(palette: Palette, p_in: ColorHistogram, p_out: ColorHistogram) -> Result<Self> {
        let (css, z) = color_saliency(palette.keys(), p_in.bins(), p_out.bins())?;
        let salient = css.iter().any(|v| v.abs() >= SALIENCE_FLOOR);
        Ok(Self { palette, p_in, p_out, css, z, salient })
    }

    /// Recomputes the distributions for `bbox` of `patch` with the same keys.
    pub fn refreshed(&self, patch: &Frame, bbox: &BoundingBox) -> Result<Self> {
        let keys = quantize_colors(patch, &self.palette)?;
        let (p_in, p_out) = in_out_histograms(&keys, bbox, self.palette.len())?;
        Self::new(self.palette.clone(), p_in, p_out)
    }

    pub fn palette(&self) -> &Palette {
        &self.palette
    }

    pub fn p_in(&self) -> &ColorHistogram {
        &self.p_in
    }

    pub fn p_out(&self) -> &ColorHistogram {
        &self.p_out
    }

    pub fn css(&self) -> &[f64] {
        &self.css
    }

    /// Normalization of the exponential key weights.
    pub fn z(&self) -> f64 {
        self.z
    }

    /// Whether some key reaches the salience floor.
    pub fn is_salient(&self) -> bool {
        self.salient
    }

    pub fn len(&self) -> usize {
        self.palette.len()
    }

    pub fn is_empty(&self) -> bool {
        self.palette.is_empty()
    }
}

/// Saliency weight of every key: `Σ_{j≠i} exp‖k_i − k_j‖²`, together with
/// their total `Z`.
pub fn key_weights(keys: &[[f64; 3]]) -> Result<(Vec<f64>, f64)> {
    if keys.len() < 2 {
        return Err(invalid(format!("saliency needs at least two keys, got {}", keys.len())));
    }
    let raw: Vec<f64> = keys
        .iter()
        .enumerate()
        .map(|(i, ki)| keys.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, kj)| sq_dist(*ki, *kj).exp()).sum())
        .collect();
    let z = raw.iter().sum();
    Ok((raw, z))
}

/// Color saliency scores: each key's normalized weight times
/// `p_in − p_out`. Returns the scores and the normalization `Z`.
pub fn color_saliency(keys: &[[f64; 3]], p_in: &[f64], p_out: &[f64]) -> Result<(Vec<f64>, f64)> {
    if p_in.len() != keys.len() || p_out.len() != keys.len() {
        return Err(invalid("distribution length differs from key count"));
    }
    let (raw, z) = key_weights(keys)?;
    let css = raw.iter().zip(p_in.iter().zip(p_out)).map(|(w, (a, b))| w / z * (a - b)).collect();
    Ok((css, z))
}

/// Key histograms inside and outside `bbox`.
fn in_out_histograms(keys: &KeyMap, bbox: &BoundingBox, n: usize) -> Result<(ColorHistogram, ColorHistogram)> {
    let (xs, ys) = region_pixels(keys.width(), keys.height(), bbox);
    let mut cin = vec![0usize; n];
    let mut cout = vec![0usize; n];
    for y in 0..keys.height() {
        for x in 0..keys.width() {
            let k = keys.get(x, y);
            if xs.contains(&x) && ys.contains(&y) {
                cin[k] += 1;
            } else {
                cout[k] += 1;
            }
        }
    }
    let total_out: usize = cout.iter().sum();
    if total_out == 0 {
        return Err(invalid("box covers the whole patch; no exterior"));
    }
    Ok((ColorHistogram::from_counts(&cin)?, ColorHistogram::from_counts(&cout)?))
}

/// Chooses the color keys for a target from the first frame.
///
/// The color-name prototypes present in the patch are tried first; when
/// they show no salient key, patch colors are clustered instead. If neither
/// gives at least two keys the full prototype set is returned, flagged
/// non-salient.
pub fn build_palette(patch: &Frame, bbox: &BoundingBox) -> Result<ColorKeyModel> {
    let (xs, ys) = region_pixels(patch.width(), patch.height(), bbox);
    let inside = xs.len() * ys.len();
    if inside == 0 {
        return Err(invalid("box does not cover any patch pixel"));
    }
    if inside == patch.width() * patch.height() {
        return Err(invalid("box covers the whole patch; no exterior"));
    }

    let names = Palette::color_names();
    let keys = quantize_colors(patch, &names)?;
    let mut counts = vec![0usize; names.len()];
    for &k in keys.keys() {
        counts[k] += 1;
    }
    let total = (patch.width() * patch.height()) as f64;
    let present: Vec<[f64; 3]> =
        names.keys().iter().zip(&counts).filter(|(_, &c)| c as f64 / total >= MIN_KEY_FRACTION).map(|(k, _)| *k).collect();
    if present.len() >= 2 {
        let model = model_for(patch, bbox, Palette::new(present)?)?;
        if model.is_salient() {
            return Ok(model);
        }
    }

    let clustered = cluster_colors(patch);
    if clustered.len() >= 2 {
        let model = model_for(patch, bbox, Palette::new(clustered)?)?;
        return Ok(model);
    }
    let mut model = model_for(patch, bbox, names)?;
    model.salient = false;
    Ok(model)
}

fn model_for(patch: &Frame, bbox: &BoundingBox, palette: Palette) -> Result<ColorKeyModel> {
    let keys = quantize_colors(patch, &palette)?;
    let (p_in, p_out) = in_out_histograms(&keys, bbox, palette.len())?;
    ColorKeyModel::new(palette, p_in, p_out)
}

/// Lloyd iterations from farthest-point seeding. Returns centers and the
/// simplified silhouette of the clustering.
fn kmeans(colors: &[[f64; 3]], k: usize) -> (Vec<[f64; 3]>, Vec<usize>, f64) {
    let mean = {
        let n = colors.len() as f64;
        let s = colors.iter().fold([0.0; 3], |a, c| [a[0] + c[0], a[1] + c[1], a[2] + c[2]]);
        [s[0] / n, s[1] / n, s[2] / n]
    };
    let farthest_from = |centers: &[[f64; 3]]| -> [f64; 3] {
        let mut best = (colors[0], -1.0);
        for c in colors {
            let d = centers.iter().map(|m| sq_dist(*m, *c)).fold(f64::INFINITY, f64::min);
            if d > best.1 {
                best = (*c, d);
            }
        }
        best.0
    };
    let mut centers = vec![farthest_from(&[mean])];
    while centers.len() < k {
        centers.push(farthest_from(&centers));
    }
    let mut assign = vec![0usize; colors.len()];
    for _ in 0..KMEANS_ITERS {
        for (a, c) in assign.iter_mut().zip(colors) {
            *a = nearest_index(&centers, *c);
        }
        let mut sums = vec![[0.0; 3]; k];
        let mut counts = vec![0usize; k];
        for (a, c) in assign.iter().zip(colors) {
            for ch in 0..3 {
                sums[*a][ch] += c[ch];
            }
            counts[*a] += 1;
        }
        for i in 0..k {
            if counts[i] > 0 {
                let n = counts[i] as f64;
                centers[i] = [sums[i][0] / n, sums[i][1] / n, sums[i][2] / n];
            }
        }
    }
    let mut score = 0.0;
    for (a, c) in assign.iter().zip(colors) {
        let own = sq_dist(centers[*a], *c).sqrt();
        let other = centers.iter().enumerate().filter(|(i, _)| i != a).map(|(_, m)| sq_dist(*m, *c).sqrt()).fold(f64::INFINITY, f64::min);
        let denom = own.max(other);
        if denom > 0.0 {
            score += (other - own) / denom;
        }
    }
    (centers, assign, score / colors.len() as f64)
}

fn nearest_index(centers: &[[f64; 3]], c: [f64; 3]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, m) in centers.iter().enumerate() {
        let d = sq_dist(*m, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

/// Clusters patch colors (k from 4 to 12 by silhouette) and merges
/// clusters closer than the merge radius.
fn cluster_colors(patch: &Frame) -> Vec<[f64; 3]> {
    let colors: Vec<[f64; 3]> = patch.pixels().iter().map(|p| normalized(*p)).collect();
    let mut distinct = colors.clone();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    if distinct.len() < 2 {
        return distinct;
    }
    let k_max = distinct.len().min(12);
    let k_min = 4.min(k_max);
    let mut best: Option<(Vec<[f64; 3]>, Vec<usize>, f64)> = None;
    for k in k_min..=k_max {
        let run = kmeans(&colors, k);
        if best.as_ref().is_none_or(|b| run.2 > b.2) {
            best = Some(run);
        }
    }
    let (centers, assign, _) = best.expect("at least one k evaluated");
    let mut clusters: Vec<([f64; 3], usize)> =
        centers.iter().enumerate().map(|(i, c)| (*c, assign.iter().filter(|&&a| a == i).count())).filter(|(_, n)| *n > 0).collect();
    loop {
        let mut closest: Option<(usize, usize, f64)> = None;
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let d = sq_dist(clusters[i].0, clusters[j].0).sqrt();
                if d < MERGE_RADIUS && closest.is_none_or(|c| d < c.2) {
                    closest = Some((i, j, d));
                }
            }
        }
        let Some((i, j, _)) = closest else { break };
        let (a, na) = clusters[i];
        let (b, nb) = clusters.remove(j);
        let n = (na + nb) as f64;
        let mix = |ch: usize| (a[ch] * na as f64 + b[ch] * nb as f64) / n;
        clusters[i] = ([mix(0), mix(1), mix(2)], na + nb);
    }
    clusters.into_iter().map(|(c, _)| c).collect()
}

/// Initial foreground and background pixels for segmentation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedSet {
    pub fg: Vec<(usize, usize)>,
    pub bg: Vec<(usize, usize)>,
    pub rng_seed: u64,
}

/// Draws `n` pixels: a key with probability proportional to its weight, then
/// a uniform pixel of that key.
fn draw(rng: &mut ChaCha8Rng, pools: &[(f64, Vec<(usize, usize)>)], n: usize) -> Vec<(usize, usize)> {
    let dist = WeightedIndex::new(pools.iter().map(|(w, _)| *w)).expect("positive weights");
    (0..n)
        .map(|_| {
            let pool = &pools[dist.sample(rng)].1;
            pool[rng.gen_range(0..pool.len())]
        })
        .collect()
}

/// Samples foreground seeds inside `bbox` from positive-saliency keys and
/// background seeds outside it from negative-saliency keys, each key chosen
/// in proportion to `|CSS|`.
pub fn sample_seeds(model: &ColorKeyModel, keys: &KeyMap, bbox: &BoundingBox, n_fg: usize, n_bg: usize, rng_seed: u64) -> Result<SeedSet> {
    let n = model.len();
    let (xs, ys) = region_pixels(keys.width(), keys.height(), bbox);
    let mut inside: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut outside: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for y in 0..keys.height() {
        for x in 0..keys.width() {
            let k = keys.get(x, y);
            if k >= n {
                return Err(invalid(format!("key {k} outside palette of {n}")));
            }
            if xs.contains(&x) && ys.contains(&y) {
                inside[k].push((x, y));
            } else {
                outside[k].push((x, y));
            }
        }
    }
    let css = model.css();
    let fg_pools: Vec<(f64, Vec<(usize, usize)>)> =
        (0..n).filter(|&k| css[k] > 0.0 && !inside[k].is_empty()).map(|k| (css[k], inside[k].clone())).collect();
    let bg_pools: Vec<(f64, Vec<(usize, usize)>)> =
        (0..n).filter(|&k| css[k] < 0.0 && !outside[k].is_empty()).map(|k| (-css[k], outside[k].clone())).collect();
    if fg_pools.is_empty() || bg_pools.is_empty() {
        return Err(Error::NonSalient("need keys of both saliency signs".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let fg = draw(&mut rng, &fg_pools, n_fg.max(1));
    let bg = draw(&mut rng, &bg_pools, n_bg.max(1));
    Ok(SeedSet { fg, bg, rng_seed })
}
