//! Handcrafted features: HOG channels, color-key channels and color-key
//! histograms.

use crate::error::{invalid, Error, Result};
use crate::imaging::{BoundingBox, Frame};

/// Unsigned orientation bins of the HOG channels.
pub const HOG_BINS: usize = 9;
/// Default HOG cell side in pixels.
pub const DEFAULT_CELL_SIZE: usize = 4;

const HOG_CLIP: f64 = 0.2;
const HOG_EPS: f64 = 1e-8;

/// Prototype colors for the eleven basic color names, in `[0, 1]³`:
/// black, blue, brown, grey, green, orange, pink, purple, red, white, yellow.
pub const COLOR_NAME_PROTOTYPES: [[f64; 3]; 11] = [
    [0.0, 0.0, 0.0],
    [0.0, 0.0, 1.0],
    [0.5, 0.4, 0.25],
    [0.5, 0.5, 0.5],
    [0.0, 1.0, 0.0],
    [1.0, 0.8, 0.0],
    [1.0, 0.5, 1.0],
    [1.0, 0.0, 1.0],
    [1.0, 0.0, 0.0],
    [1.0, 1.0, 1.0],
    [1.0, 1.0, 0.0],
];

/// Ordered set of color keys in normalized RGB.
#[derive(Debug, Clone, PartialEq)]
pub struct Palette {
    keys: Vec<[f64; 3]>,
}

impl Palette {
    pub fn new(keys: Vec<[f64; 3]>) -> Result<Self> {
        if keys.is_empty() {
            return Err(invalid("palette must contain at least one key"));
        }
        Ok(Self { keys })
    }

    /// The eleven color-name prototypes.
    pub fn color_names() -> Self {
        Self { keys: COLOR_NAME_PROTOTYPES.to_vec() }
    }

    pub fn keys(&self) -> &[[f64; 3]] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Index of the nearest key; ties go to the lowest index.
    pub fn nearest(&self, rgb: [f64; 3]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, k) in self.keys.iter().enumerate() {
            let d = sq_dist(*k, rgb);
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }
}

#[inline]
pub(crate) fn sq_dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

#[inline]
pub(crate) fn normalized(p: [f32; 3]) -> [f64; 3] {
    [p[0] as f64 / 255.0, p[1] as f64 / 255.0, p[2] as f64 / 255.0]
}

/// Per-pixel color-key indices.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyMap {
    width: usize,
    height: usize,
    keys: Vec<usize>,
}

impl KeyMap {
    pub fn new(width: usize, height: usize, keys: Vec<usize>) -> Result<Self> {
        if keys.len() != width * height {
            return Err(invalid("key count does not match dims"));
        }
        Ok(Self { width, height, keys })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn keys(&self) -> &[usize] {
        &self.keys
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> usize {
        self.keys[y * self.width + x]
    }
}

/// Normalized histogram over color keys.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorHistogram {
    bins: Vec<f64>,
}

impl ColorHistogram {
    /// Wraps `bins` without renormalizing.
    pub fn from_bins(bins: Vec<f64>) -> Self {
        Self { bins }
    }

    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptyRegion);
        }
        Ok(Self { bins: counts.iter().map(|&c| c as f64 / total as f64).collect() })
    }

    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }
}

/// Maps every pixel to its nearest palette key in normalized RGB.
pub fn quantize_colors(patch: &Frame, palette: &Palette) -> Result<KeyMap> {
    if palette.is_empty() {
        return Err(invalid("empty palette"));
    }
    let keys = patch.pixels().iter().map(|p| palette.nearest(normalized(*p))).collect();
    Ok(KeyMap { width: patch.width(), height: patch.height(), keys })
}

/// Pixels whose centers fall inside `region`, clipped to `[0, w) × [0, h)`.
pub(crate) fn region_pixels(width: usize, height: usize, region: &BoundingBox) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
    let span = |start: f64, len: f64, limit: usize| {
        // pixel i is inside iff start <= i + 0.5 < start + len
        let lo = (start - 0.5).ceil().max(0.0);
        let hi = (start + len - 0.5).ceil().min(limit as f64);
        if hi <= lo {
            0..0
        } else {
            lo as usize..hi as usize
        }
    };
    (span(region.x, region.w, width), span(region.y, region.h, height))
}

/// Fraction of region pixels carrying each key.
pub fn color_histogram(keys: &KeyMap, region: &BoundingBox, n_bins: usize) -> Result<ColorHistogram> {
    let (xs, ys) = region_pixels(keys.width, keys.height, region);
    let mut counts = vec![0usize; n_bins];
    for y in ys {
        for x in xs.clone() {
            let k = keys.get(x, y);
            if k >= n_bins {
                return Err(invalid(format!("key {k} out of range for {n_bins} bins")));
            }
            counts[k] += 1;
        }
    }
    ColorHistogram::from_counts(&counts)
}

/// D-channel feature grid, channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    grid_w: usize,
    grid_h: usize,
    channels: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(grid_w: usize, grid_h: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid_w * grid_h * channels {
            return Err(invalid("feature data length does not match dims"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(invalid("feature values must be finite"));
        }
        Ok(Self { grid_w, grid_h, channels, data })
    }

    pub fn zeros(grid_w: usize, grid_h: usize, channels: usize) -> Self {
        Self { grid_w, grid_h, channels, data: vec![0.0; grid_w * grid_h * channels] }
    }

    pub fn grid_w(&self) -> usize {
        self.grid_w
    }

    pub fn grid_h(&self) -> usize {
        self.grid_h
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn cells(&self) -> usize {
        self.grid_w * self.grid_h
    }

    pub fn channel(&self, d: usize) -> &[f64] {
        let n = self.cells();
        &self.data[d * n..(d + 1) * n]
    }

    pub fn channel_mut(&mut self, d: usize) -> &mut [f64] {
        let n = self.cells();
        &mut self.data[d * n..(d + 1) * n]
    }

    #[inline]
    pub fn get(&self, d: usize, x: usize, y: usize) -> f64 {
        self.data[d * self.cells() + y * self.grid_w + x]
    }

    /// All values, channel after channel.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn same_shape(&self, other: &FeatureMap) -> bool {
        self.grid_w == other.grid_w && self.grid_h == other.grid_h && self.channels == other.channels
    }

    /// Multiplies every channel by a per-cell window.
    pub fn apply_window(&mut self, window: &[f64]) {
        assert_eq!(window.len(), self.cells(), "window size mismatch");
        let n = self.cells();
        for chunk in self.data.chunks_exact_mut(n) {
            for (v, w) in chunk.iter_mut().zip(window) {
                *v *= w;
            }
        }
    }

    /// Circular shift by `(dx, dy)` cells: `out(x + dx, y + dy) = in(x, y)`.
    pub fn circular_shift(&self, dx: isize, dy: isize) -> FeatureMap {
        let (w, h) = (self.grid_w as isize, self.grid_h as isize);
        let mut out = FeatureMap::zeros(self.grid_w, self.grid_h, self.channels);
        for d in 0..self.channels {
            for y in 0..h {
                for x in 0..w {
                    let nx = (x + dx).rem_euclid(w) as usize;
                    let ny = (y + dy).rem_euclid(h) as usize;
                    let v = self.get(d, x as usize, y as usize);
                    out.channel_mut(d)[ny * self.grid_w + nx] = v;
                }
            }
        }
        out
    }
}

/// HOG channels followed by one occupancy channel per palette key.
pub fn extract_features(patch: &Frame, cell_size: usize, palette: &Palette) -> Result<FeatureMap> {
    if cell_size == 0 {
        return Err(invalid("cell size must be positive"));
    }
    if patch.width() < cell_size || patch.height() < cell_size {
        return Err(invalid(format!("patch {}x{} smaller than one {cell_size}px cell", patch.width(), patch.height())));
    }
    if palette.is_empty() {
        return Err(invalid("empty palette"));
    }
    let gw = patch.width() / cell_size;
    let gh = patch.height() / cell_size;
    let n = gw * gh;
    let channels = HOG_BINS + palette.len();
    let mut data = vec![0.0; channels * n];

    let hog = hog_cells(patch, cell_size, gw, gh);
    data[..HOG_BINS * n].copy_from_slice(&hog);

    let keys = quantize_colors(patch, palette)?;
    let per_cell = (cell_size * cell_size) as f64;
    for cy in 0..gh {
        for cx in 0..gw {
            for y in cy * cell_size..(cy + 1) * cell_size {
                for x in cx * cell_size..(cx + 1) * cell_size {
                    let k = keys.get(x, y);
                    data[(HOG_BINS + k) * n + cy * gw + cx] += 1.0 / per_cell;
                }
            }
        }
    }
    FeatureMap::new(gw, gh, channels, data)
}

/// Block-normalized orientation histograms, `HOG_BINS` channels of `gw × gh`.
fn hog_cells(patch: &Frame, cell: usize, gw: usize, gh: usize) -> Vec<f64> {
    let luma = patch.luma();
    let (w, h) = (patch.width(), patch.height());
    let n = gw * gh;
    let mut hist = vec![0.0; HOG_BINS * n];
    let bin_width = std::f64::consts::PI / HOG_BINS as f64;
    for y in 0..gh * cell {
        for x in 0..gw * cell {
            let xl = x.saturating_sub(1);
            let xr = (x + 1).min(w - 1);
            let yu = y.saturating_sub(1);
            let yd = (y + 1).min(h - 1);
            let gx = luma.get(xr, y) - luma.get(xl, y);
            let gy = luma.get(x, yd) - luma.get(x, yu);
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let mut angle = gy.atan2(gx);
            if angle < 0.0 {
                angle += std::f64::consts::PI;
            }
            let pos = angle / bin_width;
            let b0 = pos.floor() as usize % HOG_BINS;
            let b1 = (b0 + 1) % HOG_BINS;
            let frac = pos - pos.floor();
            let c = (y / cell) * gw + x / cell;
            hist[b0 * n + c] += mag * (1.0 - frac);
            hist[b1 * n + c] += mag * frac;
        }
    }

    let energy: Vec<f64> = (0..n).map(|c| (0..HOG_BINS).map(|b| hist[b * n + c].powi(2)).sum()).collect();
    let block_energy = |bx: usize, by: usize| -> f64 {
        let mut e = 0.0;
        for y in by..(by + 2).min(gh) {
            for x in bx..(bx + 2).min(gw) {
                e += energy[y * gw + x];
            }
        }
        e
    };
    // Every cell is covered by up to four 2×2 blocks; clamp at the borders.
    let origins = |c: usize, len: usize| -> [usize; 2] {
        let lo = c.saturating_sub(1).min(len.saturating_sub(2));
        let hi = c.min(len.saturating_sub(2));
        [lo, hi]
    };
    let mut out = vec![0.0; HOG_BINS * n];
    for cy in 0..gh {
        for cx in 0..gw {
            let c = cy * gw + cx;
            if energy[c] == 0.0 {
                continue;
            }
            for by in origins(cy, gh) {
                for bx in origins(cx, gw) {
                    let norm = (block_energy(bx, by) + HOG_EPS).sqrt();
                    for b in 0..HOG_BINS {
                        out[b * n + c] += (hist[b * n + c] / norm).min(HOG_CLIP) / 4.0;
                    }
                }
            }
        }
    }
    out
}
