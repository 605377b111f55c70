//! Pixel-level primitives: frames, boxes, scalar maps, resampling, integral
//! images, windowed max-sum search and blurring.
//!
//! Coordinates are 0-based with the origin at the top-left corner, x to the
//! right and y downward.

use crate::error::{invalid, Result};

/// An RGB raster, row-major, channel values in `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    pixels: Vec<[f32; 3]>,
}

impl Frame {
    pub fn new(width: usize, height: usize, pixels: Vec<[f32; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(invalid(format!("frame dims must be positive, got {width}x{height}")));
        }
        if pixels.len() != width * height {
            return Err(invalid(format!("pixel count {} does not match {width}x{height}", pixels.len())));
        }
        Ok(Self { width, height, pixels })
    }

    /// Uniformly colored frame.
    pub fn filled(width: usize, height: usize, rgb: [f32; 3]) -> Self {
        assert!(width > 0 && height > 0, "frame dims must be positive");
        Self { width, height, pixels: vec![rgb; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [f32; 3]) -> Self {
        assert!(width > 0 && height > 0, "frame dims must be positive");
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self { width, height, pixels }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[f32; 3]] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f32; 3] {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, rgb: [f32; 3]) {
        self.pixels[y * self.width + x] = rgb;
    }

    /// Bilinear sample with edge replication outside the raster.
    pub fn sample(&self, fx: f64, fy: f64) -> [f32; 3] {
        let (x0, x1, tx) = bilinear_taps(fx, self.width);
        let (y0, y1, ty) = bilinear_taps(fy, self.height);
        let a = self.get(x0, y0);
        let b = self.get(x1, y0);
        let c = self.get(x0, y1);
        let d = self.get(x1, y1);
        let mut out = [0f32; 3];
        for k in 0..3 {
            let top = a[k] as f64 * (1.0 - tx) + b[k] as f64 * tx;
            let bot = c[k] as f64 * (1.0 - tx) + d[k] as f64 * tx;
            out[k] = (top * (1.0 - ty) + bot * ty) as f32;
        }
        out
    }

    /// Luma in `[0, 1]` (Rec. 601 weights).
    pub fn luma(&self) -> ScalarMap {
        let values = self.pixels.iter().map(|p| luma_of(*p)).collect();
        ScalarMap { width: self.width, height: self.height, values }
    }
}

#[inline]
pub(crate) fn luma_of(p: [f32; 3]) -> f64 {
    (0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64) / 255.0
}

#[inline]
fn bilinear_taps(f: f64, len: usize) -> (usize, usize, f64) {
    let max = (len - 1) as f64;
    let f = f.clamp(0.0, max);
    let i0 = f.floor() as usize;
    let i1 = (i0 + 1).min(len - 1);
    (i0, i1, f - i0 as f64)
}

/// Axis-aligned box in pixels; `x`, `y` give the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self { x: cx - w / 2.0, y: cy - h / 2.0, w, h }
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w.max(0.0) * self.h.max(0.0)
    }

    /// Both sides strictly positive and all fields finite.
    pub fn is_valid(&self) -> bool {
        self.w > 0.0 && self.h > 0.0 && self.x.is_finite() && self.y.is_finite() && self.w.is_finite() && self.h.is_finite()
    }

    pub fn intersection_area(&self, other: &BoundingBox) -> f64 {
        let iw = (self.x + self.w).min(other.x + other.w) - self.x.max(other.x);
        let ih = (self.y + self.h).min(other.y + other.h) - self.y.max(other.y);
        if iw <= 0.0 || ih <= 0.0 {
            0.0
        } else {
            iw * ih
        }
    }

    pub fn iou(&self, other: &BoundingBox) -> f64 {
        let inter = self.intersection_area(other);
        if inter <= 0.0 {
            return 0.0;
        }
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            (inter / union).clamp(0.0, 1.0)
        }
    }

    /// Same center, sides multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let (cx, cy) = self.center();
        Self::from_center(cx, cy, self.w * factor, self.h * factor)
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self { x: self.x + dx, y: self.y + dy, ..*self }
    }

    pub fn contains_point(&self, px: f64, py: f64) -> bool {
        px >= self.x && px < self.x + self.w && py >= self.y && py < self.y + self.h
    }
}

/// Real-valued 2-D grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ScalarMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(invalid(format!("value count {} does not match {width}x{height}", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("scalar map values must be finite"));
        }
        Ok(Self { width, height, values })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, values: vec![0.0; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self { width, height, values }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.values[y * self.width + x] = v;
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn sample(&self, fx: f64, fy: f64) -> f64 {
        let (x0, x1, tx) = bilinear_taps(fx, self.width);
        let (y0, y1, ty) = bilinear_taps(fy, self.height);
        let top = self.get(x0, y0) * (1.0 - tx) + self.get(x1, y0) * tx;
        let bot = self.get(x0, y1) * (1.0 - tx) + self.get(x1, y1) * tx;
        top * (1.0 - ty) + bot * ty
    }
}

/// Maps output pixel `i` of an `out`-sample resampling of `[start, start+len)`
/// to a source coordinate (pixel centers aligned).
#[inline]
fn source_coord(start: f64, len: f64, out: usize, i: usize) -> f64 {
    start + (i as f64 + 0.5) * len / out as f64 - 0.5
}

/// Resamples `bbox` of `frame` to `out_w`×`out_h` bilinearly; area outside the
/// frame is filled by edge replication.
pub fn crop_patch(frame: &Frame, bbox: &BoundingBox, out_w: usize, out_h: usize) -> Result<Frame> {
    if !bbox.is_valid() {
        return Err(invalid(format!("degenerate crop box {bbox:?}")));
    }
    if out_w == 0 || out_h == 0 {
        return Err(invalid("crop output size must be positive"));
    }
    let xs: Vec<f64> = (0..out_w).map(|i| source_coord(bbox.x, bbox.w, out_w, i)).collect();
    let mut pixels = Vec::with_capacity(out_w * out_h);
    for j in 0..out_h {
        let sy = source_coord(bbox.y, bbox.h, out_h, j);
        for &sx in &xs {
            pixels.push(frame.sample(sx, sy));
        }
    }
    Ok(Frame { width: out_w, height: out_h, pixels })
}

/// [`crop_patch`] for scalar maps.
pub fn crop_map(map: &ScalarMap, bbox: &BoundingBox, out_w: usize, out_h: usize) -> Result<ScalarMap> {
    if !bbox.is_valid() {
        return Err(invalid(format!("degenerate crop box {bbox:?}")));
    }
    if out_w == 0 || out_h == 0 || map.width == 0 || map.height == 0 {
        return Err(invalid("crop sizes must be positive"));
    }
    Ok(ScalarMap::from_fn(out_w, out_h, |i, j| map.sample(source_coord(bbox.x, bbox.w, out_w, i), source_coord(bbox.y, bbox.h, out_h, j))))
}

/// Inclusive prefix sums: `out[y][x] = Σ map[0..=y][0..=x]`.
pub fn integral_image(map: &ScalarMap) -> ScalarMap {
    let (w, h) = (map.width, map.height);
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        let mut row = 0.0;
        for x in 0..w {
            row += map.values[y * w + x];
            out[y * w + x] = row + if y > 0 { out[(y - 1) * w + x] } else { 0.0 };
        }
    }
    ScalarMap { width: w, height: h, values: out }
}

/// Sum of the `win_w`×`win_h` rectangle at `(x, y)` read from an inclusive
/// integral image.
#[inline]
pub fn rect_sum(integral: &ScalarMap, x: usize, y: usize, win_w: usize, win_h: usize) -> f64 {
    let x1 = x + win_w - 1;
    let y1 = y + win_h - 1;
    let mut s = integral.get(x1, y1);
    if x > 0 {
        s -= integral.get(x - 1, y1);
    }
    if y > 0 {
        s -= integral.get(x1, y - 1);
    }
    if x > 0 && y > 0 {
        s += integral.get(x - 1, y - 1);
    }
    s
}

/// Finds the `win_w`×`win_h` window with the largest sum. Ties resolve to the
/// smallest `y`, then the smallest `x`.
pub fn max_sum_window(map: &ScalarMap, win_w: usize, win_h: usize) -> Result<(BoundingBox, f64)> {
    if win_w == 0 || win_h == 0 || win_w > map.width || win_h > map.height {
        return Err(invalid(format!("window {win_w}x{win_h} does not fit map {}x{}", map.width, map.height)));
    }
    let ii = integral_image(map);
    let mut best = (0usize, 0usize, f64::NEG_INFINITY);
    for y in 0..=map.height - win_h {
        for x in 0..=map.width - win_w {
            let s = rect_sum(&ii, x, y, win_w, win_h);
            if s > best.2 {
                best = (x, y, s);
            }
        }
    }
    let (x, y, s) = best;
    Ok((BoundingBox::new(x as f64, y as f64, win_w as f64, win_h as f64), s))
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (4.0 * sigma).ceil().max(1.0) as isize;
    let mut k: Vec<f64> = (-radius..=radius).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable Gaussian blur with edge replication. `sigma <= 0` returns a copy.
pub fn gaussian_blur(frame: &Frame, sigma: f64) -> Frame {
    if sigma <= 0.0 {
        return frame.clone();
    }
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as isize;
    let (w, h) = (frame.width as isize, frame.height as isize);
    let mut tmp = vec![[0f64; 3]; frame.pixels.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0f64; 3];
            for (t, kv) in k.iter().enumerate() {
                let sx = (x + t as isize - r).clamp(0, w - 1);
                let p = frame.pixels[(y * w + sx) as usize];
                for c in 0..3 {
                    acc[c] += kv * p[c] as f64;
                }
            }
            tmp[(y * w + x) as usize] = acc;
        }
    }
    let mut pixels = vec![[0f32; 3]; frame.pixels.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0f64; 3];
            for (t, kv) in k.iter().enumerate() {
                let sy = (y + t as isize - r).clamp(0, h - 1);
                let p = tmp[(sy * w + x) as usize];
                for c in 0..3 {
                    acc[c] += kv * p[c];
                }
            }
            pixels[(y * w + x) as usize] = [acc[0] as f32, acc[1] as f32, acc[2] as f32];
        }
    }
    Frame { width: frame.width, height: frame.height, pixels }
}

/// 3×3 mean filter with edge replication.
pub fn box_blur3(map: &ScalarMap) -> ScalarMap {
    let (w, h) = (map.width as isize, map.height as isize);
    ScalarMap::from_fn(map.width, map.height, |x, y| {
        let mut s = 0.0;
        for dy in -1..=1 {
            for dx in -1..=1 {
                let sx = (x as isize + dx).clamp(0, w - 1) as usize;
                let sy = (y as isize + dy).clamp(0, h - 1) as usize;
                s += map.get(sx, sy);
            }
        }
        s / 9.0
    })
}
