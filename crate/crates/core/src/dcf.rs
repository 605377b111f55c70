//! Spatially and temporally regularized correlation filter.
//!
//! A filter `f` with `D` channels is learned by minimizing
//!
//! ```text
//! ½‖Σ_d x^d ⋆ f^d − y‖² + ½ Σ_d ‖w · f^d‖² + μ/2 ‖f − f_prev‖²
//! ```
//!
//! with an alternating splitting solver: the data term is solved per
//! frequency in closed form, the spatial-weight and temporal terms per cell in
//! the spatial domain. Correlation uses circular boundaries and is reported
//! centered: cell `u` of a response holds `Σ_n f(n) x(n + u − c)` with `c`
//! the grid center, so the label peak at `c` means zero displacement and a
//! target displaced by `a` cells moves the peak to `c + a`.

use rustfft::num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::features::{extract_features, FeatureMap, Palette};
use crate::fft::Fft2;
use crate::imaging::{crop_patch, BoundingBox, Frame, ScalarMap};

/// Gaussian regression target peaking at the center cell `(w/2, h/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionLabel {
    grid_w: usize,
    grid_h: usize,
    values: Vec<f64>,
}

impl RegressionLabel {
    pub fn grid_w(&self) -> usize {
        self.grid_w
    }

    pub fn grid_h(&self) -> usize {
        self.grid_h
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.grid_w + x]
    }

    /// Values circularly moved so the center cell lands on `(0, 0)`.
    fn at_origin(&self) -> Vec<f64> {
        let (cx, cy) = grid_center(self.grid_w, self.grid_h);
        roll(&self.values, self.grid_w, self.grid_h, self.grid_w - cx, self.grid_h - cy)
    }
}

/// Circularly moves grid values by `(dx, dy)` cells.
fn roll(values: &[f64], w: usize, h: usize, dx: usize, dy: usize) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    for y in 0..h {
        for x in 0..w {
            out[((y + dy) % h) * w + (x + dx) % w] = values[y * w + x];
        }
    }
    out
}

/// Center cell of a `w × h` grid.
pub fn grid_center(w: usize, h: usize) -> (usize, usize) {
    (w / 2, h / 2)
}

pub fn make_label(grid_w: usize, grid_h: usize, sigma: f64) -> Result<RegressionLabel> {
    if !(sigma > 0.0) {
        return Err(invalid(format!("label sigma must be positive, got {sigma}")));
    }
    if grid_w == 0 || grid_h == 0 {
        return Err(invalid("label grid must be non-empty"));
    }
    let (cx, cy) = grid_center(grid_w, grid_h);
    let mut values = Vec::with_capacity(grid_w * grid_h);
    for y in 0..grid_h {
        for x in 0..grid_w {
            let dx = x as f64 - cx as f64;
            let dy = y as f64 - cy as f64;
            values.push((-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp());
        }
    }
    Ok(RegressionLabel { grid_w, grid_h, values })
}

/// Per-cell penalty on filter coefficients: small over the target, growing
/// quadratically outside it.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialWeight {
    grid_w: usize,
    grid_h: usize,
    values: Vec<f64>,
}

const WEIGHT_MIN: f64 = 100.0;
const WEIGHT_GROWTH: f64 = 200.0;

impl SpatialWeight {
    /// Bowl centered on the grid; `target_w`, `target_h` are the target
    /// extent in cells.
    pub fn quadratic_bowl(grid_w: usize, grid_h: usize, target_w: f64, target_h: f64) -> Result<Self> {
        if grid_w == 0 || grid_h == 0 || !(target_w > 0.0) || !(target_h > 0.0) {
            return Err(invalid("spatial weight needs a non-empty grid and positive target"));
        }
        let (cx, cy) = grid_center(grid_w, grid_h);
        let (a, b) = (target_w / 2.0, target_h / 2.0);
        let mut values = Vec::with_capacity(grid_w * grid_h);
        for y in 0..grid_h {
            for x in 0..grid_w {
                let dx = (x as f64 - cx as f64) / a;
                let dy = (y as f64 - cy as f64) / b;
                let r2 = dx * dx + dy * dy;
                values.push(WEIGHT_MIN + WEIGHT_GROWTH * (r2 - 1.0).max(0.0));
            }
        }
        Ok(Self { grid_w, grid_h, values })
    }

    /// Same weight everywhere.
    pub fn constant(grid_w: usize, grid_h: usize, value: f64) -> Result<Self> {
        if !(value > 0.0) {
            return Err(invalid("spatial weight must be positive"));
        }
        Ok(Self { grid_w, grid_h, values: vec![value; grid_w * grid_h] })
    }

    pub fn from_values(grid_w: usize, grid_h: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid_w * grid_h || values.iter().any(|v| !(*v > 0.0)) {
            return Err(invalid("spatial weight values must be positive and match the grid"));
        }
        Ok(Self { grid_w, grid_h, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.grid_w + x]
    }
}

/// Hann window over a grid.
pub fn cosine_window(grid_w: usize, grid_h: usize) -> Vec<f64> {
    let hann = |n: usize| -> Vec<f64> {
        if n == 1 {
            return vec![1.0];
        }
        // Periodic window sampled at cell centers so no cell is zeroed.
        (0..n).map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * (i as f64 + 0.5) / n as f64).cos()).collect()
    };
    let wx = hann(grid_w);
    let wy = hann(grid_h);
    let mut out = Vec::with_capacity(grid_w * grid_h);
    for y in 0..grid_h {
        for x in 0..grid_w {
            out.push(wx[x] * wy[y]);
        }
    }
    out
}

/// Learned template, stored both spatially and as its spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Filter {
    grid_w: usize,
    grid_h: usize,
    channels: usize,
    coeffs: Vec<f64>,
    spectrum: Vec<Complex64>,
}

impl Filter {
    pub fn from_coeffs(grid_w: usize, grid_h: usize, channels: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != grid_w * grid_h * channels {
            return Err(invalid("filter coefficient count does not match dims"));
        }
        let fft = Fft2::new(grid_w, grid_h);
        let n = grid_w * grid_h;
        let spectrum = coeffs.chunks_exact(n).flat_map(|c| fft.forward_real(c)).collect();
        Ok(Self { grid_w, grid_h, channels, coeffs, spectrum })
    }

    pub fn zeros(grid_w: usize, grid_h: usize, channels: usize) -> Self {
        let len = grid_w * grid_h * channels;
        Self { grid_w, grid_h, channels, coeffs: vec![0.0; len], spectrum: vec![Complex64::new(0.0, 0.0); len] }
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

    /// Spatial coefficients, channel-major.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn channel(&self, d: usize) -> &[f64] {
        let n = self.grid_w * self.grid_h;
        &self.coeffs[d * n..(d + 1) * n]
    }

    fn matches(&self, x: &FeatureMap) -> bool {
        self.grid_w == x.grid_w() && self.grid_h == x.grid_h() && self.channels == x.channels()
    }
}

/// Penalty schedule and iteration count of the splitting solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub iterations: usize,
    pub penalty_init: f64,
    pub penalty_step: f64,
    pub penalty_max: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self { iterations: 2, penalty_init: 10.0, penalty_step: 1.2, penalty_max: 1000.0 }
    }
}

/// Filter plus the objective value after initialization and after each
/// iteration.
#[derive(Debug, Clone)]
pub struct SolverTrace {
    pub filter: Filter,
    pub objectives: Vec<f64>,
}

/// Pre-transformed problem data shared by the solver and the objective.
struct Problem<'a> {
    fft: Fft2,
    n: usize,
    channels: usize,
    x_hat: Vec<Complex64>,
    /// Label moved so its peak sits at cell `(0, 0)`.
    y: Vec<f64>,
    y_hat: Vec<Complex64>,
    w2: Vec<f64>,
    mu: f64,
    prev: Option<&'a [f64]>,
}

impl<'a> Problem<'a> {
    fn new(x: &FeatureMap, y: &'a RegressionLabel, prev: Option<&'a Filter>, w: &SpatialWeight, mu: f64) -> Self {
        let fft = Fft2::new(x.grid_w(), x.grid_h());
        let n = x.cells();
        let x_hat = (0..x.channels()).flat_map(|d| fft.forward_real(x.channel(d))).collect();
        let y0 = y.at_origin();
        let y_hat = fft.forward_real(&y0);
        let mu = if prev.is_some() { mu } else { 0.0 };
        Self {
            fft,
            n,
            channels: x.channels(),
            x_hat,
            y: y0,
            y_hat,
            w2: w.values.iter().map(|v| v * v).collect(),
            mu,
            prev: prev.map(|f| f.coeffs.as_slice()),
        }
    }

    /// Uncentered response `Σ_d x^d ⋆ f^d` of spatial coefficients; it is
    /// compared against the label moved to the origin.
    fn response(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut acc = vec![Complex64::new(0.0, 0.0); self.n];
        for d in 0..self.channels {
            let f_hat = self.fft.forward_real(&coeffs[d * self.n..(d + 1) * self.n]);
            let xs = &self.x_hat[d * self.n..(d + 1) * self.n];
            for k in 0..self.n {
                acc[k] += f_hat[k].conj() * xs[k];
            }
        }
        self.fft.inverse_real(&acc)
    }

    fn objective(&self, coeffs: &[f64]) -> f64 {
        let r = self.response(coeffs);
        let data: f64 = r.iter().zip(&self.y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() * 0.5;
        let mut reg = 0.0;
        for (i, c) in coeffs.iter().enumerate() {
            reg += 0.5 * self.w2[i % self.n] * c * c;
        }
        let temporal = match self.prev {
            Some(p) => 0.5 * self.mu * coeffs.iter().zip(p).map(|(a, b)| (a - b).powi(2)).sum::<f64>(),
            None => 0.0,
        };
        data + reg + temporal
    }

    /// Exact minimizing step length from `from` along `dir`, never negative.
    fn line_search(&self, from: &[f64], dir: &[f64]) -> f64 {
        let r_from = self.response(from);
        let r_dir = self.response(dir);
        let mut slope = 0.0;
        let mut curv = 0.0;
        for k in 0..self.n {
            slope += (r_from[k] - self.y[k]) * r_dir[k];
            curv += r_dir[k] * r_dir[k];
        }
        for (i, (a, d)) in from.iter().zip(dir).enumerate() {
            let w2 = self.w2[i % self.n];
            slope += w2 * a * d;
            curv += w2 * d * d;
            if let Some(p) = self.prev {
                slope += self.mu * (a - p[i]) * d;
                curv += self.mu * d * d;
            }
        }
        if curv <= 0.0 {
            return 0.0;
        }
        (-slope / curv).max(0.0)
    }
}

fn check_dims(x: &FeatureMap, y: &RegressionLabel, prev: Option<&Filter>, w: &SpatialWeight, mu: f64) -> Result<()> {
    if x.grid_w() != y.grid_w || x.grid_h() != y.grid_h || x.grid_w() != w.grid_w || x.grid_h() != w.grid_h {
        return Err(invalid("feature, label and weight grids differ"));
    }
    if let Some(p) = prev {
        if !p.matches(x) {
            return Err(invalid("previous filter does not match feature dims"));
        }
    }
    if !(mu >= 0.0) {
        return Err(invalid("mu must be non-negative"));
    }
    Ok(())
}

/// Learns a filter from features `x` and label `y`, warm-started from
/// `prev` when given. Without `prev` the temporal term is dropped.
pub fn learn_filter(
    x: &FeatureMap,
    y: &RegressionLabel,
    prev: Option<&Filter>,
    w: &SpatialWeight,
    mu: f64,
    params: &SolverParams,
) -> Result<Filter> {
    learn_filter_traced(x, y, prev, w, mu, params).map(|t| t.filter)
}

/// [`learn_filter`] that also reports the objective after every iteration.
///
/// The returned estimate moves toward each splitting iterate by an exact line
/// search, so the reported objectives never increase.
pub fn learn_filter_traced(
    x: &FeatureMap,
    y: &RegressionLabel,
    prev: Option<&Filter>,
    w: &SpatialWeight,
    mu: f64,
    params: &SolverParams,
) -> Result<SolverTrace> {
    check_dims(x, y, prev, w, mu)?;
    let prob = Problem::new(x, y, prev, w, mu);
    let (n, channels) = (prob.n, prob.channels);
    let len = n * channels;

    let mut g: Vec<f64> = match prev {
        Some(p) => p.coeffs.clone(),
        None => vec![0.0; len],
    };
    let mut u = vec![0.0; len];
    let mut best = g.clone();
    let mut objectives = vec![prob.objective(&best)];
    let mut gamma = params.penalty_init;

    for _ in 0..params.iterations {
        // Frequency-domain data subproblem.
        let v_hat: Vec<Complex64> = (0..channels)
            .flat_map(|d| {
                let diff: Vec<f64> = (d * n..(d + 1) * n).map(|i| g[i] - u[i]).collect();
                prob.fft.forward_real(&diff)
            })
            .collect();
        let mut f_hat = vec![Complex64::new(0.0, 0.0); len];
        let mut b = vec![Complex64::new(0.0, 0.0); channels];
        for k in 0..n {
            let yc = prob.y_hat[k].conj();
            let mut xhb = Complex64::new(0.0, 0.0);
            let mut xx = 0.0;
            for d in 0..channels {
                let xd = prob.x_hat[d * n + k];
                b[d] = xd * yc + v_hat[d * n + k] * gamma;
                xhb += xd.conj() * b[d];
                xx += xd.norm_sqr();
            }
            let coef = xhb / (gamma + xx);
            for d in 0..channels {
                f_hat[d * n + k] = (b[d] - prob.x_hat[d * n + k] * coef) / gamma;
            }
        }
        let f: Vec<f64> = (0..channels).flat_map(|d| prob.fft.inverse_real(&f_hat[d * n..(d + 1) * n])).collect();

        // Spatial-domain subproblem for the weight and temporal terms.
        for i in 0..len {
            let w2 = prob.w2[i % n];
            let target = gamma * (f[i] + u[i]);
            g[i] = match prob.prev {
                Some(p) => (prob.mu * p[i] + target) / (w2 + prob.mu + gamma),
                None => target / (w2 + gamma),
            };
        }
        for i in 0..len {
            u[i] += f[i] - g[i];
        }
        gamma = (gamma * params.penalty_step).min(params.penalty_max);

        let dir: Vec<f64> = g.iter().zip(&best).map(|(a, b)| a - b).collect();
        let t = prob.line_search(&best, &dir);
        let candidate: Vec<f64> = best.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
        let value = prob.objective(&candidate);
        let last = *objectives.last().expect("objectives start non-empty");
        if value <= last {
            best = candidate;
            objectives.push(value);
        } else {
            objectives.push(last);
        }
    }

    let filter = Filter::from_coeffs(x.grid_w(), x.grid_h(), channels, best)?;
    Ok(SolverTrace { filter, objectives })
}

/// Objective value of `filter`, computed through the spectrum.
pub fn objective_value(
    filter: &Filter,
    x: &FeatureMap,
    y: &RegressionLabel,
    prev: Option<&Filter>,
    w: &SpatialWeight,
    mu: f64,
) -> Result<f64> {
    check_dims(x, y, prev, w, mu)?;
    if !filter.matches(x) {
        return Err(invalid("filter does not match feature dims"));
    }
    Ok(Problem::new(x, y, prev, w, mu).objective(&filter.coeffs))
}

/// Data term `½‖Σ_d x^d ⋆ f^d − y‖²` evaluated per frequency (Parseval).
pub fn data_term_spectral(filter: &Filter, x: &FeatureMap, y: &RegressionLabel) -> Result<f64> {
    if !filter.matches(x) || x.grid_w() != y.grid_w || x.grid_h() != y.grid_h {
        return Err(invalid("dims differ"));
    }
    let fft = Fft2::new(x.grid_w(), x.grid_h());
    let n = x.cells();
    let y_hat = fft.forward_real(&y.at_origin());
    let mut r = vec![Complex64::new(0.0, 0.0); n];
    for d in 0..x.channels() {
        let xh = fft.forward_real(x.channel(d));
        for k in 0..n {
            r[k] += filter.spectrum[d * n + k].conj() * xh[k];
        }
    }
    Ok(0.5 * r.iter().zip(&y_hat).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / n as f64)
}

/// Outcome of correlating a filter against search features.
#[derive(Debug, Clone)]
pub struct Localization {
    /// Peak displacement from the grid center, in cells.
    pub offset: (isize, isize),
    /// Peak displacement refined by a parabola through the neighbors.
    pub subcell: (f64, f64),
    /// Maximum response value.
    pub score: f64,
    pub response: ScalarMap,
}

/// Correlation response of `filter` over `search` and its peak.
pub fn correlate_locate(filter: &Filter, search: &FeatureMap) -> Result<Localization> {
    if !filter.matches(search) {
        return Err(invalid(format!(
            "filter {}x{}x{} vs features {}x{}x{}",
            filter.grid_w,
            filter.grid_h,
            filter.channels,
            search.grid_w(),
            search.grid_h(),
            search.channels()
        )));
    }
    let (gw, gh) = (filter.grid_w, filter.grid_h);
    let fft = Fft2::new(gw, gh);
    let n = gw * gh;
    let mut acc = vec![Complex64::new(0.0, 0.0); n];
    for d in 0..filter.channels {
        let xh = fft.forward_real(search.channel(d));
        for k in 0..n {
            acc[k] += filter.spectrum[d * n + k].conj() * xh[k];
        }
    }
    let (cx, cy) = grid_center(gw, gh);
    let values = roll(&fft.inverse_real(&acc), gw, gh, cx, cy);
    let (mut best, mut score) = (0usize, f64::NEG_INFINITY);
    for (i, &v) in values.iter().enumerate() {
        if v > score {
            score = v;
            best = i;
        }
    }
    let (px, py) = (best % gw, best / gw);
    let offset = (px as isize - cx as isize, py as isize - cy as isize);
    let at = |x: isize, y: isize| values[y.rem_euclid(gh as isize) as usize * gw + x.rem_euclid(gw as isize) as usize];
    let refine = |l: f64, c: f64, r: f64| {
        let denom = l - 2.0 * c + r;
        if denom < 0.0 {
            (0.5 * (l - r) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        }
    };
    let (pxi, pyi) = (px as isize, py as isize);
    let sx = if gw > 2 { refine(at(pxi - 1, pyi), score, at(pxi + 1, pyi)) } else { 0.0 };
    let sy = if gh > 2 { refine(at(pxi, pyi - 1), score, at(pxi, pyi + 1)) } else { 0.0 };
    let response = ScalarMap::new(gw, gh, values)?;
    Ok(Localization {
        offset,
        subcell: (offset.0 as f64 + sx, offset.1 as f64 + sy),
        score: if score.is_finite() { score } else { 0.0 },
        response,
    })
}

/// Hyper-parameters of the correlation-filter baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct DcfParams {
    pub cell_size: usize,
    /// Search window area as a multiple of the target area.
    pub search_area_scale: f64,
    /// Bounds on the resampled search-window side, in pixels.
    pub min_model_side: usize,
    pub max_model_side: usize,
    pub mu: f64,
    pub solver: SolverParams,
    pub scale_count: usize,
    pub scale_step: f64,
    pub scale_damping: f64,
    /// Label sigma as a fraction of the target extent in cells.
    pub label_sigma_factor: f64,
}

impl Default for DcfParams {
    fn default() -> Self {
        Self {
            cell_size: 4,
            search_area_scale: 5.0,
            min_model_side: 64,
            max_model_side: 160,
            mu: 15.0,
            solver: SolverParams::default(),
            scale_count: 5,
            scale_step: 1.02,
            scale_damping: 0.98,
            label_sigma_factor: 1.0 / 16.0,
        }
    }
}

/// Factor giving `x` a mean energy per cell equal to the cell count, so the
/// solver penalties and the appearance score do not depend on image
/// contrast or grid size.
fn energy_scale(x: &FeatureMap) -> f64 {
    let energy: f64 = x.as_slice().iter().map(|v| v * v).sum::<f64>() / x.cells() as f64;
    if energy > 0.0 {
        (x.cells() as f64 / energy).sqrt()
    } else {
        1.0
    }
}

/// Solver iterations for the first filter, which has no warm start.
const INIT_ITERATIONS: usize = 50;

/// Result of a multi-scale detection.
#[derive(Debug, Clone)]
pub struct Detection {
    pub center: (f64, f64),
    pub scale: f64,
    pub score: f64,
    pub offset: (isize, isize),
}

/// Correlation-filter tracker state for one target: geometry, label, weight
/// and the current filter.
#[derive(Debug, Clone)]
pub struct CorrelationTracker {
    params: DcfParams,
    palette: Palette,
    base_size: (f64, f64),
    base_window: f64,
    model_side: usize,
    label: RegressionLabel,
    weight: SpatialWeight,
    window: Vec<f64>,
    /// Self-match peak of the first filter; detection scores are relative
    /// to it.
    score_ref: f64,
    /// Feature scale fixed on the first frame.
    feature_scale: f64,
    filter: Filter,
}

impl CorrelationTracker {
    /// Learns the initial filter (no temporal term) at `bbox`.
    pub fn new(frame: &Frame, bbox: &BoundingBox, palette: Palette, params: DcfParams) -> Result<Self> {
        if !bbox.is_valid() {
            return Err(invalid(format!("degenerate target box {bbox:?}")));
        }
        let cell = params.cell_size;
        let base_window = (params.search_area_scale * bbox.w * bbox.h).sqrt().max(1.25 * bbox.w.max(bbox.h));
        let side = base_window.clamp(params.min_model_side as f64, params.max_model_side as f64);
        let model_side = ((side / cell as f64).round() as usize).max(2) * cell;
        let grid = model_side / cell;
        let px_to_cell = model_side as f64 / base_window / cell as f64;
        let (tw, th) = (bbox.w * px_to_cell, bbox.h * px_to_cell);
        let sigma = ((tw * th).sqrt() * params.label_sigma_factor).max(0.5);
        let label = make_label(grid, grid, sigma)?;
        let weight = SpatialWeight::quadratic_bowl(grid, grid, tw, th)?;
        let window = cosine_window(grid, grid);
        let channels = crate::features::HOG_BINS + palette.len();
        let mut tracker = Self {
            params,
            palette,
            base_size: (bbox.w, bbox.h),
            base_window,
            model_side,
            label,
            weight,
            window,
            score_ref: 1.0,
            feature_scale: 1.0,
            filter: Filter::zeros(grid, grid, channels),
        };
        let raw = tracker.features_at(frame, bbox.center(), 1.0)?;
        tracker.feature_scale = energy_scale(&raw);
        let x = tracker.features_at(frame, bbox.center(), 1.0)?;
        let solver = SolverParams { iterations: tracker.params.solver.iterations.max(INIT_ITERATIONS), ..tracker.params.solver };
        tracker.filter = learn_filter(&x, &tracker.label, None, &tracker.weight, tracker.params.mu, &solver)?;
        let peak = correlate_locate(&tracker.filter, &x)?.score;
        if peak > 0.0 {
            tracker.score_ref = peak;
        }
        Ok(tracker)
    }

    pub fn filter(&self) -> &Filter {
        &self.filter
    }

    pub fn palette(&self) -> &Palette {
        &self.palette
    }

    pub fn params(&self) -> &DcfParams {
        &self.params
    }

    pub fn label(&self) -> &RegressionLabel {
        &self.label
    }

    pub fn base_size(&self) -> (f64, f64) {
        self.base_size
    }

    /// Size ratio of `size` relative to the initial target, by area.
    fn size_ratio(&self, size: (f64, f64)) -> f64 {
        (size.0 * size.1 / (self.base_size.0 * self.base_size.1)).sqrt()
    }

    /// Windowed features of the search window at `center`, `ratio` times the
    /// initial window size.
    pub fn features_at(&self, frame: &Frame, center: (f64, f64), ratio: f64) -> Result<FeatureMap> {
        let side = self.base_window * ratio;
        let region = BoundingBox::from_center(center.0, center.1, side, side);
        let patch = crop_patch(frame, &region, self.model_side, self.model_side)?;
        let mut x = extract_features(&patch, self.params.cell_size, &self.palette)?;
        // Zero-mean channels keep constant color regions from dominating.
        for d in 0..x.channels() {
            let c = x.channel_mut(d);
            let mean = c.iter().sum::<f64>() / c.len() as f64;
            c.iter_mut().for_each(|v| *v -= mean);
        }
        x.apply_window(&self.window);
        let s = self.feature_scale;
        for d in 0..x.channels() {
            for v in x.channel_mut(d) {
                *v *= s;
            }
        }
        Ok(x)
    }

    /// Frame pixels per feature cell at `ratio`.
    fn cell_pixels(&self, ratio: f64) -> f64 {
        self.base_window * ratio / (self.model_side / self.params.cell_size) as f64
    }

    fn scales(&self) -> Vec<f64> {
        let n = self.params.scale_count.max(1);
        let mid = (n - 1) as f64 / 2.0;
        let mut idx: Vec<usize> = (0..n).collect();
        // Nearest-to-unit scales first so ties keep the smaller change.
        idx.sort_by(|a, b| {
            let da = (*a as f64 - mid).abs();
            let db = (*b as f64 - mid).abs();
            da.partial_cmp(&db).unwrap().then(a.cmp(b))
        });
        idx.into_iter().map(|i| self.params.scale_step.powf(i as f64 - mid)).collect()
    }

    /// Multi-scale search around `center` for a target currently of `size`.
    pub fn detect(&self, frame: &Frame, center: (f64, f64), size: (f64, f64)) -> Result<Detection> {
        let ratio = self.size_ratio(size);
        let mut best: Option<(Detection, f64)> = None;
        for scale in self.scales() {
            let x = self.features_at(frame, center, ratio * scale)?;
            let mut loc = correlate_locate(&self.filter, &x)?;
            loc.score /= self.score_ref;
            let damped = if (scale - 1.0).abs() < 1e-12 { loc.score } else { loc.score * self.params.scale_damping };
            if best.as_ref().is_none_or(|(_, s)| damped > *s) {
                let cp = self.cell_pixels(ratio * scale);
                let det = Detection {
                    center: (center.0 + loc.subcell.0 * cp, center.1 + loc.subcell.1 * cp),
                    scale,
                    score: loc.score,
                    offset: loc.offset,
                };
                best = Some((det, damped));
            }
        }
        best.map(|(d, _)| d).ok_or_else(|| invalid("empty scale pyramid"))
    }

    /// Scale with the largest damped score at `center`.
    pub fn estimate_scale(&self, frame: &Frame, center: (f64, f64), size: (f64, f64)) -> Result<f64> {
        self.detect(frame, center, size).map(|d| d.scale)
    }

    /// Re-learns the filter at `bbox`, warm-started from `prev` or from the
    /// current filter.
    pub fn update(&mut self, frame: &Frame, bbox: &BoundingBox, prev: Option<&Filter>) -> Result<()> {
        let x = self.features_at(frame, bbox.center(), self.size_ratio((bbox.w, bbox.h)))?;
        let start = prev.unwrap_or(&self.filter).clone();
        self.filter = learn_filter(&x, &self.label, Some(&start), &self.weight, self.params.mu, &self.params.solver)?;
        Ok(())
    }
}
