use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use super::sequence::{FrameSource, Sequence};
use crate::error::{invalid, Result};
use crate::imaging::{BoundingBox, Frame};

/// Lattice spacings of the background texture octaves, in pixels.
const OCTAVES: [f64; 2] = [24.0, 7.0];

/// Surface pattern of the synthetic object.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    #[default]
    Solid,
    Stripes,
    Checker,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub w: f64,
    pub h: f64,
    pub color: [f32; 3],
    #[serde(default)]
    pub pattern: Pattern,
}

/// Description of a synthetic sequence. Positions are object centers in
/// world coordinates; the camera moves by `pan` every frame, so image
/// coordinates are world coordinates minus `pan * t`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    #[serde(default = "default_name")]
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    #[serde(default)]
    pub seed: u64,
    pub object: ObjectSpec,
    /// `[frame, x, y]` keyframes, linearly interpolated and held constant
    /// outside their range.
    pub path: Vec<[f64; 3]>,
    #[serde(default)]
    pub pan: [f64; 2],
    /// Half-open frame interval during which the object is hidden.
    #[serde(default)]
    pub occlusion: Option<[usize; 2]>,
    /// Color of an occluding box drawn over the object while hidden. Without
    /// it the object simply is not rendered.
    #[serde(default)]
    pub occluder_color: Option<[f32; 3]>,
    /// Object size factor reached on the last frame, ramped linearly from 1.
    #[serde(default = "one")]
    pub scale_end: f64,
}

fn default_name() -> String {
    "synthetic".to_string()
}

fn one() -> f64 {
    1.0
}

impl SynthSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| invalid(format!("synth spec: {e}")))
    }

    /// 100-frame camera pan over a textured background with a red object
    /// drifting against the pan.
    pub fn camera_pan() -> Self {
        Self {
            name: "camera_pan".into(),
            width: 256,
            height: 192,
            frames: 100,
            seed: 11,
            object: ObjectSpec { w: 28.0, h: 24.0, color: [230.0, 40.0, 40.0], pattern: Pattern::Solid },
            path: vec![[0.0, 90.0, 96.0], [99.0, 270.0, 136.0]],
            pan: [1.2, 0.5],
            occlusion: None,
            occluder_color: None,
            scale_end: 1.0,
        }
    }

    /// Object hidden for frames 20..30 that re-emerges about 110 px away.
    pub fn occlusion_recovery() -> Self {
        Self {
            name: "occlusion_recovery".into(),
            width: 256,
            height: 192,
            frames: 60,
            seed: 12,
            object: ObjectSpec { w: 24.0, h: 24.0, color: [40.0, 210.0, 60.0], pattern: Pattern::Solid },
            path: vec![[0.0, 70.0, 90.0], [19.0, 80.0, 95.0], [30.0, 190.0, 130.0], [59.0, 210.0, 140.0]],
            pan: [0.0, 0.0],
            occlusion: Some([20, 30]),
            occluder_color: None,
            scale_end: 1.0,
        }
    }

    /// Object whose size ramps from 1.0 to 1.6 times its initial size.
    pub fn deformation() -> Self {
        Self {
            name: "deformation".into(),
            width: 256,
            height: 192,
            frames: 80,
            seed: 13,
            object: ObjectSpec { w: 24.0, h: 20.0, color: [60.0, 80.0, 230.0], pattern: Pattern::Stripes },
            path: vec![[0.0, 100.0, 90.0], [79.0, 150.0, 110.0]],
            pan: [0.0, 0.0],
            occlusion: None,
            occluder_color: None,
            scale_end: 1.6,
        }
    }

    fn position(&self, t: usize) -> (f64, f64) {
        let t = t as f64;
        let first = self.path[0];
        if t <= first[0] {
            return (first[1], first[2]);
        }
        for pair in self.path.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if t <= b[0] {
                let s = if b[0] > a[0] { (t - a[0]) / (b[0] - a[0]) } else { 1.0 };
                return (a[1] + s * (b[1] - a[1]), a[2] + s * (b[2] - a[2]));
            }
        }
        let last = self.path[self.path.len() - 1];
        (last[1], last[2])
    }

    fn scale(&self, t: usize) -> f64 {
        if self.frames < 2 {
            return 1.0;
        }
        1.0 + (self.scale_end - 1.0) * t as f64 / (self.frames - 1) as f64
    }

    fn hidden(&self, t: usize) -> bool {
        self.occlusion.is_some_and(|[a, b]| (a..b).contains(&t))
    }

    /// Object box in image coordinates at frame `t`, regardless of occlusion.
    pub fn object_box(&self, t: usize) -> BoundingBox {
        let (x, y) = self.position(t);
        let s = self.scale(t);
        BoundingBox::from_center(x - self.pan[0] * t as f64, y - self.pan[1] * t as f64, self.object.w * s, self.object.h * s)
    }

    fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.frames == 0 {
            return Err(invalid("canvas and frame count must be non-zero"));
        }
        if self.path.is_empty() {
            return Err(invalid("path needs at least one keyframe"));
        }
        if self.path.windows(2).any(|p| p[1][0] < p[0][0]) {
            return Err(invalid("path keyframes must be in frame order"));
        }
        if !(self.scale_end > 0.0) {
            return Err(invalid("scale_end must be positive"));
        }
        let max_scale = self.scale_end.max(1.0);
        let (ow, oh) = (self.object.w * max_scale, self.object.h * max_scale);
        if !(self.object.w > 0.0 && self.object.h > 0.0) || ow > self.width as f64 || oh > self.height as f64 {
            return Err(invalid("object must be non-empty and no larger than the canvas"));
        }
        Ok(())
    }
}

/// Value-noise texture on a finite world-coordinate lattice.
struct Texture {
    x0: f64,
    y0: f64,
    layers: Vec<(f64, usize, Vec<[f32; 3]>)>,
}

impl Texture {
    fn new(rng: &mut ChaCha8Rng, x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        let layers = OCTAVES
            .iter()
            .map(|&step| {
                let nx = ((x1 - x0) / step).ceil() as usize + 2;
                let ny = ((y1 - y0) / step).ceil() as usize + 2;
                let cells = (0..nx * ny).map(|_| [rng.gen::<f32>(), rng.gen::<f32>(), rng.gen::<f32>()]).collect();
                (step, nx, cells)
            })
            .collect();
        Self { x0, y0, layers }
    }

    fn at(&self, wx: f64, wy: f64) -> [f32; 3] {
        let mut out = [40.0f32; 3];
        for (li, (step, nx, cells)) in self.layers.iter().enumerate() {
            let gain = if li == 0 { 110.0 } else { 60.0 };
            let fx = (wx - self.x0) / step;
            let fy = (wy - self.y0) / step;
            let (ix, iy) = (fx.floor() as usize, fy.floor() as usize);
            let (tx, ty) = ((fx - ix as f64) as f32, (fy - iy as f64) as f32);
            let c = |x: usize, y: usize| cells[y * nx + x];
            let (a, b, cc, d) = (c(ix, iy), c(ix + 1, iy), c(ix, iy + 1), c(ix + 1, iy + 1));
            for k in 0..3 {
                let top = a[k] + (b[k] - a[k]) * tx;
                let bottom = cc[k] + (d[k] - cc[k]) * tx;
                out[k] += gain * (top + (bottom - top) * ty);
            }
        }
        out
    }
}

fn object_color(obj: &ObjectSpec, u: f64, v: f64) -> [f32; 3] {
    let dark = match obj.pattern {
        Pattern::Solid => false,
        Pattern::Stripes => (u / 4.0).floor() as i64 % 2 == 1,
        Pattern::Checker => ((u / 4.0).floor() as i64 + (v / 4.0).floor() as i64) % 2 == 1,
    };
    if dark {
        obj.color.map(|c| c * 0.6)
    } else {
        obj.color
    }
}

/// Renders a synthetic sequence. Groundtruth is the analytic object box;
/// frames where the object is hidden get a degenerate box.
pub fn synth_sequence(spec: &SynthSpec) -> Result<Sequence> {
    spec.validate()?;
    let (w, h) = (spec.width as f64, spec.height as f64);
    let last = (spec.frames - 1) as f64;
    let xs = [0.0, -spec.pan[0] * last];
    let ys = [0.0, -spec.pan[1] * last];
    let (min_dx, max_dx) = (xs[0].min(xs[1]), xs[0].max(xs[1]));
    let (min_dy, max_dy) = (ys[0].min(ys[1]), ys[0].max(ys[1]));
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let texture = Texture::new(&mut rng, -max_dx, -max_dy, w - min_dx, h - min_dy);

    let mut frames = Vec::with_capacity(spec.frames);
    let mut groundtruth = Vec::with_capacity(spec.frames);
    for t in 0..spec.frames {
        let (px, py) = (spec.pan[0] * t as f64, spec.pan[1] * t as f64);
        let obj = spec.object_box(t);
        let hidden = spec.hidden(t);
        let occluder = obj.scaled(1.3);
        let frame = Frame::from_fn(spec.width, spec.height, |x, y| {
            let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
            if hidden {
                if let Some(color) = spec.occluder_color.filter(|_| occluder.contains_point(cx, cy)) {
                    return color;
                }
            } else if obj.contains_point(cx, cy) {
                return object_color(&spec.object, cx - obj.x, cy - obj.y);
            }
            texture.at(cx + px, cy + py)
        });
        frames.push(frame);
        groundtruth.push(if hidden { BoundingBox::new(0.0, 0.0, 0.0, 0.0) } else { obj });
    }
    Ok(Sequence { name: spec.name.clone(), frames: FrameSource::Memory(frames), groundtruth, attributes: Vec::new() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SynthSpec {
        SynthSpec::from_json(
            r#"{"width": 64, "height": 48, "frames": 6, "seed": 7,
            "object": {"w": 10, "h": 8, "color": [250, 20, 20]}, "path": [[0, 32, 24]]}"#,
        )
        .unwrap()
    }

    fn is_object(f: &Frame, x: usize, y: usize) -> bool {
        f.get(x, y) == [250.0, 20.0, 20.0]
    }

    #[test]
    fn static_spec_has_identical_boxes() {
        let seq = synth_sequence(&spec()).unwrap();
        assert_eq!(seq.len(), 6);
        assert!(seq.groundtruth.iter().all(|b| *b == BoundingBox::new(27.0, 20.0, 10.0, 8.0)));
        assert_eq!(seq.frame(0).unwrap(), seq.frame(5).unwrap());
    }

    #[test]
    fn pan_shifts_centers() {
        let mut s = spec();
        s.pan = [3.0, 2.0];
        s.width = 96;
        let seq = synth_sequence(&s).unwrap();
        for t in 1..seq.len() {
            let (a, b) = (seq.groundtruth[t - 1].center(), seq.groundtruth[t].center());
            assert_eq!((b.0 - a.0, b.1 - a.1), (-3.0, -2.0));
        }
        // The background moves with the camera: pixel (x, y) at t+1 shows
        // what (x+3, y+2) showed at t.
        let (f0, f1) = (seq.frame(0).unwrap(), seq.frame(1).unwrap());
        assert_eq!(f1.get(2, 3), f0.get(5, 5));
    }

    #[test]
    fn occlusion_hides_object_exactly() {
        let mut s = spec();
        s.frames = 8;
        s.occlusion = Some([2, 5]);
        let seq = synth_sequence(&s).unwrap();
        for t in 0..8 {
            let f = seq.frame(t).unwrap();
            let visible = (0..48).any(|y| (0..64).any(|x| is_object(&f, x, y)));
            assert_eq!(visible, !(2..5).contains(&t), "frame {t}");
            assert_eq!(seq.groundtruth[t].is_valid(), visible);
        }
        s.occluder_color = Some([0.0, 0.0, 255.0]);
        let f = synth_sequence(&s).unwrap().frame(3).unwrap();
        assert_eq!(f.get(32, 24), [0.0, 0.0, 255.0]);
    }

    #[test]
    fn path_and_scale_interpolate() {
        let mut s = spec();
        s.path = vec![[0.0, 20.0, 20.0], [4.0, 40.0, 28.0]];
        s.scale_end = 1.5;
        s.frames = 5;
        assert_eq!(s.object_box(2).center(), (30.0, 24.0));
        assert_eq!(s.object_box(4).w, 15.0);
        assert_eq!(s.object_box(0).h, 8.0);
    }

    #[test]
    fn reproducible_and_seed_dependent() {
        let a = synth_sequence(&spec()).unwrap().frame(0).unwrap();
        let b = synth_sequence(&spec()).unwrap().frame(0).unwrap();
        assert_eq!(a, b);
        let mut s = spec();
        s.seed = 8;
        assert_ne!(synth_sequence(&s).unwrap().frame(0).unwrap(), a);
    }

    #[test]
    fn rejects_oversized_object_and_unknown_keys() {
        let mut s = spec();
        s.object.w = 65.0;
        assert!(synth_sequence(&s).is_err());
        let mut s = spec();
        s.scale_end = 7.0;
        assert!(synth_sequence(&s).is_err());
        assert!(SynthSpec::from_json(
            r#"{"width": 1, "height": 1, "frames": 1, "bogus": 1,
            "object": {"w": 1, "h": 1, "color": [0, 0, 0]}, "path": [[0, 0, 0]]}"#
        )
        .is_err());
    }
}
