use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::imaging::{BoundingBox, Frame};

const IMAGE_EXTENSIONS: [&str; 3] = ["jpg", "jpeg", "png"];

/// Where a sequence's frames come from.
#[derive(Debug, Clone)]
pub enum FrameSource {
    Files(Vec<PathBuf>),
    Memory(Vec<Frame>),
}

/// A video with per-frame groundtruth in 0-based pixel coordinates.
#[derive(Debug, Clone)]
pub struct Sequence {
    pub name: String,
    pub frames: FrameSource,
    /// One box per frame; degenerate boxes mark absent annotations.
    pub groundtruth: Vec<BoundingBox>,
    pub attributes: Vec<String>,
}

impl Sequence {
    pub fn len(&self) -> usize {
        match &self.frames {
            FrameSource::Files(p) => p.len(),
            FrameSource::Memory(f) => f.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Loads (or clones) frame `i`.
    pub fn frame(&self, i: usize) -> Result<Frame> {
        match &self.frames {
            FrameSource::Files(p) => load_frame(&p[i]),
            FrameSource::Memory(f) => Ok(f[i].clone()),
        }
    }
}

fn format_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Format { path: path.to_path_buf(), msg: msg.into() }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

pub fn load_frame(path: &Path) -> Result<Frame> {
    let img = image::open(path).map_err(|source| Error::Image { path: path.to_path_buf(), source })?.to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let pixels = img.pixels().map(|p| [p[0] as f32, p[1] as f32, p[2] as f32]).collect();
    Frame::new(w, h, pixels)
}

/// Writes a frame as an 8-bit image; the format follows the extension.
pub fn save_frame(frame: &Frame, path: &Path) -> Result<()> {
    let mut buf = image::RgbImage::new(frame.width() as u32, frame.height() as u32);
    for (dst, src) in buf.pixels_mut().zip(frame.pixels()) {
        *dst = image::Rgb(src.map(|v| v.round().clamp(0.0, 255.0) as u8));
    }
    buf.save(path).map_err(|source| Error::Image { path: path.to_path_buf(), source })
}

/// Parses comma-separated `x,y,w,h` lines with 1-based left/top and returns
/// 0-based boxes. Blank lines and lines starting with `#` are skipped.
pub fn parse_groundtruth(text: &str, path: &Path) -> Result<Vec<BoundingBox>> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals: Vec<f64> = line
            .split([',', '\t', ' '])
            .filter(|s| !s.is_empty())
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| format_err(path, format!("line {}: {e}", no + 1)))?;
        if vals.len() != 4 {
            return Err(format_err(path, format!("line {}: expected 4 values, found {}", no + 1, vals.len())));
        }
        out.push(BoundingBox::new(vals[0] - 1.0, vals[1] - 1.0, vals[2], vals[3]));
    }
    Ok(out)
}

fn numeric_stem(path: &Path) -> Option<u64> {
    path.file_stem()?.to_str()?.parse().ok()
}

/// Loads a sequence directory with an `img/` folder of numbered frames and
/// a `groundtruth.txt`.
pub fn load_sequence(dir: &Path) -> Result<Sequence> {
    let img_dir = dir.join("img");
    let entries = fs::read_dir(&img_dir).map_err(|_| format_err(&img_dir, "missing img directory"))?;
    let mut frames: Vec<(u64, PathBuf)> = Vec::new();
    for entry in entries {
        let path = entry.map_err(io_err(&img_dir))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase());
        if !ext.is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.as_str())) {
            continue;
        }
        let n = numeric_stem(&path).ok_or_else(|| format_err(&path, "frame file name is not a number"))?;
        frames.push((n, path));
    }
    if frames.is_empty() {
        return Err(format_err(&img_dir, "no frames"));
    }
    frames.sort();

    let gt_path = dir.join("groundtruth.txt");
    let text = fs::read_to_string(&gt_path).map_err(|_| format_err(&gt_path, "missing groundtruth"))?;
    let mut groundtruth = parse_groundtruth(&text, &gt_path)?;
    if groundtruth.first().is_none_or(|b| !b.is_valid()) {
        return Err(format_err(&gt_path, "first groundtruth box must be valid"));
    }
    if groundtruth.len() > frames.len() {
        return Err(format_err(&gt_path, format!("{} boxes for {} frames", groundtruth.len(), frames.len())));
    }
    groundtruth.resize(frames.len(), BoundingBox::new(0.0, 0.0, 0.0, 0.0));

    let attributes = match fs::read_to_string(dir.join("attributes.txt")) {
        Ok(t) => t.split([',', '\n']).map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect(),
        Err(_) => Vec::new(),
    };
    let name = dir.file_name().and_then(|n| n.to_str()).unwrap_or("sequence").to_string();
    Ok(Sequence { name, frames: FrameSource::Files(frames.into_iter().map(|f| f.1).collect()), groundtruth, attributes })
}

/// Writes a sequence in the layout [`load_sequence`] reads: PNG frames in
/// `img/` and 1-based groundtruth.
pub fn write_sequence(seq: &Sequence, dir: &Path) -> Result<()> {
    let img_dir = dir.join("img");
    fs::create_dir_all(&img_dir).map_err(io_err(&img_dir))?;
    for i in 0..seq.len() {
        save_frame(&seq.frame(i)?, &img_dir.join(format!("{:08}.png", i + 1)))?;
    }
    let gt_path = dir.join("groundtruth.txt");
    let text: String = seq
        .groundtruth
        .iter()
        .map(|b| format!("{},{},{},{}\n", fmt_num(b.x + 1.0), fmt_num(b.y + 1.0), fmt_num(b.w), fmt_num(b.h)))
        .collect();
    fs::write(&gt_path, text).map_err(io_err(&gt_path))
}

/// Shortest text for a coordinate at 4-decimal precision.
pub(crate) fn fmt_num(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}
