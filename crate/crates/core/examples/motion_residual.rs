//! Estimates camera motion between two frames, builds the motion residual
//! map and boxes the region with the most residual.

use longtrack::imaging::max_sum_window;
use longtrack::motion::{estimate_global_motion, motion_proposal, residual_map, MotionParams, SizeMode};
use longtrack::{BoundingBox, Frame};

fn lattice(i: i64, j: i64) -> f64 {
    let mut h = (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (j as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    h ^= h >> 29;
    h = h.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    (h >> 40) as f64 / (1u64 << 24) as f64
}

/// Bilinear value noise on a 6 px lattice.
fn texture(x: f64, y: f64) -> [f32; 3] {
    let (u, v) = (x / 6.0, y / 6.0);
    let (i, j) = (u.floor() as i64, v.floor() as i64);
    let (tx, ty) = (u - i as f64, v - j as f64);
    let top = lattice(i, j) * (1.0 - tx) + lattice(i + 1, j) * tx;
    let bot = lattice(i, j + 1) * (1.0 - tx) + lattice(i + 1, j + 1) * tx;
    let n = (top * (1.0 - ty) + bot * ty) as f32;
    [60.0 + 140.0 * n, 80.0 + 100.0 * n, 150.0 - 90.0 * n]
}

fn frame(pan: (f64, f64), obj: (f64, f64)) -> Frame {
    Frame::from_fn(160, 120, |x, y| {
        let (fx, fy) = (x as f64, y as f64);
        if (fx - obj.0).abs() < 8.0 && (fy - obj.1).abs() < 8.0 {
            [250.0, 250.0, 30.0]
        } else {
            texture(fx + pan.0, fy + pan.1)
        }
    })
}

fn main() -> longtrack::Result<()> {
    let prev = frame((0.0, 0.0), (60.0, 60.0));
    let curr = frame((3.0, 2.0), (66.0, 63.0));
    let last_box = BoundingBox::from_center(60.0, 60.0, 16.0, 16.0);

    let model = estimate_global_motion(&prev, &curr, &last_box, &MotionParams::default())?;
    println!("background motion {:?} (camera pan shifts content by (-3, -2))", model.kind);

    let residual = residual_map(&prev, &curr, &model)?;
    let (best, mass) = max_sum_window(&residual, 16, 16)?;
    println!("max-residual 16x16 window {best:?} holding {mass:.0}");
    let clipped = motion_proposal(&residual, (16.0, 16.0), SizeMode::IntegralClip { coverage: SizeMode::DEFAULT_COVERAGE })?;
    println!("integral-clipped proposal {clipped:?}");
    Ok(())
}
