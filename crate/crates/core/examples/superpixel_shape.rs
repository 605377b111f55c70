//! Superpixel fallback: segments a patch into superpixels, derives
//! candidate boxes from overlap and motion residual, and fuses them with
//! the two location proposals.

use longtrack::shape::{apply_shape, felzenszwalb, fuse_shape, superpixel_candidates, SuperpixelParams};
use longtrack::{BoundingBox, Frame, ScalarMap};

fn main() -> longtrack::Result<()> {
    let object = BoundingBox::new(14.0, 12.0, 16.0, 20.0);
    let inside = |x: usize, y: usize| object.contains_point(x as f64 + 0.5, y as f64 + 0.5);
    let patch = Frame::from_fn(48, 48, |x, y| {
        if inside(x, y) {
            [200.0, 180.0, 40.0]
        } else if (x / 12 + y / 12) % 2 == 0 {
            [40.0, 90.0, 60.0]
        } else {
            [60.0, 70.0, 120.0]
        }
    });
    let residual = ScalarMap::from_fn(48, 48, |x, y| if inside(x, y) { 1.0 } else { 0.05 });
    let params = SuperpixelParams::default();

    let sp = felzenszwalb(&patch, &params)?;
    println!("{} superpixels, sizes {:?}", sp.count(), sp.sizes());

    let base = BoundingBox::new(13.0, 11.0, 19.0, 22.0);
    let motion = BoundingBox::new(15.0, 10.0, 16.0, 20.0);
    let candidates = superpixel_candidates(&patch, &residual, &base, &params)?;
    for c in &candidates {
        println!("candidate {c:?}");
    }
    let (best, objective) = fuse_shape(&candidates, &base, &motion)?;
    println!("fused {best:?} (IoU sum {objective:.3}); applied to the baseline box: {:?}", apply_shape(&base, &best));
    Ok(())
}
