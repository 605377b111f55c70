//! Builds an adaptive color palette for a box and prints each key's
//! saliency: positive keys belong to the object, negative to the background.

use longtrack::shape::{build_palette, color_saliency};
use longtrack::{BoundingBox, Frame};

fn main() -> longtrack::Result<()> {
    let bbox = BoundingBox::new(16.0, 12.0, 16.0, 24.0);
    let patch = Frame::from_fn(48, 48, |x, y| {
        if bbox.contains_point(x as f64 + 0.5, y as f64 + 0.5) {
            if y < 20 {
                [240.0, 200.0, 40.0]
            } else {
                [200.0, 30.0, 30.0]
            }
        } else if (x + y) % 7 < 3 {
            [40.0, 120.0, 60.0]
        } else {
            [60.0, 70.0, 140.0]
        }
    });
    let model = build_palette(&patch, &bbox)?;
    println!("salient: {}", model.is_salient());
    for (i, key) in model.palette().keys().iter().enumerate() {
        let rgb = key.map(|c| (c * 255.0).round());
        println!("key {i}: rgb {rgb:?} p_in {:.3} p_out {:.3} css {:+.4}", model.p_in().bins()[i], model.p_out().bins()[i], model.css()[i]);
    }
    // Same numbers straight from the saliency formula.
    let (css, z) = color_saliency(model.palette().keys(), model.p_in().bins(), model.p_out().bins())?;
    println!("normalizer {z:.4}, recomputed css {css:.4?}");
    Ok(())
}
