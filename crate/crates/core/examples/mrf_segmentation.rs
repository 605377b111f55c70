//! Samples saliency-weighted seeds and segments a patch with the two-label
//! MRF, printing the mask and the energy after each sweep.

use longtrack::features::quantize_colors;
use longtrack::shape::{build_palette, sample_seeds, segment_mrf_traced, MrfParams};
use longtrack::{BoundingBox, Frame};

fn main() -> longtrack::Result<()> {
    let object = BoundingBox::new(10.0, 8.0, 14.0, 16.0);
    let patch = Frame::from_fn(32, 32, |x, y| {
        let noise = ((x * 7 + y * 13) % 11) as f32 * 3.0;
        if object.contains_point(x as f64 + 0.5, y as f64 + 0.5) {
            [220.0 - noise, 40.0 + noise, 40.0]
        } else {
            [40.0 + noise, 80.0, 200.0 - noise]
        }
    });
    let bbox = BoundingBox::new(8.0, 6.0, 18.0, 20.0);
    let model = build_palette(&patch, &bbox)?;
    let keys = quantize_colors(&patch, model.palette())?;
    let seeds = sample_seeds(&model, &keys, &bbox, 20, 30, 7)?;
    println!("{} foreground and {} background seeds", seeds.fg.len(), seeds.bg.len());

    let (mask, energies) = segment_mrf_traced(&patch, &seeds, &MrfParams::default())?;
    println!("energy per sweep: {energies:.1?}");
    for y in 0..mask.height() {
        let row: String = (0..mask.width()).map(|x| if mask.get(x, y) == 1 { '#' } else { '.' }).collect();
        println!("{row}");
    }
    println!("box {:?}, IoU with the object {:.3}", mask.bounding_box(), mask.bounding_box().map_or(0.0, |b| b.iou(&object)));
    Ok(())
}
