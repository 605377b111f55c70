//! Learns a correlation filter on one frame and locates the target after it
//! moves, printing the solver objective per iteration.

use longtrack::dcf::{learn_filter_traced, make_label, CorrelationTracker, DcfParams, SolverParams, SpatialWeight};
use longtrack::features::Palette;
use longtrack::{BoundingBox, Frame};

fn scene(ox: f64, oy: f64) -> Frame {
    Frame::from_fn(200, 150, |x, y| {
        let (fx, fy) = (x as f64, y as f64);
        if (fx - ox).abs() < 14.0 && (fy - oy).abs() < 10.0 {
            [220.0, 60.0, 40.0]
        } else {
            let v = 110.0 + 50.0 * ((fx * 0.21).sin() * (fy * 0.17).cos()) as f32;
            [v * 0.7, v, v * 0.9]
        }
    })
}

fn main() -> longtrack::Result<()> {
    let bbox = BoundingBox::from_center(90.0, 70.0, 28.0, 20.0);
    let tracker = CorrelationTracker::new(&scene(90.0, 70.0), &bbox, Palette::color_names(), DcfParams::default())?;

    let moved = scene(95.0, 67.0);
    let det = tracker.detect(&moved, bbox.center(), (bbox.w, bbox.h))?;
    println!("true center (95.0, 67.0), detected ({:.1}, {:.1}), score {:.3}", det.center.0, det.center.1, det.score);

    // Solver trace on the features of the first frame.
    let x = tracker.features_at(&scene(90.0, 70.0), bbox.center(), 1.0)?;
    let (gw, gh) = (x.grid_w(), x.grid_h());
    let label = make_label(gw, gh, 1.0)?;
    let weight = SpatialWeight::quadratic_bowl(gw, gh, gw as f64 / 3.0, gh as f64 / 3.0)?;
    let params = SolverParams { iterations: 8, ..SolverParams::default() };
    let trace = learn_filter_traced(&x, &label, None, &weight, 0.0, &params)?;
    for (i, obj) in trace.objectives.iter().enumerate() {
        println!("iteration {i}: objective {obj:.4}");
    }
    Ok(())
}
