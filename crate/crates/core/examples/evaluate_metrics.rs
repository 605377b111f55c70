//! Scores a prediction list against groundtruth and writes the results
//! file and curve CSV to a temporary directory.

use longtrack::bench::{evaluate, read_boxes, write_curves, write_results};
use longtrack::BoundingBox;

fn main() -> longtrack::Result<()> {
    let gt: Vec<BoundingBox> = (0..40).map(|i| BoundingBox::new(20.0 + i as f64, 30.0, 24.0, 18.0)).collect();
    // Accurate for 30 frames, then drifting away.
    let pred: Vec<BoundingBox> = gt
        .iter()
        .enumerate()
        .map(|(i, g)| if i < 30 { g.translated(1.5, -1.0) } else { g.translated(4.0 * (i - 29) as f64, 0.0) })
        .collect();
    let report = evaluate(&pred, &gt)?;
    println!("DP@20px {:.3}  AUC {:.3}  over {} frames", report.dp, report.auc, report.frames);
    for (t, v) in report.success.iter().step_by(4) {
        println!("  success({t:.2}) = {v:.3}");
    }

    let dir = std::env::temp_dir().join("longtrack_evaluate_example");
    std::fs::create_dir_all(&dir).map_err(|source| longtrack::Error::Io { path: dir.clone(), source })?;
    write_results(&dir.join("pred.txt"), &pred)?;
    write_curves(&dir.join("curves.csv"), &report)?;
    assert_eq!(read_boxes(&dir.join("pred.txt"))?.len(), pred.len());
    println!("wrote {}", dir.display());
    Ok(())
}
