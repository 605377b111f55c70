//! Tracks the built-in synthetic sequences with every ablation and prints
//! DP, AUC and mean IoU.

use longtrack::bench::{evaluate, run_sequence, synth_sequence, SynthSpec};
use longtrack::{Ablation, TrackerConfig};

fn main() -> longtrack::Result<()> {
    let specs = [SynthSpec::camera_pan(), SynthSpec::occlusion_recovery(), SynthSpec::deformation()];
    let config = TrackerConfig::default();
    for spec in &specs {
        let seq = synth_sequence(spec)?;
        for ablation in [Ablation::Baseline, Ablation::Motion, Ablation::Shape, Ablation::Full] {
            let run = run_sequence(&seq, &config, ablation)?;
            let report = evaluate(&run.boxes, &seq.groundtruth)?;
            let ious: Vec<f64> = run.boxes.iter().zip(&seq.groundtruth).filter(|(_, g)| g.is_valid()).map(|(b, g)| b.iou(g)).collect();
            let mean_iou = ious.iter().sum::<f64>() / ious.len() as f64;
            println!(
                "{:<20} {:<9} dp {:.3} auc {:.3} mean iou {:.3} fps {:.0}",
                seq.name,
                format!("{ablation:?}").to_lowercase(),
                report.dp,
                report.auc,
                mean_iou,
                run.fps()
            );
            if std::env::var_os("VERBOSE").is_some() {
                for (i, (b, g)) in run.boxes.iter().zip(&seq.groundtruth).enumerate() {
                    let (c, d) = (b.center(), g.center());
                    println!(
                        "  {i:3} score {:.3} box ({:.1},{:.1},{:.1},{:.1}) gt ({:.1},{:.1},{:.1},{:.1})",
                        run.scores[i], c.0, c.1, b.w, b.h, d.0, d.1, g.w, g.h
                    );
                }
            }
        }
    }
    Ok(())
}
