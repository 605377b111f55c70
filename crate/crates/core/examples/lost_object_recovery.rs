//! An object vanishes and reappears far away. The baseline-only tracker
//! stays behind; the full tracker follows it.

use longtrack::bench::{synth_sequence, SynthSpec};
use longtrack::{Ablation, Tracker, TrackerConfig};

fn main() -> longtrack::Result<()> {
    let spec = SynthSpec::occlusion_recovery();
    let seq = synth_sequence(&spec)?;
    let [start, end] = spec.occlusion.expect("preset has an occlusion");
    for ablation in [Ablation::Baseline, Ablation::Full] {
        let mut tracker = Tracker::new(&seq.frame(0)?, &seq.groundtruth[0], TrackerConfig::default(), ablation)?;
        println!("{ablation:?}: hidden in frames {start}..{end}");
        for i in 1..seq.len() {
            let b = tracker.track(&seq.frame(i)?)?;
            if i + 2 >= start && i < end + 6 {
                let r = tracker.last_report();
                let g = seq.groundtruth[i];
                let err = if g.is_valid() {
                    let (p, q) = (b.center(), g.center());
                    format!("{:.1}px", ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt())
                } else {
                    "hidden".to_string()
                };
                println!("  frame {i:2}: score {:.2} recovering {:5} chosen {:?} error {err}", r.score, r.recovered, r.chosen);
            }
        }
    }
    Ok(())
}
