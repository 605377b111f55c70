use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::metrics::{evaluate, MetricReport};
use super::sequence::{load_sequence, Sequence};
use crate::error::{invalid, Result};
use crate::imaging::BoundingBox;
use crate::tracker::{Ablation, Tracker, TrackerConfig};

/// Tracker output for one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub name: String,
    /// One box per frame; the first is the initialization box.
    pub boxes: Vec<BoundingBox>,
    /// Correlation score per frame; 1 on the first frame.
    pub scores: Vec<f64>,
    /// Wall time spent tracking, excluding the first frame.
    pub seconds: f64,
}

impl RunResult {
    pub fn fps(&self) -> f64 {
        let n = self.boxes.len().saturating_sub(1) as f64;
        if self.seconds > 0.0 {
            n / self.seconds
        } else {
            0.0
        }
    }
}

/// One line of the benchmark summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub sequence: String,
    pub dp: f64,
    pub auc: f64,
    pub fps: f64,
}

impl SummaryRow {
    pub fn new(run: &RunResult, report: &MetricReport) -> Self {
        Self { sequence: run.name.clone(), dp: report.dp, auc: report.auc, fps: run.fps() }
    }
}

/// Tracks a sequence from its first groundtruth box.
pub fn run_sequence(seq: &Sequence, config: &TrackerConfig, ablation: Ablation) -> Result<RunResult> {
    let init = *seq.groundtruth.first().ok_or_else(|| invalid("sequence has no groundtruth"))?;
    let mut tracker = Tracker::new(&seq.frame(0)?, &init, config.clone(), ablation)?;
    let mut boxes = vec![init];
    let mut scores = vec![1.0];
    let mut seconds = 0.0;
    for i in 1..seq.len() {
        let frame = seq.frame(i)?;
        let start = Instant::now();
        boxes.push(tracker.track(&frame)?);
        seconds += start.elapsed().as_secs_f64();
        scores.push(tracker.last_report().score);
    }
    Ok(RunResult { name: seq.name.clone(), boxes, scores, seconds })
}

/// Loads, tracks and scores every sequence directory on a pool of `jobs`
/// threads. Results keep the input order.
pub fn run_bench(dirs: &[PathBuf], config: &TrackerConfig, ablation: Ablation, jobs: usize) -> Result<Vec<(RunResult, MetricReport)>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().map_err(|e| invalid(format!("thread pool: {e}")))?;
    pool.install(|| {
        dirs.par_iter()
            .map(|dir| {
                let seq = load_sequence(dir)?;
                let run = run_sequence(&seq, config, ablation)?;
                let report = evaluate(&run.boxes, &seq.groundtruth)?;
                Ok((run, report))
            })
            .collect()
    })
}
