//! Benchmark plumbing: sequence I/O, synthetic sequences, DP/AUC scoring,
//! result files and the batch runner behind the command-line tool.

pub mod cli;
mod metrics;
mod results;
mod run;
mod sequence;
mod synth;

pub use metrics::{evaluate, MetricReport, DP_THRESHOLD, PRECISION_THRESHOLDS, SUCCESS_STEP};
pub use results::{read_boxes, write_curves, write_results, write_summary, RESULTS_HEADER};
pub use run::{run_bench, run_sequence, RunResult, SummaryRow};
pub use sequence::{load_frame, load_sequence, parse_groundtruth, save_frame, write_sequence, FrameSource, Sequence};
pub use synth::{synth_sequence, ObjectSpec, SynthSpec};
