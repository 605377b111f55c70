//! Command-line front end: `track`, `eval`, `synth` and `bench`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use super::metrics::evaluate;
use super::results::{read_boxes, write_curves, write_results, write_summary};
use super::run::{run_bench, run_sequence, SummaryRow};
use super::sequence::{load_sequence, write_sequence};
use super::synth::{synth_sequence, SynthSpec};
use crate::error::{Error, Result};
use crate::tracker::{Ablation, TrackerConfig};

#[derive(Debug, Parser)]
#[command(name = "longtrack", version, about = "Single-object tracking for long videos")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Track one sequence directory and write its results file.
    Track {
        #[arg(long)]
        seq: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value = "full")]
        ablation: Ablation,
    },
    /// Score a results file against groundtruth and write the curves.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a synthetic sequence from a JSON spec.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Track and score every sequence named in a list file.
    Bench {
        #[arg(long)]
        root: PathBuf,
        #[arg(long)]
        list: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "full")]
        ablation: Ablation,
    },
}

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 3,
        Error::Format { .. } | Error::Io { .. } | Error::Image { .. } | Error::InvalidArgument(_) => 2,
        _ => 1,
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn load_config(path: Option<&Path>) -> Result<TrackerConfig> {
    match path {
        Some(p) => TrackerConfig::from_json(&read_text(p)?),
        None => Ok(TrackerConfig::default()),
    }
}

/// Sequence names from a list file: one per line, blank lines and `#`
/// comments ignored.
fn read_list(path: &Path) -> Result<Vec<String>> {
    let names: Vec<String> =
        read_text(path)?.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(String::from).collect();
    if names.is_empty() {
        return Err(Error::Format { path: path.to_path_buf(), msg: "empty sequence list".into() });
    }
    Ok(names)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Track { seq, config, out, ablation } => {
            let config = load_config(config.as_deref())?;
            let seq = load_sequence(&seq)?;
            let result = run_sequence(&seq, &config, ablation)?;
            create_dir(&out)?;
            write_results(&out.join(format!("{}.txt", seq.name)), &result.boxes)?;
            match evaluate(&result.boxes, &seq.groundtruth) {
                Ok(r) => println!("{}: dp {:.4} auc {:.4} fps {:.1}", seq.name, r.dp, r.auc, result.fps()),
                Err(_) => println!("{}: fps {:.1}", seq.name, result.fps()),
            }
        }
        Command::Eval { pred, gt, out } => {
            let report = evaluate(&read_boxes(&pred)?, &read_boxes(&gt)?)?;
            write_curves(&out, &report)?;
            println!("dp {:.4} auc {:.4} frames {}", report.dp, report.auc, report.frames);
        }
        Command::Synth { spec, out } => {
            let spec = SynthSpec::from_json(&read_text(&spec)?).map_err(|e| Error::Format { path: spec.clone(), msg: e.to_string() })?;
            write_sequence(&synth_sequence(&spec)?, &out)?;
        }
        Command::Bench { root, list, out, jobs, config, ablation } => {
            let config = load_config(config.as_deref())?;
            let dirs: Vec<PathBuf> = read_list(&list)?.iter().map(|n| root.join(n)).collect();
            let results = run_bench(&dirs, &config, ablation, jobs)?;
            create_dir(&out)?;
            let mut rows = Vec::with_capacity(results.len() + 1);
            for (run, report) in &results {
                write_results(&out.join(format!("{}.txt", run.name)), &run.boxes)?;
                write_curves(&out.join(format!("{}_curves.csv", run.name)), report)?;
                rows.push(SummaryRow::new(run, report));
                println!("{}: dp {:.4} auc {:.4}", run.name, report.dp, report.auc);
            }
            let n = rows.len() as f64;
            let mean = |f: fn(&SummaryRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
            let total = SummaryRow { sequence: "mean".into(), dp: mean(|r| r.dp), auc: mean(|r| r.auc), fps: mean(|r| r.fps) };
            println!("mean: dp {:.4} auc {:.4}", total.dp, total.auc);
            rows.push(total);
            write_summary(&out.join("summary.csv"), &rows)?;
        }
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
