use std::ffi::OsString;
use std::fs;
use std::path::Path;

use longtrack::bench::{cli::main_with_args, read_boxes, RESULTS_HEADER};

const SPEC: &str = r#"{
  "name": "small", "width": 160, "height": 120, "frames": 12, "seed": 4,
  "object": {"w": 20, "h": 16, "color": [230, 200, 30]},
  "path": [[0, 60, 60], [11, 90, 70]]
}"#;

fn run(args: &[&dyn AsRef<std::ffi::OsStr>]) -> i32 {
    let mut argv: Vec<OsString> = vec!["longtrack".into()];
    argv.extend(args.iter().map(|a| a.as_ref().to_owned()));
    main_with_args(argv)
}

fn synth(dir: &Path) -> std::path::PathBuf {
    let spec = dir.join("spec.json");
    fs::write(&spec, SPEC).unwrap();
    let seq = dir.join("data").join("small");
    assert_eq!(run(&[&"synth", &"--spec", &spec, &"--out", &seq]), 0);
    seq
}

#[test]
fn synth_track_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let seq = synth(dir.path());
    assert_eq!(fs::read_dir(seq.join("img")).unwrap().count(), 12);

    let out = dir.path().join("out");
    assert_eq!(run(&[&"track", &"--seq", &seq, &"--out", &out, &"--ablation", &"baseline"]), 0);
    let results = out.join("small.txt");
    let text = fs::read_to_string(&results).unwrap();
    assert_eq!(text.lines().next(), Some(RESULTS_HEADER));
    assert_eq!(read_boxes(&results).unwrap().len(), 12);

    let curves = dir.path().join("curves.csv");
    assert_eq!(run(&[&"eval", &"--pred", &results, &"--gt", &seq.join("groundtruth.txt"), &"--out", &curves]), 0);
    let csv = fs::read_to_string(&curves).unwrap();
    assert!(csv.starts_with("curve,threshold,value"));
    assert_eq!(csv.lines().count(), 1 + 51 + 21);
}

#[test]
fn bench_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let list = dir.path().join("list.txt");
    fs::write(&list, "# synthetic\nsmall\n").unwrap();
    let out = dir.path().join("bench");
    assert_eq!(run(&[&"bench", &"--root", &dir.path().join("data"), &"--list", &list, &"--out", &out, &"--jobs", &"2"]), 0);
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().collect();
    assert_eq!(rows[0], "sequence,dp,auc,fps");
    assert!(rows[1].starts_with("small,"));
    assert!(rows[2].starts_with("mean,"));
    assert!(out.join("small.txt").is_file() && out.join("small_curves.csv").is_file());
}

#[test]
fn config_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let seq = synth(dir.path());
    let out = dir.path().join("out");
    for body in [r#"{"no_such_key": 1}"#, r#"{"activation_threshold": -1}"#, "[1, 2]"] {
        let config = dir.path().join("config.json");
        fs::write(&config, body).unwrap();
        assert_eq!(run(&[&"track", &"--seq", &seq, &"--config", &config, &"--out", &out]), 3, "{body}");
    }
    let config = dir.path().join("ok.json");
    fs::write(&config, r#"{"activation_threshold": 0.25}"#).unwrap();
    assert_eq!(run(&[&"track", &"--seq", &seq, &"--config", &config, &"--out", &out]), 0);
}

#[test]
fn format_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&[&"track", &"--seq", &dir.path().join("missing")]), 2);

    let seq = synth(dir.path());
    fs::write(seq.join("groundtruth.txt"), "1,2,three,4\n").unwrap();
    assert_eq!(run(&[&"track", &"--seq", &seq]), 2);

    let pred = dir.path().join("pred.txt");
    fs::write(&pred, "# format: 0-based x,y,w,h\n1,1,2,2\n").unwrap();
    let gt = dir.path().join("gt.txt");
    fs::write(&gt, "1,1,2,2\n").unwrap();
    assert_eq!(run(&[&"eval", &"--pred", &pred, &"--gt", &gt, &"--out", &dir.path().join("c.csv")]), 2);

    let spec = dir.path().join("bad.json");
    fs::write(&spec, r#"{"name": "x"}"#).unwrap();
    assert_eq!(run(&[&"synth", &"--spec", &spec, &"--out", &dir.path().join("s")]), 2);
}

#[test]
fn usage_errors_are_nonzero() {
    assert_ne!(run(&[&"track"]), 0);
    assert_ne!(run(&[&"frobnicate"]), 0);
    assert_eq!(run(&[&"--help"]), 0);
}
