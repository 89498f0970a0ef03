use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");

fn flowtrack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowtrack")).args(args).output().expect("binary runs")
}

fn fixture(name: &str) -> String {
    Path::new(FIXTURES).join(name).display().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Generates the small fixture scene into `dir/small` and returns its path.
fn synth(dir: &Path, extra: &[&str]) -> PathBuf {
    let seq = dir.join("small");
    let cfg = fixture("scene_small.toml");
    let mut args = vec!["synth", "--config", &cfg, "--out", s(&seq)];
    args.extend_from_slice(extra);
    let out = flowtrack(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    seq
}

#[test]
fn track_then_eval_round_trip() {
    let d = tempfile::tempdir().unwrap();
    let seq = synth(d.path(), &[]);
    let out = d.path().join("out");
    let t = flowtrack(&["track", "--seq", s(&seq), "--out", s(&out), "--seed", "3"]);
    assert!(t.status.success(), "{}", String::from_utf8_lossy(&t.stderr));
    assert!(String::from_utf8_lossy(&t.stdout).contains("small unique_count="));
    for f in ["small.txt", "counts.txt", "manifest.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let e = flowtrack(&["eval", "--seq", s(&seq), "--results", s(&out), "--margin", "10"]);
    assert!(e.status.success(), "{}", String::from_utf8_lossy(&e.stderr));
    assert!(String::from_utf8_lossy(&e.stdout).contains("[aggregate]\nmota="));
}

#[test]
fn ground_truth_as_results_scores_perfectly() {
    let d = tempfile::tempdir().unwrap();
    let seq = synth(d.path(), &[]);
    let results = d.path().join("small.txt");
    fs::copy(seq.join("gt/gt.txt"), &results).unwrap();
    let e = flowtrack(&["eval", "--seq", s(&seq), "--results", s(&results), "--margin", "0"]);
    let text = String::from_utf8_lossy(&e.stdout);
    assert!(e.status.success());
    assert!(text.contains("mota=1.000000") && text.contains("idf1=1.000000") && text.contains("id_switches=0"), "{text}");
}

#[test]
fn replay_reproduces_results() {
    let d = tempfile::tempdir().unwrap();
    let seq = synth(d.path(), &[]);
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    assert!(flowtrack(&["track", "--seq", s(&seq), "--out", s(&a), "--seed", "11", "--rla", "off"]).status.success());
    let manifest = a.join("manifest.json");
    assert!(flowtrack(&["track", "--replay", s(&manifest), "--out", s(&b)]).status.success());
    assert_eq!(fs::read(a.join("small.txt")).unwrap(), fs::read(b.join("small.txt")).unwrap());
    assert_eq!(fs::read(a.join("counts.txt")).unwrap(), fs::read(b.join("counts.txt")).unwrap());
}

#[test]
fn missing_flow_warns_and_still_tracks() {
    let d = tempfile::tempdir().unwrap();
    let seq = synth(d.path(), &[]);
    fs::remove_dir_all(seq.join("flow")).unwrap();
    let out = d.path().join("out");
    let t = flowtrack(&["track", "--seq", s(&seq), "--out", s(&out)]);
    assert!(t.status.success());
    assert!(String::from_utf8_lossy(&t.stderr).contains("no flow directory"));
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("identity motion"));
}

#[test]
fn explicit_flow_root_is_used() {
    let d = tempfile::tempdir().unwrap();
    let seq = synth(d.path(), &[]);
    let root = d.path().join("flows");
    fs::create_dir(&root).unwrap();
    fs::rename(seq.join("flow"), root.join("small")).unwrap();
    let out = d.path().join("out");
    let t = flowtrack(&["track", "--seq", s(&seq), "--flow", s(&root), "--out", s(&out)]);
    assert!(t.status.success());
    assert!(!String::from_utf8_lossy(&t.stderr).contains("no flow directory"));
}

#[test]
fn user_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    let seq = synth(d.path(), &[]);
    let out = d.path().join("out");

    let bad_cfg = d.path().join("bad.toml");
    fs::write(&bad_cfg, "dormant_max = 0\n").unwrap();
    assert_eq!(flowtrack(&["track", "--seq", s(&seq), "--config", s(&bad_cfg), "--out", s(&out)]).status.code(), Some(2));
    fs::write(&bad_cfg, "no_such_key = 1\n").unwrap();
    assert_eq!(flowtrack(&["track", "--seq", s(&seq), "--config", s(&bad_cfg), "--out", s(&out)]).status.code(), Some(2));

    assert!(flowtrack(&["track", "--seq", s(&seq), "--out", s(&out)]).status.success());
    assert_eq!(flowtrack(&["eval", "--seq", s(&seq), "--results", s(&out), "--margin", "500"]).status.code(), Some(2));

    let wrong = d.path().join("other.txt");
    fs::copy(out.join("small.txt"), &wrong).unwrap();
    assert_eq!(flowtrack(&["eval", "--seq", s(&seq), "--results", s(&wrong)]).status.code(), Some(2));

    fs::remove_file(seq.join("det/det.txt")).unwrap();
    assert_eq!(flowtrack(&["track", "--seq", s(&seq), "--out", s(&out)]).status.code(), Some(2));

    assert_eq!(flowtrack(&["track", "--seq", s(&seq), "--rla", "maybe"]).status.code(), Some(2));
}

#[test]
fn single_frame_synth_writes_no_flow() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("one.toml");
    fs::write(
        &cfg,
        "name = \"one\"\nframe_count = 1\nimage_width = 64\nimage_height = 48\n\n[[objects]]\nleft = 10.0\ntop = 10.0\nwidth = 8.0\nheight = 8.0\n",
    )
    .unwrap();
    let seq = d.path().join("one");
    let o = flowtrack(&["synth", "--config", s(&cfg), "--out", s(&seq)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let flows = fs::read_dir(seq.join("flow")).map(|r| r.count()).unwrap_or(0);
    assert_eq!(flows, 0);
    assert!(seq.join("det/det.txt").is_file());
}

#[test]
fn seed_changes_detections() {
    let d = tempfile::tempdir().unwrap();
    let a = synth(&d.path().join("a"), &["--seed", "1"]);
    let b = synth(&d.path().join("b"), &["--seed", "2"]);
    let c = synth(&d.path().join("c"), &["--seed", "1"]);
    let det = |p: &Path| fs::read(p.join("det/det.txt")).unwrap();
    assert_ne!(det(&a), det(&b));
    assert_eq!(det(&a), det(&c));
    assert_eq!(fs::read(a.join("gt/gt.txt")).unwrap(), fs::read(b.join("gt/gt.txt")).unwrap());
}

#[test]
fn count_fixture_reports_published_error() {
    let d = tempfile::tempdir().unwrap();
    let o = flowtrack(&[
        "count",
        "--pairs",
        &fixture("cotton_counts.csv"),
        "--method",
        "ntrack",
        "--errors",
        &fixture("cotton_count_errors.csv"),
        "--baseline",
        "ntrack",
        "--out",
        s(d.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    let pct: f64 = text.lines().find_map(|l| l.strip_prefix("mape_percent=")).unwrap().parse().unwrap();
    assert!((pct - 4.0).abs() <= 0.1, "{pct}");
    assert!(text.contains("ttest.ntrack.bytetrack.p="));
    assert!(d.path().join("count.json").is_file());
}

#[test]
fn count_from_results_directory() {
    let d = tempfile::tempdir().unwrap();
    let seq = synth(d.path(), &[]);
    let results = d.path().join("res");
    fs::create_dir(&results).unwrap();
    fs::copy(seq.join("gt/gt.txt"), results.join("small.txt")).unwrap();
    let o = flowtrack(&["count", "--seq", s(&seq), "--results", s(&results)]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success());
    assert!(text.contains("mape=0.000000") && text.contains("rmse=0.000000"), "{text}");
}
