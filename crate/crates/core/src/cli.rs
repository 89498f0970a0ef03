//! Command-line front end: `track`, `eval`, `count` and `synth`.
//!
//! Exit codes: 0 success, 1 internal error, 2 user or input error.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::eval::{
    clear_and_id_metrics, filter_margin, paired_t_test_one_sided, CountPair, CountingReport, EvalReport, SequenceReport,
    TTest, DEFAULT_IOU_MATCH, DEFAULT_MARGIN,
};
use crate::flow::{FlowDir, NoFlow};
use crate::geometry::SequenceMeta;
use crate::mot::{detections_by_frame, parse_detections, parse_ground_truth, parse_results, parse_seqinfo, write_results};
use crate::synth::{export_scene, generate_scene, SceneConfig};
use crate::tracker::{run_sequence, TrackerConfig, TrackingResult};

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or unreadable/invalid inputs.
    User(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::User(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::User(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

fn user(m: impl std::fmt::Display) -> CliError {
    CliError::User(m.to_string())
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| user(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| user(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, contents).map_err(|e| user(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

#[derive(Parser, Debug)]
#[command(name = "flowtrack", version, about = "Flow-driven multiple object tracking and counting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Track one or more MOT-layout sequences.
    Track(TrackArgs),
    /// CLEAR/identity metrics of results against ground truth.
    Eval(EvalArgs),
    /// Counting error from a counts table or from result files.
    Count(CountArgs),
    /// Generate a synthetic sequence from a scene config.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Args, Debug)]
pub struct TrackArgs {
    /// Sequence directory (seqinfo.ini, det/det.txt). Repeatable.
    #[arg(long = "seq", required_unless_present = "replay")]
    pub seqs: Vec<PathBuf>,
    /// Flow directory, or a root holding one directory per sequence name.
    /// Defaults to `<seq>/flow`.
    #[arg(long)]
    pub flow: Option<PathBuf>,
    /// Tracker config (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub rla: Option<Switch>,
    /// Neighbors used by relative-location re-identification.
    #[arg(long = "neighbors", value_name = "K")]
    pub neighbors: Option<usize>,
    /// Re-run exactly what a previous manifest describes.
    #[arg(long, conflicts_with_all = ["seqs", "flow", "config", "rla", "neighbors"])]
    pub replay: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Sequence directory with seqinfo.ini and gt/gt.txt. Repeatable.
    #[arg(long = "seq", required = true)]
    pub seqs: Vec<PathBuf>,
    /// Result file (single sequence, named `<seq>.txt`) or directory of them.
    #[arg(long)]
    pub results: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    pub margin: f64,
    #[arg(long, default_value_t = DEFAULT_IOU_MATCH)]
    pub iou: f64,
    /// Directory for eval.txt and eval.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CountArgs {
    /// CSV with columns `sequence,gt,<method>...` of object counts.
    #[arg(long, conflicts_with_all = ["seqs", "results"])]
    pub pairs: Option<PathBuf>,
    /// Method column to report; all columns when absent.
    #[arg(long)]
    pub method: Option<String>,
    /// CSV with columns `sequence,<method>...` of per-sequence errors; runs
    /// one-sided paired t-tests of `--baseline` against every other column.
    #[arg(long, requires = "baseline")]
    pub errors: Option<PathBuf>,
    #[arg(long)]
    pub baseline: Option<String>,
    #[arg(long = "seq")]
    pub seqs: Vec<PathBuf>,
    #[arg(long)]
    pub results: Option<PathBuf>,
    /// Margin applied before counting result ids and ground-truth ids.
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Scene config (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sequence directory to create.
    #[arg(long)]
    pub out: PathBuf,
}

/// Everything needed to reproduce a `track` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub seed: u64,
    pub config: TrackerConfig,
    pub sequences: Vec<SequenceRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceRun {
    pub name: String,
    pub seq_dir: PathBuf,
    /// `None` when the run fell back to identity motion.
    pub flow_dir: Option<PathBuf>,
    pub results: PathBuf,
    pub frames: u32,
    pub unique_count: usize,
    pub warnings: Vec<String>,
    pub elapsed_ms: f64,
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Track(a) => cmd_track(&a).map(|_| ()),
        Command::Eval(a) => cmd_eval(&a).map(|_| ()),
        Command::Count(a) => cmd_count(&a),
        Command::Synth(a) => cmd_synth(&a),
    }
}

pub fn load_meta(seq: &Path) -> Result<SequenceMeta, CliError> {
    let path = seq.join("seqinfo.ini");
    parse_seqinfo(&read(&path)?).map_err(|e| user(format!("{}: {e}", path.display())))
}

/// Flow directory for a sequence: `<flow>/<name>` if present, else `<flow>`;
/// without `--flow`, `<seq>/flow`.
fn resolve_flow(seq: &Path, name: &str, flow: Option<&Path>) -> PathBuf {
    match flow {
        Some(root) if root.join(name).is_dir() => root.join(name),
        Some(root) => root.to_path_buf(),
        None => seq.join("flow"),
    }
}

fn track_one(
    seq: &Path,
    flow: Option<&Path>,
    cfg: &TrackerConfig,
    seed: u64,
    out: &Path,
    fixed_flow: Option<Option<PathBuf>>,
) -> Result<SequenceRun, CliError> {
    let started = Instant::now();
    let meta = load_meta(seq)?;
    let det_path = seq.join("det").join("det.txt");
    let dets = parse_detections(&read(&det_path)?).map_err(|e| user(format!("{}: {e}", det_path.display())))?;
    let by_frame = detections_by_frame(&dets, meta.frame_count);

    let mut warnings = Vec::new();
    let flow_dir = match fixed_flow {
        Some(f) => f,
        None => {
            let dir = resolve_flow(seq, &meta.name, flow);
            if dir.is_dir() {
                Some(dir)
            } else {
                let msg = format!("no flow directory at {}; using identity motion", dir.display());
                warn!("{}: {msg}", meta.name);
                warnings.push(msg);
                None
            }
        }
    };
    let result: TrackingResult = match &flow_dir {
        Some(dir) => run_sequence(&meta, &mut FlowDir::new(dir), &by_frame, cfg, seed),
        None => run_sequence(&meta, &mut NoFlow, &by_frame, cfg, seed),
    }
    .map_err(|e| user(format!("{}: {e}", meta.name)))?;

    let results = out.join(format!("{}.txt", meta.name));
    write(&results, &write_results(&result.rows))?;
    info!("{}: {} unique objects", meta.name, result.unique_count);
    Ok(SequenceRun {
        name: meta.name,
        seq_dir: seq.to_path_buf(),
        flow_dir,
        results,
        frames: meta.frame_count,
        unique_count: result.unique_count,
        warnings,
        elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

pub fn cmd_track(a: &TrackArgs) -> Result<RunManifest, CliError> {
    type Job = (PathBuf, Option<Option<PathBuf>>);
    let (cfg, seed, jobs): (TrackerConfig, u64, Vec<Job>) = match &a.replay {
        Some(path) => {
            let m: RunManifest = serde_json::from_str(&read(path)?).map_err(|e| user(format!("{}: {e}", path.display())))?;
            m.config.validate().map_err(user)?;
            (m.config, m.seed, m.sequences.into_iter().map(|s| (s.seq_dir, Some(s.flow_dir))).collect())
        }
        None => {
            let mut cfg = match &a.config {
                Some(p) => TrackerConfig::from_toml(&read(p)?).map_err(|e| user(format!("{}: {e}", p.display())))?,
                None => TrackerConfig::default(),
            };
            if let Some(s) = a.rla {
                cfg.rla.enabled = s == Switch::On;
            }
            if let Some(k) = a.neighbors {
                cfg.rla.k = k;
            }
            cfg.validate().map_err(user)?;
            (cfg, a.seed, a.seqs.iter().map(|s| (s.clone(), None)).collect())
        }
    };

    let runs: Vec<Result<SequenceRun, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .into_iter()
            .map(|(seq, fixed)| {
                let (cfg, flow, out) = (&cfg, a.flow.as_deref(), a.out.as_path());
                scope.spawn(move || track_one(&seq, flow, cfg, seed, out, fixed))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(CliError::Internal("tracking thread panicked".into()))))
            .collect()
    });
    let mut sequences = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
    sequences.sort_by(|x, y| x.name.cmp(&y.name));
    let names: BTreeSet<&str> = sequences.iter().map(|s| s.name.as_str()).collect();
    if names.len() != sequences.len() {
        return Err(user("two sequences share a name"));
    }

    let mut counts = String::new();
    for s in &sequences {
        counts.push_str(&format!("{}={}\n", s.name, s.unique_count));
        println!("{} unique_count={}", s.name, s.unique_count);
    }
    write(&a.out.join("counts.txt"), &counts)?;
    let manifest = RunManifest { version: env!("CARGO_PKG_VERSION").into(), seed, config: cfg, sequences };
    write(&a.out.join("manifest.json"), &to_json(&manifest))?;
    Ok(manifest)
}

/// Results file for a sequence: `<results>/<name>.txt`, or `results` itself
/// when its stem is the sequence name.
fn resolve_results(results: &Path, name: &str) -> Result<PathBuf, CliError> {
    if results.is_dir() {
        return Ok(results.join(format!("{name}.txt")));
    }
    match results.file_stem().and_then(|s| s.to_str()) {
        Some(stem) if stem == name => Ok(results.to_path_buf()),
        other => Err(user(format!("results file {} does not belong to sequence {name} (stem {other:?})", results.display()))),
    }
}

pub fn cmd_eval(a: &EvalArgs) -> Result<EvalReport, CliError> {
    if !(a.iou > 0.0 && a.iou <= 1.0) {
        return Err(user(format!("iou threshold {} must be in (0, 1]", a.iou)));
    }
    let mut seqs = Vec::new();
    for seq in &a.seqs {
        let meta = load_meta(seq)?;
        let gt_path = seq.join("gt").join("gt.txt");
        let gt = parse_ground_truth(&read(&gt_path)?).map_err(|e| user(format!("{}: {e}", gt_path.display())))?;
        let res_path = resolve_results(&a.results, &meta.name)?;
        let hyp = parse_results(&read(&res_path)?).map_err(|e| user(format!("{}: {e}", res_path.display())))?;
        let gt = filter_margin(&gt, &meta, a.margin).map_err(user)?;
        let hyp = filter_margin(&hyp, &meta, a.margin).map_err(user)?;
        let counts = clear_and_id_metrics(&gt, &hyp, a.iou);
        let ids = |it: &mut dyn Iterator<Item = u64>| it.collect::<BTreeSet<u64>>().len() as u64;
        seqs.push(SequenceReport {
            sequence: meta.name,
            margin: a.margin,
            gt_objects: ids(&mut gt.iter().filter(|g| g.flag != 0).map(|g| g.id)),
            hyp_objects: ids(&mut hyp.iter().map(|h| h.id)),
            counts,
            metrics: counts.report(),
        });
    }
    let report = EvalReport::new(seqs);
    let text = report.to_key_value();
    print!("{text}");
    if let Some(out) = &a.out {
        write(&out.join("eval.txt"), &text)?;
        write(&out.join("eval.json"), &to_json(&report))?;
    }
    Ok(report)
}

/// A small CSV table: first column sequence names, remaining columns numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub sequences: Vec<String>,
    pub columns: BTreeMap<String, Vec<f64>>,
    pub order: Vec<String>,
}

pub fn parse_table(text: &str) -> Result<Table, CliError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(text.as_bytes());
    let headers: Vec<String> = rdr.headers().map_err(user)?.iter().map(str::to_string).collect();
    if headers.len() < 2 {
        return Err(user("table needs a sequence column and at least one value column"));
    }
    let order: Vec<String> = headers[1..].to_vec();
    let mut columns: BTreeMap<String, Vec<f64>> = order.iter().map(|h| (h.clone(), Vec::new())).collect();
    let mut sequences = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(user)?;
        sequences.push(rec.get(0).unwrap_or_default().to_string());
        for (h, v) in order.iter().zip(rec.iter().skip(1)) {
            let x: f64 = v.parse().map_err(|_| user(format!("row {}: `{v}` is not a number", line + 2)))?;
            columns.get_mut(h).expect("column exists").push(x);
        }
    }
    Ok(Table { sequences, columns, order })
}

fn count_pairs_from_table(t: &Table, method: &str) -> Result<Vec<(String, CountPair)>, CliError> {
    let gt = t.columns.get("gt").ok_or_else(|| user("counts table has no `gt` column"))?;
    let hyp = t.columns.get(method).ok_or_else(|| user(format!("no column `{method}`")))?;
    let as_count = |x: f64| {
        if x >= 0.0 && x.fract() == 0.0 {
            Ok(x as u64)
        } else {
            Err(user(format!("count {x} is not a non-negative integer")))
        }
    };
    t.sequences
        .iter()
        .zip(gt.iter().zip(hyp))
        .map(|(s, (&g, &h))| Ok((s.clone(), CountPair::new(as_count(g)?, as_count(h)?))))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestRow {
    pub baseline: String,
    pub versus: String,
    pub test: TTest,
}

pub fn counting_reports(table: &Table, method: Option<&str>) -> Result<Vec<CountingReport>, CliError> {
    let methods: Vec<&str> = match method {
        Some(m) => vec![m],
        None => table.order.iter().map(String::as_str).filter(|m| *m != "gt").collect(),
    };
    methods
        .into_iter()
        .map(|m| CountingReport::new(m, count_pairs_from_table(table, m)?).map_err(user))
        .collect()
}

pub fn t_tests(table: &Table, baseline: &str) -> Result<Vec<TTestRow>, CliError> {
    let base = table.columns.get(baseline).ok_or_else(|| user(format!("no column `{baseline}`")))?;
    table
        .order
        .iter()
        .filter(|m| m.as_str() != baseline)
        .map(|m| {
            let test = paired_t_test_one_sided(base, &table.columns[m]).map_err(|e| user(format!("{m}: {e}")))?;
            Ok(TTestRow { baseline: baseline.into(), versus: m.clone(), test })
        })
        .collect()
}

pub fn cmd_count(a: &CountArgs) -> Result<(), CliError> {
    let mut text = String::new();
    let mut json = serde_json::Map::new();
    if let Some(p) = &a.pairs {
        let table = parse_table(&read(p)?)?;
        let reports = counting_reports(&table, a.method.as_deref())?;
        for r in &reports {
            text.push_str(&r.to_key_value());
        }
        json.insert("counting".into(), serde_json::to_value(&reports).expect("serializes"));
    } else if !a.seqs.is_empty() {
        let results = a.results.as_ref().ok_or_else(|| user("--seq needs --results"))?;
        let mut pairs = Vec::new();
        for seq in &a.seqs {
            let meta = load_meta(seq)?;
            let gt = parse_ground_truth(&read(&seq.join("gt").join("gt.txt"))?).map_err(user)?;
            let hyp = parse_results(&read(&resolve_results(results, &meta.name)?)?).map_err(user)?;
            let (gt, hyp) = match a.margin {
                Some(m) => (filter_margin(&gt, &meta, m).map_err(user)?, filter_margin(&hyp, &meta, m).map_err(user)?),
                None => (gt, hyp),
            };
            let g = gt.iter().filter(|g| g.flag != 0).map(|g| g.id).collect::<BTreeSet<_>>().len() as u64;
            let h = hyp.iter().map(|h| h.id).collect::<BTreeSet<_>>().len() as u64;
            pairs.push((meta.name, CountPair::new(g, h)));
        }
        pairs.sort_by(|x, y| x.0.cmp(&y.0));
        let r = CountingReport::new(a.method.clone().unwrap_or_else(|| "results".into()), pairs).map_err(user)?;
        text.push_str(&r.to_key_value());
        json.insert("counting".into(), serde_json::to_value([&r]).expect("serializes"));
    } else if a.errors.is_none() {
        return Err(user("count needs --pairs, --errors or --seq with --results"));
    }

    if let (Some(p), Some(base)) = (&a.errors, &a.baseline) {
        let rows = t_tests(&parse_table(&read(p)?)?, base)?;
        for r in &rows {
            text.push_str(&format!("ttest.{}.{}.t={:.6}\n", r.baseline, r.versus, r.test.t));
            text.push_str(&format!("ttest.{}.{}.p={:.6e}\n", r.baseline, r.versus, r.test.p));
        }
        json.insert("ttests".into(), serde_json::to_value(&rows).expect("serializes"));
    }
    print!("{text}");
    if let Some(out) = &a.out {
        write(&out.join("count.txt"), &text)?;
        write(&out.join("count.json"), &to_json(&json))?;
    }
    Ok(())
}

pub fn cmd_synth(a: &SynthArgs) -> Result<(), CliError> {
    let mut cfg = SceneConfig::from_toml(&read(&a.config)?).map_err(|e| user(format!("{}: {e}", a.config.display())))?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let scene = generate_scene(&cfg).map_err(user)?;
    export_scene(&scene, &a.out).map_err(user)?;
    println!(
        "{}: {} frames, {} objects, {} detections -> {}",
        scene.meta.name,
        scene.meta.frame_count,
        scene.object_count(),
        scene.detections.len(),
        a.out.display()
    );
    Ok(())
}
