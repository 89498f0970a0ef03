use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::clear::{MetricCounts, MetricsReport};
use super::counting::{mape, rmse, CountPair};
use super::EvalError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceReport {
    pub sequence: String,
    pub margin: f64,
    /// Distinct ground-truth ids after filtering.
    pub gt_objects: u64,
    /// Distinct hypothesis ids after filtering.
    pub hyp_objects: u64,
    pub counts: MetricCounts,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub sequences: Vec<SequenceReport>,
    pub aggregate: MetricsReport,
}

impl EvalReport {
    /// Sorts sequences by name and sums their raw counts.
    pub fn new(mut sequences: Vec<SequenceReport>) -> Self {
        sequences.sort_by(|a, b| a.sequence.cmp(&b.sequence));
        let mut total = MetricCounts::default();
        for s in &sequences {
            total += s.counts;
        }
        Self { sequences, aggregate: total.report() }
    }

    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        for s in &self.sequences {
            let _ = writeln!(out, "[{}]", s.sequence);
            let _ = writeln!(out, "gt_objects={}", s.gt_objects);
            let _ = writeln!(out, "hyp_objects={}", s.hyp_objects);
            write_metrics(&mut out, &s.metrics);
        }
        out.push_str("[aggregate]\n");
        write_metrics(&mut out, &self.aggregate);
        out
    }
}

fn write_metrics(out: &mut String, m: &MetricsReport) {
    let _ = writeln!(out, "mota={:.6}", m.mota);
    let _ = writeln!(out, "motp={:.6}", m.motp);
    let _ = writeln!(out, "idf1={:.6}", m.idf1);
    let _ = writeln!(out, "idp={:.6}", m.idp);
    let _ = writeln!(out, "idr={:.6}", m.idr);
    let _ = writeln!(out, "id_switches={}", m.id_switches);
    let _ = writeln!(out, "fragmentations={}", m.fragmentations);
    let _ = writeln!(out, "matches={}", m.matches);
    let _ = writeln!(out, "misses={}", m.misses);
    let _ = writeln!(out, "false_positives={}", m.false_positives);
}

/// Count errors over named sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingReport {
    pub method: String,
    pub sequences: Vec<(String, CountPair)>,
    pub mape: f64,
    pub rmse: f64,
}

impl CountingReport {
    pub fn new(method: impl Into<String>, sequences: Vec<(String, CountPair)>) -> Result<Self, EvalError> {
        let pairs: Vec<CountPair> = sequences.iter().map(|s| s.1).collect();
        Ok(Self { method: method.into(), mape: mape(&pairs)?, rmse: rmse(&pairs)?, sequences })
    }

    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "method={}", self.method);
        for (name, p) in &self.sequences {
            let _ = writeln!(out, "{name}.gt={}", p.gt);
            let _ = writeln!(out, "{name}.hyp={}", p.hyp);
        }
        let _ = writeln!(out, "n={}", self.sequences.len());
        let _ = writeln!(out, "mape={:.6}", self.mape);
        let _ = writeln!(out, "mape_percent={:.2}", self.mape * 100.0);
        let _ = writeln!(out, "rmse={:.6}", self.rmse);
        out
    }
}
