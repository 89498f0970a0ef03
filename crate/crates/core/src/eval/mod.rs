//! Counting error, CLEAR/identity tracking metrics and the paired t-test.

mod clear;
mod counting;
mod report;
mod stats;

use thiserror::Error;

pub use clear::{clear_and_id_metrics, MetricCounts, MetricsReport, DEFAULT_IOU_MATCH};
pub use counting::{filter_margin, mape, rmse, CountPair, DEFAULT_MARGIN};
pub use report::{CountingReport, EvalReport, SequenceReport};
pub use stats::{ln_gamma, paired_t_test_one_sided, regularized_incomplete_beta, student_t_sf, TTest};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("no input values")]
    EmptyInput,
    #[error("ground-truth count must be at least 1")]
    InvalidCount,
    #[error("margin {margin} px leaves nothing of a {width} px frame")]
    InvalidMargin { margin: f64, width: u32 },
    #[error("need equal-length samples of at least 2, got {a} and {b}")]
    InsufficientData { a: usize, b: usize },
    #[error("differences have zero spread")]
    DegenerateSample,
}
