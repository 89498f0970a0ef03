use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::geometry::SequenceMeta;
use crate::mot::FrameBox;

pub const DEFAULT_MARGIN: f64 = 200.0;

/// Ground-truth and hypothesis object counts of one sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountPair {
    pub gt: u64,
    pub hyp: u64,
}

impl CountPair {
    pub fn new(gt: u64, hyp: u64) -> Self {
        Self { gt, hyp }
    }
}

fn check(pairs: &[CountPair]) -> Result<(), EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    if pairs.iter().any(|p| p.gt == 0) {
        return Err(EvalError::InvalidCount);
    }
    Ok(())
}

/// Mean absolute percentage error, as a ratio.
pub fn mape(pairs: &[CountPair]) -> Result<f64, EvalError> {
    check(pairs)?;
    let sum: f64 = pairs.iter().map(|p| p.gt.abs_diff(p.hyp) as f64 / p.gt as f64).sum();
    Ok(sum / pairs.len() as f64)
}

pub fn rmse(pairs: &[CountPair]) -> Result<f64, EvalError> {
    check(pairs)?;
    let sum: f64 = pairs.iter().map(|p| (p.gt.abs_diff(p.hyp) as f64).powi(2)).sum();
    Ok((sum / pairs.len() as f64).sqrt())
}

/// Drops boxes that reach into the left or right margin band.
pub fn filter_margin<T: FrameBox + Clone>(entries: &[T], meta: &SequenceMeta, margin: f64) -> Result<Vec<T>, EvalError> {
    let width = meta.image_width as f64;
    if !(margin >= 0.0) || margin >= width / 2.0 {
        return Err(EvalError::InvalidMargin { margin, width: meta.image_width });
    }
    Ok(entries
        .iter()
        .filter(|e| {
            let b = e.bbox();
            b.left >= margin && b.right() <= width - margin
        })
        .cloned()
        .collect())
}
