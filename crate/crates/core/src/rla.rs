//! Relative location analysis.
//!
//! While two tracks are active together their centers are recorded as pair
//! samples. When a track goes dormant, each of its best-ranked active
//! neighbors predicts the target location through a per-axis least-squares
//! line `target = c0 + c1 · neighbor`, and the per-neighbor Gaussians are
//! fused by precision weighting into one proxy observation.
//!
//! The x and y axes are modeled independently.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tracker::TrackId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RlaError {
    #[error("insufficient history: {have} samples, need {need}")]
    InsufficientHistory { have: usize, need: usize },
    #[error("neighbor locations have no spread")]
    DegenerateRegressor,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no estimates to fuse")]
    NoEstimates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RlaConfig {
    pub enabled: bool,
    /// Neighbors recorded per frame and fused per estimate.
    pub k: usize,
    /// Minimum co-active samples before a pair model is trusted.
    pub m_min: usize,
    /// Lower bound on a per-neighbor variance (px²).
    pub var_floor: f64,
    /// Samples kept per pair.
    pub max_history: usize,
}

impl Default for RlaConfig {
    fn default() -> Self {
        Self { enabled: true, k: 3, m_min: 3, var_floor: 1.0, max_history: 300 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    fn pick(self, p: (f64, f64)) -> f64 {
        match self {
            Axis::X => p.0,
            Axis::Y => p.1,
        }
    }
}

/// One co-active observation of a pair along one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSample {
    pub frame: u32,
    pub neighbor_loc: f64,
    pub target_loc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct PairRecord {
    frame: u32,
    neighbor: (f64, f64),
    target: (f64, f64),
}

/// Recorded geometry of one ordered (target, neighbor) pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairHistory {
    records: VecDeque<PairRecord>,
    /// Every frame the pair was recorded, strictly increasing.
    co_active_frames: Vec<u32>,
}

impl PairHistory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn co_active_frames(&self) -> &[u32] {
        &self.co_active_frames
    }

    pub fn samples(&self, axis: Axis) -> Vec<PairSample> {
        self.records
            .iter()
            .map(|r| PairSample { frame: r.frame, neighbor_loc: axis.pick(r.neighbor), target_loc: axis.pick(r.target) })
            .collect()
    }

    /// Sum of co-active frame indices strictly before `frame`, and their count.
    pub fn rank_before(&self, frame: u32) -> (u64, usize) {
        let end = self.co_active_frames.partition_point(|&f| f < frame);
        let sum = self.co_active_frames[..end].iter().map(|&f| f as u64).sum();
        (sum, end)
    }

    fn push(&mut self, record: PairRecord, cap: usize) {
        if self.co_active_frames.last().is_some_and(|&f| f >= record.frame) {
            return;
        }
        self.co_active_frames.push(record.frame);
        self.records.push_back(record);
        while self.records.len() > cap {
            self.records.pop_front();
        }
    }
}

/// All pair histories of a sequence.
#[derive(Debug, Clone, Default)]
pub struct PairHistories {
    pairs: BTreeMap<(TrackId, TrackId), PairHistory>,
    max_history: usize,
}

impl PairHistories {
    pub fn new(max_history: usize) -> Self {
        Self { pairs: BTreeMap::new(), max_history: max_history.max(1) }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, target: TrackId, neighbor: TrackId) -> Option<&PairHistory> {
        self.pairs.get(&(target, neighbor))
    }

    /// Appends one sample for an ordered pair. Frames must increase per pair;
    /// repeated or older frames are ignored.
    pub fn record_pair(&mut self, target: TrackId, neighbor: TrackId, frame: u32, target_loc: (f64, f64), neighbor_loc: (f64, f64)) {
        self.pairs
            .entry((target, neighbor))
            .or_default()
            .push(PairRecord { frame, neighbor: neighbor_loc, target: target_loc }, self.max_history);
    }

    /// For every active track, records its `k` nearest active tracks
    /// (Euclidean distance between centers; ties by smaller id).
    pub fn record_neighbors(&mut self, active: &[(TrackId, (f64, f64))], frame: u32, k: usize) {
        if k == 0 {
            return;
        }
        let mut nearest: Vec<(f64, TrackId, (f64, f64))> = Vec::with_capacity(active.len());
        for &(id, loc) in active {
            nearest.clear();
            nearest.extend(active.iter().filter(|(other, _)| *other != id).map(|&(other, p)| {
                let (dx, dy) = (p.0 - loc.0, p.1 - loc.1);
                (dx * dx + dy * dy, other, p)
            }));
            nearest.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for &(_, other, p) in nearest.iter().take(k) {
                self.record_pair(id, other, frame, loc, p);
            }
        }
    }

    /// Neighbors of `target` ordered by the sum of co-active frame indices
    /// before `frame`, descending; ties by more co-active frames, then
    /// smaller id.
    pub fn rank_neighbors(&self, target: TrackId, frame: u32) -> Vec<TrackId> {
        let mut ranked: Vec<(u64, usize, TrackId)> = self
            .pairs
            .range((target, TrackId(0))..=(target, TrackId(u64::MAX)))
            .filter_map(|(&(_, n), h)| {
                let (sum, count) = h.rank_before(frame);
                (count > 0).then_some((sum, count, n))
            })
            .collect();
        ranked.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)).then(a.2.cmp(&b.2)));
        ranked.into_iter().map(|r| r.2).collect()
    }

    /// Drops every pair involving `id`.
    pub fn forget(&mut self, id: TrackId) {
        self.pairs.retain(|&(a, b), _| a != id && b != id);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian1D {
    pub mu: f64,
    pub var: f64,
}

/// Least-squares line through pair samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairModel {
    pub c0: f64,
    pub c1: f64,
    /// Mean squared residual (divides by `m`).
    pub var: f64,
    pub m: usize,
}

/// Regresses target location on neighbor location.
pub fn fit_pair_model(samples: &[PairSample], m_min: usize) -> Result<PairModel, RlaError> {
    let m = samples.len();
    if m < m_min.max(2) {
        return Err(RlaError::InsufficientHistory { have: m, need: m_min.max(2) });
    }
    let n = m as f64;
    let mean_x = samples.iter().map(|s| s.neighbor_loc).sum::<f64>() / n;
    let mean_y = samples.iter().map(|s| s.target_loc).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for s in samples {
        let dx = s.neighbor_loc - mean_x;
        sxx += dx * dx;
        sxy += dx * (s.target_loc - mean_y);
    }
    if sxx <= 1e-12 * n * (1.0 + mean_x * mean_x) {
        return Err(RlaError::DegenerateRegressor);
    }
    let c1 = sxy / sxx;
    let c0 = mean_y - c1 * mean_x;
    Ok(PairModel { c0, c1, var: residual_var(samples, c0, c1), m })
}

/// Constant-offset model `target = neighbor + c0`, used when the neighbor
/// did not move enough to fit a slope.
pub fn fit_offset_model(samples: &[PairSample], m_min: usize) -> Result<PairModel, RlaError> {
    let m = samples.len();
    if m < m_min.max(1) {
        return Err(RlaError::InsufficientHistory { have: m, need: m_min.max(1) });
    }
    let c0 = samples.iter().map(|s| s.target_loc - s.neighbor_loc).sum::<f64>() / m as f64;
    Ok(PairModel { c0, c1: 1.0, var: residual_var(samples, c0, 1.0), m })
}

fn residual_var(samples: &[PairSample], c0: f64, c1: f64) -> f64 {
    samples
        .iter()
        .map(|s| {
            let e = s.target_loc - (c0 + c1 * s.neighbor_loc);
            e * e
        })
        .sum::<f64>()
        / samples.len() as f64
}

pub fn estimate_from_neighbor(model: &PairModel, neighbor_loc: f64, var_floor: f64) -> Result<Gaussian1D, RlaError> {
    if !neighbor_loc.is_finite() {
        return Err(RlaError::InvalidInput(format!("neighbor location {neighbor_loc}")));
    }
    Ok(Gaussian1D { mu: model.c0 + model.c1 * neighbor_loc, var: model.var.max(var_floor) })
}

/// Product-of-Gaussians fusion: precisions add, means are precision-weighted.
pub fn fuse_estimates(estimates: &[Gaussian1D]) -> Result<Gaussian1D, RlaError> {
    if estimates.is_empty() {
        return Err(RlaError::NoEstimates);
    }
    if let [only] = estimates {
        return Ok(*only);
    }
    let mut precision = 0.0;
    let mut weighted = 0.0;
    for g in estimates {
        if !(g.var > 0.0 && g.var.is_finite() && g.mu.is_finite()) {
            return Err(RlaError::InvalidInput(format!("gaussian ({}, {})", g.mu, g.var)));
        }
        precision += 1.0 / g.var;
        weighted += g.mu / g.var;
    }
    let var = 1.0 / precision;
    Ok(Gaussian1D { mu: var * weighted, var })
}

/// Proxy observation for a dormant track.
#[derive(Debug, Clone, PartialEq)]
pub struct RlaProxy {
    pub center: (f64, f64),
    pub x: Gaussian1D,
    pub y: Gaussian1D,
    pub neighbors: Vec<TrackId>,
}

fn axis_estimate(
    target: TrackId,
    neighbors: &[TrackId],
    histories: &PairHistories,
    active: &BTreeMap<TrackId, (f64, f64)>,
    axis: Axis,
    cfg: &RlaConfig,
) -> Option<Gaussian1D> {
    let estimates: Vec<Gaussian1D> = neighbors
        .iter()
        .filter_map(|n| {
            let samples = histories.get(target, *n)?.samples(axis);
            let model = match fit_pair_model(&samples, cfg.m_min) {
                Err(RlaError::DegenerateRegressor) => fit_offset_model(&samples, cfg.m_min).ok()?,
                other => other.ok()?,
            };
            estimate_from_neighbor(&model, axis.pick(active[n]), cfg.var_floor).ok()
        })
        .collect();
    fuse_estimates(&estimates).ok()
}

/// Estimates a dormant track's center from its top-`k` ranked neighbors that
/// are active now and have at least `m_min` samples. `None` when no neighbor
/// qualifies.
pub fn rla_estimate(
    target: TrackId,
    frame: u32,
    histories: &PairHistories,
    active: &BTreeMap<TrackId, (f64, f64)>,
    cfg: &RlaConfig,
) -> Option<RlaProxy> {
    let neighbors: Vec<TrackId> = histories
        .rank_neighbors(target, frame)
        .into_iter()
        .filter(|n| active.contains_key(n) && histories.get(target, *n).is_some_and(|h| h.len() >= cfg.m_min))
        .take(cfg.k)
        .collect();
    if neighbors.is_empty() {
        return None;
    }
    let x = axis_estimate(target, &neighbors, histories, active, Axis::X, cfg)?;
    let y = axis_estimate(target, &neighbors, histories, active, Axis::Y, cfg)?;
    Some(RlaProxy { center: (x.mu, y.mu), x, y, neighbors })
}
