//! Frame-by-frame tracker: predict, associate, update, re-identify dormant
//! tracks from their neighbors, spawn, refine, and count.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assoc::{associate_two_stage, AssocConfig};
use crate::filters::{FilterConfig, FilterError, KalmanSW, ParticleSet};
use crate::flow::{sample_box_velocity, DenseFlow, FlowError, FlowProvider};
use crate::geometry::{box_from_det_state, BBox, Detection, SequenceMeta};
use crate::mot::ResultEntry;
use crate::rla::{rla_estimate, PairHistories, RlaConfig};

/// Track identity. Assigned in increasing order, never reused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TrackId(pub u64);

impl fmt::Display for TrackId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error)]
pub enum TrackerError {
    #[error("frame {got} does not follow frame {last}")]
    SequenceError { last: u32, got: u32 },
    #[error("flow field is {got_w}x{got_h}, sequence is {want_w}x{want_h}")]
    InvalidFlow { got_w: usize, got_h: usize, want_w: u32, want_h: u32 },
    #[error("invalid tracker config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackStatus {
    Active,
    /// Consecutive frames without a detection.
    Dormant(u32),
    Removed,
}

#[derive(Debug, Clone)]
pub struct Track {
    pub id: TrackId,
    pub status: TrackStatus,
    pub particles: ParticleSet,
    pub size: KalmanSW,
    pub hits: u32,
    pub born: u32,
    pub last_matched: u32,
    /// Score of the last matched detection.
    pub conf: f64,
}

impl Track {
    pub fn center(&self) -> (f64, f64) {
        self.particles.estimate()
    }

    /// Box from the particle estimate and the size filter, with size and
    /// width kept at least one pixel.
    pub fn bbox(&self) -> BBox {
        let (cx, cy) = self.center();
        let w = self.size.width().max(1.0);
        let s = self.size.size().max(w);
        box_from_det_state(cx, cy, s, w).expect("clamped state is valid")
    }

    pub fn is_dormant(&self) -> bool {
        matches!(self.status, TrackStatus::Dormant(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    /// Frames a track may stay dormant before removal.
    pub dormant_max: u32,
    /// Matches needed before a track is emitted and counted.
    pub confirm_hits: u32,
    /// Remove tracks whose estimated center leaves the image.
    pub remove_out_of_frame: bool,
    pub filter: FilterConfig,
    pub assoc: AssocConfig,
    pub rla: RlaConfig,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            dormant_max: 100,
            confirm_hits: 2,
            remove_out_of_frame: true,
            filter: FilterConfig::default(),
            assoc: AssocConfig::default(),
            rla: RlaConfig::default(),
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<(), TrackerError> {
        if self.dormant_max < 1 {
            return Err(TrackerError::InvalidConfig("dormant_max must be at least 1".into()));
        }
        if self.confirm_hits < 1 {
            return Err(TrackerError::InvalidConfig("confirm_hits must be at least 1".into()));
        }
        if self.rla.m_min < 2 || !(self.rla.var_floor > 0.0) {
            return Err(TrackerError::InvalidConfig("rla needs m_min >= 2 and var_floor > 0".into()));
        }
        self.filter.validate()?;
        self.assoc.validate().map_err(TrackerError::InvalidConfig)
    }

    pub fn from_toml(text: &str) -> Result<Self, TrackerError> {
        let cfg: Self = toml::from_str(text).map_err(|e| TrackerError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// What one call to [`Tracker::step`] produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameOutput {
    pub frame: u32,
    /// Confirmed active tracks, ordered by id.
    pub rows: Vec<ResultEntry>,
    /// Tracks matched this frame.
    pub active: Vec<TrackId>,
    /// Live tracks left without a detection this frame.
    pub dormant: Vec<TrackId>,
    /// Dormant tracks updated from a neighbor proxy.
    pub proxied: Vec<TrackId>,
    pub spawned: Vec<TrackId>,
    pub removed: Vec<TrackId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingResult {
    pub rows: Vec<ResultEntry>,
    /// Distinct ids that reached `confirm_hits`.
    pub unique_count: usize,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-track RNG seed; depends only on the run seed and the id so that runs
/// differing only in dormant handling stay in lockstep.
pub fn track_seed(seed: u64, id: TrackId) -> u64 {
    splitmix64(splitmix64(seed) ^ id.0)
}

pub struct Tracker {
    meta: SequenceMeta,
    cfg: TrackerConfig,
    seed: u64,
    tracks: BTreeMap<TrackId, Track>,
    histories: PairHistories,
    next_id: u64,
    last_frame: u32,
    confirmed: BTreeSet<TrackId>,
}

impl Tracker {
    pub fn new(meta: SequenceMeta, cfg: TrackerConfig, seed: u64) -> Result<Self, TrackerError> {
        cfg.validate()?;
        let histories = PairHistories::new(cfg.rla.max_history);
        Ok(Self {
            meta,
            cfg,
            seed,
            tracks: BTreeMap::new(),
            histories,
            next_id: 1,
            last_frame: 0,
            confirmed: BTreeSet::new(),
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    pub fn tracks(&self) -> impl Iterator<Item = &Track> {
        self.tracks.values()
    }

    pub fn track(&self, id: TrackId) -> Option<&Track> {
        self.tracks.get(&id)
    }

    pub fn histories(&self) -> &PairHistories {
        &self.histories
    }

    pub fn unique_count(&self) -> usize {
        self.confirmed.len()
    }

    pub fn step<F: DenseFlow + ?Sized>(
        &mut self,
        frame: u32,
        flow: Option<&F>,
        detections: &[Detection],
    ) -> Result<FrameOutput, TrackerError> {
        if frame <= self.last_frame {
            return Err(TrackerError::SequenceError { last: self.last_frame, got: frame });
        }
        if let Some(f) = flow {
            if f.width() != self.meta.image_width as usize || f.height() != self.meta.image_height as usize {
                return Err(TrackerError::InvalidFlow {
                    got_w: f.width(),
                    got_h: f.height(),
                    want_w: self.meta.image_width,
                    want_h: self.meta.image_height,
                });
            }
        }
        self.last_frame = frame;
        let mut out = FrameOutput { frame, ..FrameOutput::default() };

        // Predict.
        for t in self.tracks.values_mut() {
            let velocity = match flow {
                Some(f) => {
                    let (cx, cy) = t.center();
                    match sample_box_velocity(f, cx, cy) {
                        Ok(v) => v,
                        Err(FlowError::OutOfField { .. }) => (0.0, 0.0),
                        Err(e) => return Err(e.into()),
                    }
                }
                None => (0.0, 0.0),
            };
            t.particles.predict(velocity, &self.cfg.filter)?;
            t.size.predict();
        }

        // Associate.
        let predicted: Vec<(TrackId, BBox)> = self.tracks.values().map(|t| (t.id, t.bbox())).collect();
        let assoc = associate_two_stage(&predicted, detections, &self.cfg.assoc);

        // Update matched tracks.
        for &(id, d) in &assoc.matches {
            let det = &detections[d];
            let t = self.tracks.get_mut(&id).expect("matched track is live");
            t.particles.update(det.center(), &self.cfg.filter);
            t.size.update(det.s, det.w)?;
            t.status = TrackStatus::Active;
            t.hits += 1;
            t.last_matched = frame;
            t.conf = det.conf;
            if t.hits >= self.cfg.confirm_hits {
                self.confirmed.insert(id);
            }
            out.active.push(id);
        }
        out.active.sort_unstable();

        // Dormant tracks: neighbor proxy when available.
        let active_now: BTreeMap<TrackId, (f64, f64)> =
            out.active.iter().map(|id| (*id, self.tracks[id].center())).collect();
        let mut dormant = assoc.dormant;
        dormant.sort_unstable();
        for &id in &dormant {
            let proxy = if self.cfg.rla.enabled {
                rla_estimate(id, frame, &self.histories, &active_now, &self.cfg.rla)
            } else {
                None
            };
            let t = self.tracks.get_mut(&id).expect("dormant track is live");
            if let Some(p) = proxy {
                t.particles.update(p.center, &self.cfg.filter);
                out.proxied.push(id);
            }
            t.status = match t.status {
                TrackStatus::Dormant(n) => TrackStatus::Dormant(n + 1),
                _ => TrackStatus::Dormant(1),
            };
        }
        out.dormant = dormant;

        // Initialize.
        let mut fresh: Vec<usize> =
            assoc.unmatched_high.into_iter().filter(|&d| detections[d].conf >= self.cfg.assoc.conf_init).collect();
        fresh.sort_unstable();
        for d in fresh {
            let id = self.spawn(frame, &detections[d])?;
            out.spawned.push(id);
        }

        // Refine.
        out.removed = self.refine();

        // Record neighbor geometry among active tracks.
        if self.cfg.rla.enabled {
            let active: Vec<(TrackId, (f64, f64))> = self
                .tracks
                .values()
                .filter(|t| t.status == TrackStatus::Active)
                .map(|t| (t.id, t.center()))
                .collect();
            self.histories.record_neighbors(&active, frame, self.cfg.rla.k);
        }

        // Emit.
        out.rows = self
            .tracks
            .values()
            .filter(|t| t.status == TrackStatus::Active && t.hits >= self.cfg.confirm_hits)
            .map(|t| ResultEntry { frame, id: t.id.0, bbox: t.bbox(), conf: t.conf })
            .collect();
        Ok(out)
    }

    fn spawn(&mut self, frame: u32, det: &Detection) -> Result<TrackId, TrackerError> {
        let id = TrackId(self.next_id);
        self.next_id += 1;
        let track = Track {
            id,
            status: TrackStatus::Active,
            particles: ParticleSet::new(det.center(), &self.cfg.filter, track_seed(self.seed, id)),
            size: KalmanSW::new(det.s, det.w, &self.cfg.filter)?,
            hits: 1,
            born: frame,
            last_matched: frame,
            conf: det.conf,
        };
        if self.cfg.confirm_hits <= 1 {
            self.confirmed.insert(id);
        }
        self.tracks.insert(id, track);
        Ok(id)
    }

    /// Removes tracks dormant for `dormant_max` frames and tracks whose
    /// center left the image. Returns the removed ids.
    pub fn refine(&mut self) -> Vec<TrackId> {
        let removed = refine(&mut self.tracks, &self.meta, &self.cfg);
        for t in &removed {
            self.histories.forget(t.id);
        }
        removed.into_iter().map(|t| t.id).collect()
    }
}

/// Removes and returns (marked `Removed`) every track that exceeded the
/// dormancy limit or whose estimated center lies outside the image.
pub fn refine(tracks: &mut BTreeMap<TrackId, Track>, meta: &SequenceMeta, cfg: &TrackerConfig) -> Vec<Track> {
    let (w, h) = (meta.image_width as f64, meta.image_height as f64);
    let doomed: Vec<TrackId> = tracks
        .values()
        .filter(|t| {
            let stale = matches!(t.status, TrackStatus::Dormant(n) if n >= cfg.dormant_max);
            let (cx, cy) = t.center();
            let outside = !(0.0..=w).contains(&cx) || !(0.0..=h).contains(&cy);
            stale || (cfg.remove_out_of_frame && outside)
        })
        .map(|t| t.id)
        .collect();
    doomed
        .into_iter()
        .map(|id| {
            let mut t = tracks.remove(&id).expect("listed track exists");
            t.status = TrackStatus::Removed;
            t
        })
        .collect()
}

/// Runs the tracker over every frame of a sequence.
pub fn run_sequence<P: FlowProvider>(
    meta: &SequenceMeta,
    provider: &mut P,
    detections_by_frame: &[Vec<Detection>],
    cfg: &TrackerConfig,
    seed: u64,
) -> Result<TrackingResult, TrackerError> {
    let mut tracker = Tracker::new(meta.clone(), cfg.clone(), seed)?;
    let mut rows = Vec::new();
    for frame in 1..=meta.frame_count {
        let field = provider.field_into(frame)?;
        let dets = detections_by_frame.get(frame as usize - 1).map(Vec::as_slice).unwrap_or(&[]);
        let out = tracker.step(frame, field.as_ref(), dets)?;
        rows.extend(out.rows);
    }
    Ok(TrackingResult { rows, unique_count: tracker.unique_count() })
}
