//! Detector-agnostic multiple object tracking for panning cameras.
//!
//! Each frame, track centers are propagated by a particle filter driven by
//! dense optical flow, box size and width by a small Kalman filter, and
//! detections are matched in two confidence stages. Tracks that lose their
//! detection are re-anchored on their frequently co-visible neighbors
//! through per-pair linear location models ([`rla`]).
//!
//! Around the tracker sit MOT17-style file IO ([`mot`]), `.flo` flow files
//! ([`flow`]), counting and CLEAR/identity metrics ([`eval`]) and a
//! synthetic scene generator ([`synth`]).

pub mod assoc;
pub mod cli;
pub mod eval;
pub mod filters;
pub mod flow;
pub mod geometry;
pub mod mot;
pub mod rla;
pub mod synth;
pub mod tracker;

pub use geometry::{BBox, Detection, SequenceMeta};
pub use tracker::{run_sequence, TrackId, Tracker, TrackerConfig, TrackingResult};
