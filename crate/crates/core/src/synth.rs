//! Deterministic synthetic sequences: a panning camera over objects that
//! drift and sway, with scripted occlusions and a simple detector noise model.
//!
//! Object `i` (0-based) of the config gets ground-truth id `i + 1`. Its
//! center at frame `f` is
//!
//! ```text
//! c(f) = c(1) + (pan + drift)·(f − 1) + A·(sin(2π(f − 1)/P + φ) − sin φ)
//! ```
//!
//! per axis, so expected positions are closed-form.

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::{flow_file_path, synthetic_flow, write_flow_file, FlowError, FlowProvider, MotionLayer, SceneMotion, SyntheticFlow};
use crate::geometry::{BBox, Detection, SequenceMeta};
use crate::mot::{detections_by_frame, write_detections, write_ground_truth, write_seqinfo, GtEntry};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid scene config: {0}")]
    InvalidConfig(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectConfig {
    /// Box at frame 1.
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
    /// Own motion on top of the pan (px/frame).
    #[serde(default)]
    pub drift: (f64, f64),
    /// Sway amplitude per axis (px).
    #[serde(default)]
    pub sway_amplitude: (f64, f64),
    /// Sway period (frames); 0 disables sway.
    #[serde(default)]
    pub sway_period: f64,
    #[serde(default)]
    pub sway_phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Occlusion {
    /// 1-based object index (the ground-truth id).
    pub object: u64,
    pub first: u32,
    pub last: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Center jitter std (px).
    pub center_std: f64,
    /// Width/height jitter std as a fraction of the true value.
    pub size_std: f64,
    pub dropout: f64,
    /// Probability a detection is "hard" and scored in `hard_conf`.
    pub hard_prob: f64,
    pub conf: (f64, f64),
    pub hard_conf: (f64, f64),
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { center_std: 0.0, size_std: 0.0, dropout: 0.0, hard_prob: 0.0, conf: (0.7, 1.0), hard_conf: (0.2, 0.6) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub frame_count: u32,
    pub image_width: u32,
    pub image_height: u32,
    #[serde(default = "default_rate")]
    pub frame_rate: f64,
    /// Camera pan as seen in the image (px/frame).
    #[serde(default)]
    pub pan: (f64, f64),
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub objects: Vec<ObjectConfig>,
    #[serde(default)]
    pub occlusions: Vec<Occlusion>,
}

fn default_name() -> String {
    "synth".into()
}

fn default_rate() -> f64 {
    30.0
}

impl SceneConfig {
    pub fn from_toml(text: &str) -> Result<Self, SynthError> {
        let cfg: Self = toml::from_str(text).map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scene config serializes")
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        if self.frame_count < 1 || self.image_width < 1 || self.image_height < 1 {
            return bad("frame_count and image size must be positive".into());
        }
        let n = &self.noise;
        for (name, p) in [("dropout", n.dropout), ("hard_prob", n.hard_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must be in [0, 1], got {p}"));
            }
        }
        for (name, (lo, hi)) in [("conf", n.conf), ("hard_conf", n.hard_conf)] {
            if !(lo <= hi && lo.is_finite() && hi.is_finite()) {
                return bad(format!("{name} range [{lo}, {hi}] is empty"));
            }
        }
        if !(n.center_std >= 0.0 && n.size_std >= 0.0) {
            return bad("noise std must be non-negative".into());
        }
        for (i, o) in self.objects.iter().enumerate() {
            if !(o.width > 0.0 && o.height > 0.0) || BBox::new(o.left, o.top, o.width, o.height).is_err() {
                return bad(format!("object {} has an invalid box", i + 1));
            }
            if o.sway_period < 0.0 {
                return bad(format!("object {} has a negative sway period", i + 1));
            }
        }
        for w in &self.occlusions {
            if w.object < 1 || w.object as usize > self.objects.len() {
                return bad(format!("occlusion names unknown object {}", w.object));
            }
            if w.first < 1 || w.first > w.last || w.last > self.frame_count {
                return bad(format!("occlusion window {}..={} outside 1..={}", w.first, w.last, self.frame_count));
            }
        }
        Ok(())
    }

    pub fn meta(&self) -> SequenceMeta {
        SequenceMeta {
            name: self.name.clone(),
            frame_count: self.frame_count,
            image_width: self.image_width,
            image_height: self.image_height,
            frame_rate: self.frame_rate,
        }
    }

    /// Closed-form center of object `index` (0-based) at `frame`.
    pub fn center(&self, index: usize, frame: u32) -> (f64, f64) {
        let o = &self.objects[index];
        let t = (frame - 1) as f64;
        let sway = |a: f64| {
            if o.sway_period > 0.0 {
                a * ((TAU * t / o.sway_period + o.sway_phase).sin() - o.sway_phase.sin())
            } else {
                0.0
            }
        };
        (
            o.left + o.width / 2.0 + (self.pan.0 + o.drift.0) * t + sway(o.sway_amplitude.0),
            o.top + o.height / 2.0 + (self.pan.1 + o.drift.1) * t + sway(o.sway_amplitude.1),
        )
    }

    pub fn bbox(&self, index: usize, frame: u32) -> BBox {
        let o = &self.objects[index];
        let (cx, cy) = self.center(index, frame);
        BBox { left: cx - o.width / 2.0, top: cy - o.height / 2.0, width: o.width, height: o.height }
    }

    pub fn occluded(&self, index: usize, frame: u32) -> bool {
        self.occlusions.iter().any(|w| w.object == index as u64 + 1 && (w.first..=w.last).contains(&frame))
    }

    fn in_frame(&self, b: &BBox) -> bool {
        b.left >= 0.0 && b.top >= 0.0 && b.right() <= self.image_width as f64 && b.bottom() <= self.image_height as f64
    }

    /// Objects whose ground truth exists at `frame`.
    pub fn visible(&self, index: usize, frame: u32) -> bool {
        !self.occluded(index, frame) && self.in_frame(&self.bbox(index, frame))
    }

    /// Motion for the transition into `frame` (≥ 2). Occluded objects are
    /// not painted, so their pixels carry the background pan.
    pub fn motion(&self, frame: u32) -> SceneMotion {
        let layers = (0..self.objects.len())
            .filter(|&i| !self.occluded(i, frame - 1))
            .map(|i| {
                let (a, b) = (self.center(i, frame - 1), self.center(i, frame));
                MotionLayer { region: self.bbox(i, frame - 1), local: (b.0 - a.0 - self.pan.0, b.1 - a.1 - self.pan.1) }
            })
            .collect();
        SceneMotion { pan: self.pan, layers }
    }
}

/// A generated sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub config: SceneConfig,
    pub meta: SequenceMeta,
    pub ground_truth: Vec<GtEntry>,
    pub detections: Vec<Detection>,
}

impl Scene {
    pub fn detections_by_frame(&self) -> Vec<Vec<Detection>> {
        detections_by_frame(&self.detections, self.meta.frame_count)
    }

    /// Lazily evaluated flow for every frame of the scene.
    pub fn flow(&self) -> SceneFlow<'_> {
        SceneFlow { config: &self.config }
    }

    /// Distinct ground-truth ids.
    pub fn object_count(&self) -> usize {
        let mut ids: Vec<u64> = self.ground_truth.iter().map(|g| g.id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }
}

/// Flow provider backed by the scene's closed-form motion.
#[derive(Debug, Clone, Copy)]
pub struct SceneFlow<'a> {
    config: &'a SceneConfig,
}

impl FlowProvider for SceneFlow<'_> {
    type Field = SyntheticFlow;
    fn field_into(&mut self, frame: u32) -> Result<Option<SyntheticFlow>, FlowError> {
        if frame <= 1 || frame > self.config.frame_count {
            return Ok(None);
        }
        Ok(Some(SyntheticFlow {
            width: self.config.image_width as usize,
            height: self.config.image_height as usize,
            motion: self.config.motion(frame),
        }))
    }
}

pub fn generate_scene(cfg: &SceneConfig) -> Result<Scene, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = &cfg.noise;
    let mut ground_truth = Vec::new();
    let mut detections = Vec::new();
    for frame in 1..=cfg.frame_count {
        for i in 0..cfg.objects.len() {
            if !cfg.visible(i, frame) {
                continue;
            }
            let b = cfg.bbox(i, frame);
            ground_truth.push(GtEntry { frame, id: i as u64 + 1, bbox: b, flag: 1, class: 1, visibility: 1.0 });

            // Fixed draw order per visible object keeps streams aligned
            // across noise settings.
            let drop = rng.random::<f64>() < n.dropout;
            let hard = rng.random::<f64>() < n.hard_prob;
            let u: f64 = rng.random();
            let z: [f64; 4] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
            if drop {
                continue;
            }
            let (lo, hi) = if hard { n.hard_conf } else { n.conf };
            let conf = lo + (hi - lo) * u;
            let w = (b.width * (1.0 + n.size_std * z[2])).max(1.0);
            let h = (b.height * (1.0 + n.size_std * z[3])).max(1.0);
            let (cx, cy) = b.center();
            let (cx, cy) = (cx + n.center_std * z[0], cy + n.center_std * z[1]);
            detections.push(Detection { frame, cx, cy, s: w * h, w, conf });
        }
    }
    Ok(Scene { config: cfg.clone(), meta: cfg.meta(), ground_truth, detections })
}

fn write(path: PathBuf, bytes: &[u8]) -> Result<(), SynthError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| SynthError::Io { path: parent.to_path_buf(), source })?;
    }
    fs::write(&path, bytes).map_err(|source| SynthError::Io { path, source })
}

/// Writes `seqinfo.ini`, `gt/gt.txt`, `det/det.txt` and `flow/%06d.flo`
/// (frames 2..=frame_count).
pub fn export_scene(scene: &Scene, dir: &Path) -> Result<(), SynthError> {
    write(dir.join("seqinfo.ini"), write_seqinfo(&scene.meta).as_bytes())?;
    write(dir.join("gt").join("gt.txt"), write_ground_truth(&scene.ground_truth).as_bytes())?;
    write(dir.join("det").join("det.txt"), write_detections(&scene.detections).as_bytes())?;
    let flow_dir = dir.join("flow");
    fs::create_dir_all(&flow_dir).map_err(|source| SynthError::Io { path: flow_dir.clone(), source })?;
    let (w, h) = (scene.meta.image_width as usize, scene.meta.image_height as usize);
    for frame in 2..=scene.meta.frame_count {
        let field = synthetic_flow(&scene.config.motion(frame), w, h);
        write(flow_file_path(&flow_dir, frame), &write_flow_file(&field))?;
    }
    Ok(())
}

/// A cluster of 4–6 objects drifting together across a panning view; one of
/// them is hidden for 50–80 frames.
pub fn occlusion_scene(seed: u64) -> SceneConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0cc1_u64);
    let count = rng.random_range(4..=6usize);
    let drift = (rng.random_range(1.3..1.8), 0.0);
    let objects = (0..count)
        .map(|i| {
            let col = (i % 3) as f64;
            let row = (i / 3) as f64;
            ObjectConfig {
                left: 60.0 + 70.0 * col + rng.random_range(-8.0..8.0),
                top: 70.0 + 90.0 * row + rng.random_range(-8.0..8.0),
                width: rng.random_range(28.0..36.0),
                height: rng.random_range(28.0..36.0),
                drift,
                sway_amplitude: (rng.random_range(1.0..3.0), rng.random_range(1.0..3.0)),
                sway_period: rng.random_range(30.0..60.0),
                sway_phase: rng.random_range(0.0..TAU),
            }
        })
        .collect();
    let first = rng.random_range(40..=55u32);
    let len = rng.random_range(50..=80u32);
    let object = rng.random_range(1..=count as u64);
    SceneConfig {
        name: format!("occlusion-{seed}"),
        frame_count: first + len + 25,
        image_width: 960,
        image_height: 320,
        frame_rate: 30.0,
        pan: (1.0, 0.0),
        seed,
        noise: NoiseConfig { center_std: 0.5, size_std: 0.02, dropout: 0.0, hard_prob: 0.05, ..NoiseConfig::default() },
        objects,
        occlusions: vec![Occlusion { object, first, last: first + len - 1 }],
    }
}

/// `count` non-overlapping objects (at most 50) that stay fully in view for
/// the whole sequence; no noise, no occlusion.
pub fn clean_scene(count: usize, seed: u64) -> SceneConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc1ea_u64);
    let (cols, rows) = (10usize, 5usize);
    let mut cells: Vec<usize> = (0..cols * rows).collect();
    // partial Fisher-Yates
    for i in 0..count.min(cells.len()) {
        let j = rng.random_range(i..cells.len());
        cells.swap(i, j);
    }
    let pan = (rng.random_range(-2.0..2.0), rng.random_range(-0.5..0.5));
    let objects = cells[..count.min(cells.len())]
        .iter()
        .map(|&c| ObjectConfig {
            left: 100.0 + 100.0 * (c % cols) as f64 + rng.random_range(0.0..30.0),
            top: 100.0 + 100.0 * (c / cols) as f64 + rng.random_range(0.0..30.0),
            width: rng.random_range(30.0..50.0),
            height: rng.random_range(30.0..50.0),
            drift: (0.0, 0.0),
            sway_amplitude: (rng.random_range(0.0..4.0), rng.random_range(0.0..4.0)),
            sway_period: rng.random_range(20.0..50.0),
            sway_phase: rng.random_range(0.0..TAU),
        })
        .collect();
    SceneConfig {
        name: format!("clean-{seed}"),
        frame_count: 30,
        image_width: 1200,
        image_height: 700,
        frame_rate: 30.0,
        pan,
        seed,
        noise: NoiseConfig::default(),
        objects,
        occlusions: vec![],
    }
}
