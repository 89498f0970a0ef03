//! Dense optical flow: the `.flo` container, box velocity sampling and a
//! synthetic flow source.
//!
//! A field for frame `l` holds the per-pixel displacement from frame `l - 1`
//! to frame `l`, indexed by pixel positions in frame `l - 1`. Frame 1 has no
//! field.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::geometry::BBox;

/// `"PIEH"` read as a little-endian `f32`.
pub const FLO_MAGIC: f32 = 202021.25;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("not a .flo file (bad magic)")]
    NotAFlowFile,
    #[error("truncated flow payload: expected {expected} bytes, got {actual}")]
    TruncatedFlow { expected: usize, actual: usize },
    #[error("corrupt flow: {0}")]
    CorruptFlow(String),
    #[error("sample center ({cx}, {cy}) is outside the {width}x{height} field")]
    OutOfField { cx: f64, cy: f64, width: usize, height: usize },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Read access to a per-pixel velocity grid.
pub trait DenseFlow {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    /// Velocity at pixel `(x, y)`; callers keep indices in bounds.
    fn at(&self, x: usize, y: usize) -> (f32, f32);
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    u: Vec<f32>,
    v: Vec<f32>,
}

impl FlowField {
    pub fn new(width: usize, height: usize, u: Vec<f32>, v: Vec<f32>) -> Result<Self, FlowError> {
        if width == 0 || height == 0 {
            return Err(FlowError::CorruptFlow(format!("empty field {width}x{height}")));
        }
        let n = width * height;
        if u.len() != n || v.len() != n {
            return Err(FlowError::CorruptFlow(format!(
                "grid sizes {}/{} do not match {width}x{height}",
                u.len(),
                v.len()
            )));
        }
        if u.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(FlowError::CorruptFlow("non-finite value".into()));
        }
        Ok(Self { width, height, u, v })
    }

    pub fn constant(width: usize, height: usize, u: f32, v: f32) -> Self {
        let n = width * height;
        Self { width, height, u: vec![u; n], v: vec![v; n] }
    }

    pub fn u(&self) -> &[f32] {
        &self.u
    }

    pub fn v(&self) -> &[f32] {
        &self.v
    }
}

impl DenseFlow for FlowField {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    #[inline]
    fn at(&self, x: usize, y: usize) -> (f32, f32) {
        let i = y * self.width + x;
        (self.u[i], self.v[i])
    }
}

pub fn read_flow_file(bytes: &[u8]) -> Result<FlowField, FlowError> {
    if bytes.len() < 4 {
        return Err(FlowError::TruncatedFlow { expected: 12, actual: bytes.len() });
    }
    let word = |i: usize| [bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]];
    if f32::from_le_bytes(word(0)) != FLO_MAGIC {
        return Err(FlowError::NotAFlowFile);
    }
    if bytes.len() < 12 {
        return Err(FlowError::TruncatedFlow { expected: 12, actual: bytes.len() });
    }
    let width = i32::from_le_bytes(word(4));
    let height = i32::from_le_bytes(word(8));
    if width <= 0 || height <= 0 {
        return Err(FlowError::CorruptFlow(format!("bad dimensions {width}x{height}")));
    }
    let (width, height) = (width as usize, height as usize);
    let n = width
        .checked_mul(height)
        .ok_or_else(|| FlowError::CorruptFlow("dimensions overflow".into()))?;
    let expected = 12 + n * 8;
    if bytes.len() < expected {
        return Err(FlowError::TruncatedFlow { expected, actual: bytes.len() });
    }
    let mut u = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for px in bytes[12..expected].chunks_exact(8) {
        u.push(f32::from_le_bytes([px[0], px[1], px[2], px[3]]));
        v.push(f32::from_le_bytes([px[4], px[5], px[6], px[7]]));
    }
    FlowField::new(width, height, u, v)
}

pub fn write_flow_file(field: &FlowField) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + field.u.len() * 8);
    out.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    out.extend_from_slice(&(field.width as i32).to_le_bytes());
    out.extend_from_slice(&(field.height as i32).to_le_bytes());
    for (u, v) in field.u.iter().zip(&field.v) {
        out.extend_from_slice(&u.to_le_bytes());
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Clamped 3-pixel span around `c` on an axis of length `len`. When the
/// window misses the field entirely the nearest edge pixel is used.
fn window(c: i64, len: usize) -> (usize, usize) {
    let last = len as i64 - 1;
    let lo = (c - 1).max(0);
    let hi = (c + 1).min(last);
    if lo > hi {
        let e = c.clamp(0, last) as usize;
        (e, e)
    } else {
        (lo as usize, hi as usize)
    }
}

/// Mean velocity over the 3×3 window centered on the rounded box center.
pub fn sample_box_velocity<F: DenseFlow + ?Sized>(field: &F, cx: f64, cy: f64) -> Result<(f64, f64), FlowError> {
    let (w, h) = (field.width(), field.height());
    let out = || FlowError::OutOfField { cx, cy, width: w, height: h };
    if !(cx.is_finite() && cy.is_finite()) {
        return Err(out());
    }
    let (px, py) = (cx.round(), cy.round());
    if px < -3.0 || py < -3.0 || px > (w as f64 - 1.0) + 3.0 || py > (h as f64 - 1.0) + 3.0 {
        return Err(out());
    }
    let (x0, x1) = window(px as i64, w);
    let (y0, y1) = window(py as i64, h);
    let (mut su, mut sv) = (0.0f64, 0.0f64);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let (u, v) = field.at(x, y);
            su += u as f64;
            sv += v as f64;
        }
    }
    let n = ((x1 - x0 + 1) * (y1 - y0 + 1)) as f64;
    Ok((su / n, sv / n))
}

/// A region moving with its own velocity on top of the global pan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionLayer {
    pub region: BBox,
    pub local: (f64, f64),
}

/// Scene motion for one frame transition: a global pan plus per-object
/// local motions. Later layers paint over earlier ones.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneMotion {
    pub pan: (f64, f64),
    pub layers: Vec<MotionLayer>,
}

/// Synthetic flow evaluated on demand, pixel-identical to the rasterized
/// [`synthetic_flow`] output.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFlow {
    pub width: usize,
    pub height: usize,
    pub motion: SceneMotion,
}

impl DenseFlow for SyntheticFlow {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn at(&self, x: usize, y: usize) -> (f32, f32) {
        let (px, py) = (x as f64, y as f64);
        let (pu, pv) = self.motion.pan;
        match self.motion.layers.iter().rev().find(|l| l.region.contains(px, py)) {
            Some(l) => ((pu + l.local.0) as f32, (pv + l.local.1) as f32),
            None => (pu as f32, pv as f32),
        }
    }
}

pub fn synthetic_flow(motion: &SceneMotion, width: usize, height: usize) -> FlowField {
    let view = SyntheticFlow { width, height, motion: motion.clone() };
    let (pu, pv) = (motion.pan.0 as f32, motion.pan.1 as f32);
    let n = width * height;
    let mut u = vec![pu; n];
    let mut v = vec![pv; n];
    for layer in &motion.layers {
        let r = &layer.region;
        // Pixel centers at integer coordinates inside [left, right).
        let x0 = r.left.ceil().max(0.0) as usize;
        let y0 = r.top.ceil().max(0.0) as usize;
        let x1 = (r.right().ceil().max(0.0) as usize).min(width);
        let y1 = (r.bottom().ceil().max(0.0) as usize).min(height);
        for y in y0..y1 {
            for x in x0..x1 {
                let (a, b) = view.at(x, y);
                u[y * width + x] = a;
                v[y * width + x] = b;
            }
        }
    }
    FlowField { width, height, u, v }
}

/// Supplies the flow field for the transition into `frame`.
pub trait FlowProvider {
    type Field: DenseFlow;
    /// `Ok(None)` means no motion information for this frame.
    fn field_into(&mut self, frame: u32) -> Result<Option<Self::Field>, FlowError>;
}

/// Provider with no flow at all; tracks fall back to identity motion.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoFlow;

impl FlowProvider for NoFlow {
    type Field = FlowField;
    fn field_into(&mut self, _frame: u32) -> Result<Option<FlowField>, FlowError> {
        Ok(None)
    }
}

/// Reads `%06d.flo` files from a directory; file `N` is the transition into
/// frame `N`.
#[derive(Debug, Clone)]
pub struct FlowDir {
    dir: PathBuf,
}

impl FlowDir {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn path_for(&self, frame: u32) -> PathBuf {
        flow_file_path(&self.dir, frame)
    }
}

pub fn flow_file_path(dir: &Path, frame: u32) -> PathBuf {
    dir.join(format!("{frame:06}.flo"))
}

impl FlowProvider for FlowDir {
    type Field = FlowField;
    fn field_into(&mut self, frame: u32) -> Result<Option<FlowField>, FlowError> {
        if frame <= 1 {
            return Ok(None);
        }
        let path = self.path_for(frame);
        let bytes = fs::read(&path).map_err(|source| FlowError::Io { path: path.clone(), source })?;
        read_flow_file(&bytes).map(Some)
    }
}

/// In-memory fields indexed by frame (index 0 is frame 1).
#[derive(Debug, Clone, Default)]
pub struct FlowSequence {
    pub fields: Vec<Option<FlowField>>,
}

impl FlowProvider for FlowSequence {
    type Field = FlowField;
    fn field_into(&mut self, frame: u32) -> Result<Option<FlowField>, FlowError> {
        Ok(self.fields.get(frame as usize - 1).cloned().flatten())
    }
}
