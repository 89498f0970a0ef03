//! Detection state, bounding boxes and sequence metadata.
//!
//! A detection is carried in center form `(cx, cy, s, w)` where `s` is the
//! box area and `w` its width; the height is recovered as `s / w`. MOT files
//! use corner form, so [`det_state_from_box`] and [`box_from_det_state`]
//! bridge the two.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid box: width {width} and height {height} must be positive and finite")]
    InvalidBox { width: f64, height: f64 },
    #[error("invalid state: size {size} and width {width} must be positive and finite")]
    InvalidState { size: f64, width: f64 },
}

/// Axis-aligned box in corner form (pixels).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
}

impl BBox {
    pub fn new(left: f64, top: f64, width: f64, height: f64) -> Result<Self, GeometryError> {
        let b = Self { left, top, width, height };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let finite = self.left.is_finite() && self.top.is_finite();
        if !(finite && self.width > 0.0 && self.height > 0.0)
            || !self.width.is_finite()
            || !self.height.is_finite()
        {
            return Err(GeometryError::InvalidBox { width: self.width, height: self.height });
        }
        Ok(())
    }

    #[inline]
    pub fn right(&self) -> f64 {
        self.left + self.width
    }

    #[inline]
    pub fn bottom(&self) -> f64 {
        self.top + self.height
    }

    #[inline]
    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    #[inline]
    pub fn center(&self) -> (f64, f64) {
        (self.left + self.width / 2.0, self.top + self.height / 2.0)
    }

    /// Whether the pixel center `(x, y)` lies inside the half-open box.
    #[inline]
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.left && x < self.right() && y >= self.top && y < self.bottom()
    }
}

/// One detector response in center/size/width form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    /// 1-based frame index.
    pub frame: u32,
    pub cx: f64,
    pub cy: f64,
    /// Box area in pixels².
    pub s: f64,
    /// Box width in pixels.
    pub w: f64,
    pub conf: f64,
}

impl Detection {
    pub fn from_box(frame: u32, b: &BBox, conf: f64) -> Result<Self, GeometryError> {
        let (cx, cy, s, w) = det_state_from_box(b)?;
        Ok(Self { frame, cx, cy, s, w, conf })
    }

    pub fn bbox(&self) -> BBox {
        // Invariants on s and w are upheld at construction.
        BBox {
            left: self.cx - self.w / 2.0,
            top: self.cy - (self.s / self.w) / 2.0,
            width: self.w,
            height: self.s / self.w,
        }
    }

    #[inline]
    pub fn center(&self) -> (f64, f64) {
        (self.cx, self.cy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceMeta {
    pub name: String,
    pub frame_count: u32,
    pub image_width: u32,
    pub image_height: u32,
    pub frame_rate: f64,
}

pub fn det_state_from_box(b: &BBox) -> Result<(f64, f64, f64, f64), GeometryError> {
    b.validate()?;
    let (cx, cy) = b.center();
    Ok((cx, cy, b.width * b.height, b.width))
}

pub fn box_from_det_state(cx: f64, cy: f64, s: f64, w: f64) -> Result<BBox, GeometryError> {
    if !(s > 0.0 && w > 0.0 && s.is_finite() && w.is_finite()) {
        return Err(GeometryError::InvalidState { size: s, width: w });
    }
    let height = s / w;
    Ok(BBox { left: cx - w / 2.0, top: cy - height / 2.0, width: w, height })
}

/// Intersection over union; 0 for disjoint boxes.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let iw = (a.right().min(b.right()) - a.left.max(b.left)).max(0.0);
    let ih = (a.bottom().min(b.bottom()) - a.top.max(b.top)).max(0.0);
    let inter = iw * ih;
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}
