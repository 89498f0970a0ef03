//! MOT17-style sequence files: `seqinfo.ini`, `det/det.txt`, `gt/gt.txt`
//! and tracker result files.
//!
//! Input accepts LF or CRLF line endings and blank lines; output always uses
//! LF and six decimals for real-valued columns.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{BBox, Detection, SequenceMeta};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MotError {
    #[error("malformed seqinfo: {0}")]
    MalformedSeqInfo(String),
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("invalid box at line {line}")]
    InvalidBox { line: usize },
}

/// A ground-truth row. `flag == 0` rows are kept; the evaluator drops them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GtEntry {
    pub frame: u32,
    pub id: u64,
    pub bbox: BBox,
    pub flag: u8,
    pub class: i32,
    pub visibility: f64,
}

/// A tracker output row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResultEntry {
    pub frame: u32,
    pub id: u64,
    pub bbox: BBox,
    pub conf: f64,
}

/// Anything carrying a frame index, an identity and a box.
pub trait FrameBox {
    fn frame(&self) -> u32;
    fn id(&self) -> u64;
    fn bbox(&self) -> &BBox;
}

impl FrameBox for GtEntry {
    fn frame(&self) -> u32 {
        self.frame
    }
    fn id(&self) -> u64 {
        self.id
    }
    fn bbox(&self) -> &BBox {
        &self.bbox
    }
}

impl FrameBox for ResultEntry {
    fn frame(&self) -> u32 {
        self.frame
    }
    fn id(&self) -> u64 {
        self.id
    }
    fn bbox(&self) -> &BBox {
        &self.bbox
    }
}

pub fn parse_seqinfo(text: &str) -> Result<SequenceMeta, MotError> {
    let mut in_sequence = false;
    let mut seen_section = false;
    let mut name = String::new();
    let (mut width, mut height, mut length, mut rate) = (None, None, None, None);

    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with(';') || line.starts_with('#') {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            in_sequence = line[1..line.len() - 1].trim().eq_ignore_ascii_case("sequence");
            seen_section |= in_sequence;
            continue;
        }
        if !in_sequence {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        let positive = |v: &str| -> Result<u32, MotError> {
            match v.parse::<u32>() {
                Ok(n) if n > 0 => Ok(n),
                _ => Err(MotError::MalformedSeqInfo(format!("{key} must be a positive integer, got {v:?}"))),
            }
        };
        match key {
            "name" => name = value.to_string(),
            "imWidth" => width = Some(positive(value)?),
            "imHeight" => height = Some(positive(value)?),
            "seqLength" => length = Some(positive(value)?),
            "frameRate" => {
                let r: f64 = value
                    .parse()
                    .map_err(|_| MotError::MalformedSeqInfo(format!("frameRate is not a number: {value:?}")))?;
                if !(r > 0.0 && r.is_finite()) {
                    return Err(MotError::MalformedSeqInfo(format!("frameRate must be positive, got {r}")));
                }
                rate = Some(r);
            }
            _ => {}
        }
    }

    if !seen_section {
        return Err(MotError::MalformedSeqInfo("missing [Sequence] section".into()));
    }
    let missing = |k: &str| MotError::MalformedSeqInfo(format!("missing {k}"));
    Ok(SequenceMeta {
        name,
        frame_count: length.ok_or_else(|| missing("seqLength"))?,
        image_width: width.ok_or_else(|| missing("imWidth"))?,
        image_height: height.ok_or_else(|| missing("imHeight"))?,
        frame_rate: rate.unwrap_or(30.0),
    })
}

pub fn write_seqinfo(meta: &SequenceMeta) -> String {
    format!(
        "[Sequence]\nname={}\nimDir=img1\nframeRate={}\nseqLength={}\nimWidth={}\nimHeight={}\nimExt=.jpg\n",
        meta.name, meta.frame_rate, meta.frame_count, meta.image_width, meta.image_height
    )
}

/// Splits CSV text into `(line_no, fields)` skipping blank lines.
fn rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.trim();
        if line.is_empty() {
            None
        } else {
            Some((i + 1, line.split(',').map(str::trim).collect()))
        }
    })
}

fn field<T: std::str::FromStr>(fields: &[&str], idx: usize, line: usize, what: &str) -> Result<T, MotError> {
    fields[idx].parse::<T>().map_err(|_| MotError::MalformedRow {
        line,
        reason: format!("{what} is not numeric: {:?}", fields[idx]),
    })
}

fn frame_field(fields: &[&str], line: usize) -> Result<u32, MotError> {
    let f: f64 = field(fields, 0, line, "frame")?;
    if f < 1.0 || f.fract() != 0.0 || f > u32::MAX as f64 {
        return Err(MotError::MalformedRow { line, reason: format!("frame must be a positive integer, got {f}") });
    }
    Ok(f as u32)
}

fn id_field(fields: &[&str], line: usize) -> Result<u64, MotError> {
    let id: f64 = field(fields, 1, line, "id")?;
    if id < 1.0 || id.fract() != 0.0 {
        return Err(MotError::MalformedRow { line, reason: format!("id must be a positive integer, got {id}") });
    }
    Ok(id as u64)
}

fn box_fields(fields: &[&str], line: usize) -> Result<BBox, MotError> {
    let l: f64 = field(fields, 2, line, "left")?;
    let t: f64 = field(fields, 3, line, "top")?;
    let w: f64 = field(fields, 4, line, "width")?;
    let h: f64 = field(fields, 5, line, "height")?;
    if !(l.is_finite() && t.is_finite()) {
        return Err(MotError::MalformedRow { line, reason: "non-finite coordinate".into() });
    }
    BBox::new(l, t, w, h).map_err(|_| MotError::InvalidBox { line })
}

fn require_columns(fields: &[&str], n: usize, line: usize) -> Result<(), MotError> {
    if fields.len() < n {
        return Err(MotError::MalformedRow { line, reason: format!("expected at least {n} columns, got {}", fields.len()) });
    }
    Ok(())
}

/// Parses `frame,-1,left,top,w,h,conf,...` rows. The result is stably sorted
/// by frame.
pub fn parse_detections(text: &str) -> Result<Vec<Detection>, MotError> {
    let mut out = Vec::new();
    for (line, f) in rows(text) {
        require_columns(&f, 7, line)?;
        let frame = frame_field(&f, line)?;
        let bbox = box_fields(&f, line)?;
        let conf: f64 = field(&f, 6, line, "confidence")?;
        if !conf.is_finite() {
            return Err(MotError::MalformedRow { line, reason: "non-finite confidence".into() });
        }
        out.push(Detection::from_box(frame, &bbox, conf).map_err(|_| MotError::InvalidBox { line })?);
    }
    out.sort_by_key(|d| d.frame);
    Ok(out)
}

/// Parses `frame,id,left,top,w,h,flag,class,visibility` rows. `class` and
/// `visibility` default to 1 when absent.
pub fn parse_ground_truth(text: &str) -> Result<Vec<GtEntry>, MotError> {
    let mut out = Vec::new();
    for (line, f) in rows(text) {
        require_columns(&f, 7, line)?;
        let frame = frame_field(&f, line)?;
        let id = id_field(&f, line)?;
        let bbox = box_fields(&f, line)?;
        let flag: f64 = field(&f, 6, line, "flag")?;
        let flag = if flag == 0.0 { 0 } else { 1 };
        let class = if f.len() > 7 { field::<f64>(&f, 7, line, "class")? as i32 } else { 1 };
        let visibility = if f.len() > 8 { field::<f64>(&f, 8, line, "visibility")? } else { 1.0 };
        if !(0.0..=1.0).contains(&visibility) {
            return Err(MotError::MalformedRow { line, reason: format!("visibility {visibility} outside [0, 1]") });
        }
        out.push(GtEntry { frame, id, bbox, flag, class, visibility });
    }
    out.sort_by_key(|g| g.frame);
    Ok(out)
}

/// Parses tracker output rows `frame,id,left,top,w,h,conf,...`.
pub fn parse_results(text: &str) -> Result<Vec<ResultEntry>, MotError> {
    let mut out = Vec::new();
    for (line, f) in rows(text) {
        require_columns(&f, 7, line)?;
        let frame = frame_field(&f, line)?;
        let id = id_field(&f, line)?;
        let bbox = box_fields(&f, line)?;
        let conf: f64 = field(&f, 6, line, "confidence")?;
        out.push(ResultEntry { frame, id, bbox, conf });
    }
    out.sort_by_key(|r| r.frame);
    Ok(out)
}

fn push_box(buf: &mut String, b: &BBox) {
    let _ = write!(buf, "{:.6},{:.6},{:.6},{:.6}", b.left, b.top, b.width, b.height);
}

/// Writes result rows sorted by `(frame, id)`.
pub fn write_results(entries: &[ResultEntry]) -> String {
    let mut sorted: Vec<&ResultEntry> = entries.iter().collect();
    sorted.sort_by_key(|e| (e.frame, e.id));
    let mut buf = String::with_capacity(sorted.len() * 64);
    for e in sorted {
        let _ = write!(buf, "{},{},", e.frame, e.id);
        push_box(&mut buf, &e.bbox);
        let _ = writeln!(buf, ",{:.6},-1,-1,-1", e.conf);
    }
    buf
}

/// Writes detection rows in input order (callers pass frame-sorted lists).
pub fn write_detections(detections: &[Detection]) -> String {
    let mut buf = String::with_capacity(detections.len() * 64);
    for d in detections {
        let _ = write!(buf, "{},-1,", d.frame);
        push_box(&mut buf, &d.bbox());
        let _ = writeln!(buf, ",{:.6},-1,-1,-1", d.conf);
    }
    buf
}

pub fn write_ground_truth(entries: &[GtEntry]) -> String {
    let mut sorted: Vec<&GtEntry> = entries.iter().collect();
    sorted.sort_by_key(|e| (e.frame, e.id));
    let mut buf = String::with_capacity(sorted.len() * 64);
    for e in sorted {
        let _ = write!(buf, "{},{},", e.frame, e.id);
        push_box(&mut buf, &e.bbox);
        let _ = writeln!(buf, ",{},{},{:.6}", e.flag, e.class, e.visibility);
    }
    buf
}

/// Groups frame-sorted detections into per-frame slices for frames
/// `1..=frame_count`.
pub fn detections_by_frame(detections: &[Detection], frame_count: u32) -> Vec<Vec<Detection>> {
    let mut frames = vec![Vec::new(); frame_count as usize];
    for d in detections {
        if d.frame >= 1 && d.frame <= frame_count {
            frames[(d.frame - 1) as usize].push(*d);
        }
    }
    frames
}
