//! IoU-based data association: cost matrices, a minimum-cost assignment
//! solver with a rejection threshold, and the two-stage high/low confidence
//! procedure.

use serde::{Deserialize, Serialize};

use crate::geometry::{iou, BBox, Detection};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssocConfig {
    /// Detections at or above this score go to the first stage.
    pub conf_high: f64,
    pub iou_min_stage1: f64,
    pub iou_min_stage2: f64,
    /// Minimum score for an unmatched detection to start a track.
    pub conf_init: f64,
}

impl Default for AssocConfig {
    fn default() -> Self {
        Self { conf_high: 0.6, iou_min_stage1: 0.2, iou_min_stage2: 0.4, conf_init: 0.7 }
    }
}

impl AssocConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [("iou_min_stage1", self.iou_min_stage1), ("iou_min_stage2", self.iou_min_stage2)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(format!("{name} must be in (0, 1), got {v}"));
            }
        }
        if !self.conf_high.is_finite() || !self.conf_init.is_finite() {
            return Err("confidence thresholds must be finite".into());
        }
        Ok(())
    }
}

/// Dense row-major cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "cost matrix shape mismatch");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let data: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }
}

/// `1 - IoU` between every predicted box (rows) and detection box (cols).
pub fn cost_matrix(predicted: &[BBox], detections: &[BBox]) -> CostMatrix {
    let data = predicted
        .iter()
        .flat_map(|p| detections.iter().map(move |d| 1.0 - iou(p, d)))
        .collect();
    CostMatrix::new(predicted.len(), detections.len(), data)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Assignment {
    pub matches: Vec<(usize, usize)>,
    pub unmatched_rows: Vec<usize>,
    pub unmatched_cols: Vec<usize>,
}

/// Minimum-cost assignment where leaving a row and a column unmatched costs
/// `max_cost`; pairs costing more than `max_cost` are never matched.
///
/// Equivalently, minimizes `Σ (c_ij - max_cost)` over matchings built from
/// admissible pairs. Ties resolve in row-major scan order.
pub fn solve_assignment(cost: &CostMatrix, max_cost: f64) -> Assignment {
    let (n, m) = (cost.rows, cost.cols);
    if n == 0 || m == 0 {
        return Assignment { matches: vec![], unmatched_rows: (0..n).collect(), unmatched_cols: (0..m).collect() };
    }
    assert!(cost.data.iter().all(|c| c.is_finite()) && max_cost.is_finite(), "costs must be finite");

    // Square extension: rows n.. are column slacks, cols m.. are row slacks.
    let size = n + m;
    let half = max_cost / 2.0;
    let scale = cost.data.iter().fold(half.abs(), |a, c| a.max(c.abs()));
    let forbid = (scale + 1.0) * (size as f64 + 1.0) * 4.0;
    let mut ext = vec![forbid; size * size];
    for i in 0..n {
        for j in 0..m {
            let c = cost.get(i, j);
            if c <= max_cost {
                ext[i * size + j] = c;
            }
        }
        ext[i * size + m + i] = half;
    }
    for l in 0..m {
        ext[(n + l) * size + l] = half;
        for k in 0..n {
            ext[(n + l) * size + m + k] = 0.0;
        }
    }

    let row_to_col = hungarian_square(&ext, size);
    let mut out = Assignment::default();
    let mut col_used = vec![false; m];
    for (i, &j) in row_to_col.iter().enumerate().take(n) {
        if j < m && cost.get(i, j) <= max_cost {
            out.matches.push((i, j));
            col_used[j] = true;
        } else {
            out.unmatched_rows.push(i);
        }
    }
    out.unmatched_cols = (0..m).filter(|&j| !col_used[j]).collect();
    out
}

/// Shortest augmenting path Hungarian method with potentials on a square
/// matrix; returns the column assigned to each row.
fn hungarian_square(a: &[f64], n: usize) -> Vec<usize> {
    const NONE: usize = usize::MAX;
    // 1-based potentials and matching, column 0 is a virtual root.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = NONE;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = a[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![NONE; n];
    for j in 1..=n {
        if p[j] != 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Outcome of associating one frame's detections with live tracks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssocResult<I> {
    /// `(track id, detection index)` pairs; these tracks are active.
    pub matches: Vec<(I, usize)>,
    /// Live tracks without a detection this frame.
    pub dormant: Vec<I>,
    /// All detections left unmatched.
    pub unmatched_detections: Vec<usize>,
    /// The subset of unmatched detections from the high-confidence stage;
    /// only these may start new tracks.
    pub unmatched_high: Vec<usize>,
}

/// Two-stage association: high-confidence detections against all tracks,
/// then low-confidence detections against the tracks left over.
pub fn associate_two_stage<I: Copy + Ord>(
    tracks: &[(I, BBox)],
    detections: &[Detection],
    cfg: &AssocConfig,
) -> AssocResult<I> {
    let (high, low): (Vec<usize>, Vec<usize>) = (0..detections.len()).partition(|&i| detections[i].conf >= cfg.conf_high);

    let boxes = |idx: &[usize]| idx.iter().map(|&i| detections[i].bbox()).collect::<Vec<_>>();
    let track_boxes: Vec<BBox> = tracks.iter().map(|t| t.1).collect();

    let first = solve_assignment(&cost_matrix(&track_boxes, &boxes(&high)), 1.0 - cfg.iou_min_stage1);
    let mut matches: Vec<(I, usize)> = first.matches.iter().map(|&(r, c)| (tracks[r].0, high[c])).collect();
    let unmatched_high: Vec<usize> = first.unmatched_cols.iter().map(|&c| high[c]).collect();

    let leftover: Vec<usize> = first.unmatched_rows;
    let leftover_boxes: Vec<BBox> = leftover.iter().map(|&r| track_boxes[r]).collect();
    let second = solve_assignment(&cost_matrix(&leftover_boxes, &boxes(&low)), 1.0 - cfg.iou_min_stage2);
    matches.extend(second.matches.iter().map(|&(r, c)| (tracks[leftover[r]].0, low[c])));
    let dormant: Vec<I> = second.unmatched_rows.iter().map(|&r| tracks[leftover[r]].0).collect();

    let mut unmatched_detections: Vec<usize> = unmatched_high.clone();
    unmatched_detections.extend(second.unmatched_cols.iter().map(|&c| low[c]));
    unmatched_detections.sort_unstable();

    AssocResult { matches, dormant, unmatched_detections, unmatched_high }
}
