use std::collections::{BTreeMap, BTreeSet};
use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use crate::assoc::{solve_assignment, CostMatrix};
use crate::geometry::iou;
use crate::mot::{GtEntry, ResultEntry};

pub const DEFAULT_IOU_MATCH: f64 = 0.5;

/// Raw event counts; sums over sequences give the aggregate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricCounts {
    pub num_gt: u64,
    pub num_hyp: u64,
    pub matches: u64,
    pub misses: u64,
    pub false_positives: u64,
    pub id_switches: u64,
    pub fragmentations: u64,
    pub iou_sum: f64,
    /// Identity true positives under the global id matching.
    pub idtp: u64,
}

impl AddAssign for MetricCounts {
    fn add_assign(&mut self, o: Self) {
        self.num_gt += o.num_gt;
        self.num_hyp += o.num_hyp;
        self.matches += o.matches;
        self.misses += o.misses;
        self.false_positives += o.false_positives;
        self.id_switches += o.id_switches;
        self.fragmentations += o.fragmentations;
        self.iou_sum += o.iou_sum;
        self.idtp += o.idtp;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mota: f64,
    pub motp: f64,
    pub idp: f64,
    pub idr: f64,
    pub idf1: f64,
    pub id_switches: u64,
    pub fragmentations: u64,
    pub matches: u64,
    pub misses: u64,
    pub false_positives: u64,
    pub num_gt: u64,
    pub num_hyp: u64,
    pub idtp: u64,
    pub idfp: u64,
    pub idfn: u64,
}

fn ratio(num: f64, den: f64, empty: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        empty
    }
}

impl MetricCounts {
    pub fn report(&self) -> MetricsReport {
        let errors = (self.misses + self.false_positives + self.id_switches) as f64;
        let gt = self.num_gt as f64;
        let hyp = self.num_hyp as f64;
        let idtp = self.idtp as f64;
        let perfect = if self.num_gt == 0 && self.num_hyp == 0 { 1.0 } else { 0.0 };
        MetricsReport {
            mota: 1.0 - errors / gt.max(1.0),
            motp: ratio(self.iou_sum, self.matches as f64, 0.0),
            idp: ratio(idtp, hyp, perfect),
            idr: ratio(idtp, gt, perfect),
            idf1: ratio(2.0 * idtp, gt + hyp, perfect),
            id_switches: self.id_switches,
            fragmentations: self.fragmentations,
            matches: self.matches,
            misses: self.misses,
            false_positives: self.false_positives,
            num_gt: self.num_gt,
            num_hyp: self.num_hyp,
            idtp: self.idtp,
            idfp: self.num_hyp - self.idtp,
            idfn: self.num_gt - self.idtp,
        }
    }
}

/// CLEAR and identity metrics. Ground truth with `flag == 0` is ignored.
/// Inputs should already be margin-filtered.
pub fn clear_and_id_metrics(gt: &[GtEntry], hyp: &[ResultEntry], iou_match_min: f64) -> MetricCounts {
    let mut frames: BTreeMap<u32, (Vec<&GtEntry>, Vec<&ResultEntry>)> = BTreeMap::new();
    for g in gt.iter().filter(|g| g.flag != 0) {
        frames.entry(g.frame).or_default().0.push(g);
    }
    for h in hyp {
        frames.entry(h.frame).or_default().1.push(h);
    }

    let mut c = MetricCounts::default();
    let mut prev: BTreeMap<u64, u64> = BTreeMap::new();
    let mut last_hyp: BTreeMap<u64, u64> = BTreeMap::new();
    let mut tracked_last: BTreeMap<u64, bool> = BTreeMap::new();
    let mut co_occurrence: BTreeMap<(u64, u64), u64> = BTreeMap::new();

    for (gts, hyps) in frames.values() {
        c.num_gt += gts.len() as u64;
        c.num_hyp += hyps.len() as u64;

        for g in gts {
            for h in hyps {
                if iou(&g.bbox, &h.bbox) >= iou_match_min {
                    *co_occurrence.entry((g.id, h.id)).or_default() += 1;
                }
            }
        }

        // Keep last frame's correspondences that still overlap enough.
        let mut matched: Vec<(usize, usize)> = Vec::new();
        let mut gt_used = vec![false; gts.len()];
        let mut hyp_used = vec![false; hyps.len()];
        for (gi, g) in gts.iter().enumerate() {
            let Some(&hid) = prev.get(&g.id) else { continue };
            if let Some(hi) = hyps.iter().position(|h| h.id == hid) {
                if !hyp_used[hi] && iou(&g.bbox, &hyps[hi].bbox) >= iou_match_min {
                    matched.push((gi, hi));
                    gt_used[gi] = true;
                    hyp_used[hi] = true;
                }
            }
        }
        let free_g: Vec<usize> = (0..gts.len()).filter(|&i| !gt_used[i]).collect();
        let free_h: Vec<usize> = (0..hyps.len()).filter(|&i| !hyp_used[i]).collect();
        let rows: Vec<Vec<f64>> = free_g
            .iter()
            .map(|&gi| free_h.iter().map(|&hi| 1.0 - iou(&gts[gi].bbox, &hyps[hi].bbox)).collect())
            .collect();
        let cost = CostMatrix::new(free_g.len(), free_h.len(), rows.concat());
        for (r, col) in solve_assignment(&cost, 1.0 - iou_match_min).matches {
            matched.push((free_g[r], free_h[col]));
        }

        let mut now: BTreeMap<u64, u64> = BTreeMap::new();
        let mut seen: BTreeSet<u64> = BTreeSet::new();
        for &(gi, hi) in &matched {
            let (g, h) = (gts[gi], hyps[hi]);
            c.matches += 1;
            c.iou_sum += iou(&g.bbox, &h.bbox);
            if last_hyp.get(&g.id).is_some_and(|&old| old != h.id) {
                c.id_switches += 1;
            }
            if tracked_last.get(&g.id) == Some(&false) && last_hyp.contains_key(&g.id) {
                c.fragmentations += 1;
            }
            last_hyp.insert(g.id, h.id);
            now.insert(g.id, h.id);
            seen.insert(g.id);
        }
        c.misses += (gts.len() - matched.len()) as u64;
        c.false_positives += (hyps.len() - matched.len()) as u64;
        for g in gts {
            tracked_last.insert(g.id, seen.contains(&g.id));
        }
        prev = now;
    }

    // Global one-to-one identity matching maximizing co-occurrence.
    let gt_ids: Vec<u64> = co_occurrence.keys().map(|k| k.0).collect::<BTreeSet<_>>().into_iter().collect();
    let hyp_ids: Vec<u64> = co_occurrence.keys().map(|k| k.1).collect::<BTreeSet<_>>().into_iter().collect();
    let mut data = Vec::with_capacity(gt_ids.len() * hyp_ids.len());
    for g in &gt_ids {
        for h in &hyp_ids {
            data.push(-(co_occurrence.get(&(*g, *h)).copied().unwrap_or(0) as f64));
        }
    }
    let cost = CostMatrix::new(gt_ids.len(), hyp_ids.len(), data);
    c.idtp = solve_assignment(&cost, 0.0).matches.iter().map(|&(r, col)| -cost.get(r, col) as u64).sum();
    c
}
