//! Detection-to-annotation and cluster-to-cluster matching.

use serde::{Deserialize, Serialize};

use crate::data::RegionMask;

/// How region overlap is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapMetric {
    /// Intersection over union (default).
    Iou,
    /// Intersection over the annotation's area.
    Ioa,
}

/// Overlap between a detection and an annotation mask.
pub fn region_overlap(detection: &RegionMask, annotation: &RegionMask, metric: OverlapMetric) -> f64 {
    let inter = detection.intersection_area(annotation) as f64;
    if inter == 0.0 {
        return 0.0;
    }
    match metric {
        OverlapMetric::Iou => {
            let union = detection.area() as f64 + annotation.area() as f64 - inter;
            inter / union
        }
        OverlapMetric::Ioa => inter / annotation.area() as f64,
    }
}

/// Outcome of a one-to-one matching pass.
#[derive(Debug, Clone, Default)]
pub struct MatchResult {
    /// (detection index, annotation index) pairs.
    pub tp_pairs: Vec<(usize, usize)>,
    pub fp_detections: Vec<usize>,
    pub fn_annotations: Vec<usize>,
}

/// A detection mask with its ranking score.
#[derive(Debug, Clone, Copy)]
pub struct ScoredDetection<'a> {
    pub mask: &'a RegionMask,
    pub score: f64,
}

/// Greedy one-to-one matching in descending overlap; ties broken by higher
/// detection score, then lower detection index, then lower annotation index.
/// Pairs must overlap at least `min_overlap` to count as true positives.
pub fn match_individual(
    detections: &[ScoredDetection],
    annotations: &[RegionMask],
    min_overlap: f64,
    metric: OverlapMetric,
) -> MatchResult {
    let mut pairs: Vec<(f64, f64, usize, usize)> = Vec::new();
    for (d, det) in detections.iter().enumerate() {
        for (a, ann) in annotations.iter().enumerate() {
            let o = region_overlap(det.mask, ann, metric);
            if o >= min_overlap {
                pairs.push((o, det.score, d, a));
            }
        }
    }
    pairs.sort_unstable_by(|x, y| {
        y.0.total_cmp(&x.0)
            .then(y.1.total_cmp(&x.1))
            .then(x.2.cmp(&y.2))
            .then(x.3.cmp(&y.3))
    });

    let mut det_used = vec![false; detections.len()];
    let mut ann_used = vec![false; annotations.len()];
    let mut tp_pairs = Vec::new();
    for (_, _, d, a) in pairs {
        if !det_used[d] && !ann_used[a] {
            det_used[d] = true;
            ann_used[a] = true;
            tp_pairs.push((d, a));
        }
    }
    MatchResult {
        tp_pairs,
        fp_detections: (0..detections.len()).filter(|&d| !det_used[d]).collect(),
        fn_annotations: (0..annotations.len()).filter(|&a| !ann_used[a]).collect(),
    }
}

/// Cluster matching: a detected cluster is a true positive iff at least two
/// of its members are individual true positives matched to members of one
/// ground-truth cluster. Greedy one-to-one by descending shared count.
///
/// `det_to_annot[d]` is the annotation index detection `d` was matched to in
/// the individual pass (if any); clusters are given as member index lists
/// (detection indices for detected clusters, annotation indices for GT).
pub fn match_clusters(
    det_clusters: &[Vec<usize>],
    gt_clusters: &[Vec<usize>],
    det_to_annot: &[Option<usize>],
) -> MatchResult {
    let mut shared_counts: Vec<(usize, usize, usize)> = Vec::new();
    for (dc_idx, dc) in det_clusters.iter().enumerate() {
        for (gc_idx, gc) in gt_clusters.iter().enumerate() {
            let shared = dc
                .iter()
                .filter(|&&d| {
                    det_to_annot
                        .get(d)
                        .copied()
                        .flatten()
                        .is_some_and(|a| gc.contains(&a))
                })
                .count();
            if shared >= 2 {
                shared_counts.push((shared, dc_idx, gc_idx));
            }
        }
    }
    shared_counts.sort_unstable_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    let mut det_used = vec![false; det_clusters.len()];
    let mut gt_used = vec![false; gt_clusters.len()];
    let mut tp_pairs = Vec::new();
    for (_, dc, gc) in shared_counts {
        if !det_used[dc] && !gt_used[gc] {
            det_used[dc] = true;
            gt_used[gc] = true;
            tp_pairs.push((dc, gc));
        }
    }
    MatchResult {
        tp_pairs,
        fp_detections: (0..det_clusters.len()).filter(|&d| !det_used[d]).collect(),
        fn_annotations: (0..gt_clusters.len()).filter(|&g| !gt_used[g]).collect(),
    }
}
