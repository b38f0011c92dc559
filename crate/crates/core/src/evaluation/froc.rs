//! FROC computation: threshold sweeps, grid interpolation and cross-fold
//! aggregation.

use super::matching::{match_individual, OverlapMetric, ScoredDetection};
use crate::data::RegionMask;
use crate::{Error, Result};

/// Detections and ground truth of one image, ready for sweeping.
pub struct FrocImage<'a> {
    pub detections: Vec<ScoredDetection<'a>>,
    pub annotations: &'a [RegionMask],
}

#[derive(Debug, Clone)]
pub struct FrocOptions {
    pub min_overlap: f64,
    pub metric: OverlapMetric,
    /// Caps the sweep at this many quantile-spaced thresholds; `None` sweeps
    /// every distinct score.
    pub max_thresholds: Option<usize>,
}

impl Default for FrocOptions {
    fn default() -> Self {
        FrocOptions { min_overlap: 0.5, metric: OverlapMetric::Iou, max_thresholds: None }
    }
}

/// The paper-style logarithmic FPI grid: 32 points spanning [1e-2, 1e2].
pub fn default_fpi_grid() -> Vec<f64> {
    (0..32).map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / 31.0)).collect()
}

fn sweep_thresholds(scores: &mut Vec<f64>, cap: Option<usize>) -> Vec<f64> {
    scores.sort_by(|a, b| b.total_cmp(a));
    scores.dedup();
    if let Some(cap) = cap {
        if cap >= 2 && scores.len() > cap {
            let n = scores.len();
            let mut picked: Vec<f64> =
                (0..cap).map(|i| scores[i * (n - 1) / (cap - 1)]).collect();
            picked.dedup();
            return picked;
        }
    }
    scores.clone()
}

/// Sweeps the score threshold over every distinct detection score and
/// reports (false positives per image, true positive rate) per threshold,
/// sorted by ascending FPI.
///
/// Matching is recomputed at each threshold with the same greedy one-to-one
/// rule as [`match_individual`].
pub fn froc_sweep(images: &[FrocImage], options: &FrocOptions) -> Result<Vec<(f64, f64)>> {
    let total_annotations: usize = images.iter().map(|im| im.annotations.len()).sum();
    if total_annotations == 0 {
        return Err(Error::Evaluation("FROC needs at least one annotation in the set".into()));
    }
    if images.is_empty() {
        return Err(Error::Evaluation("FROC needs at least one image".into()));
    }
    let mut scores: Vec<f64> =
        images.iter().flat_map(|im| im.detections.iter().map(|d| d.score)).collect();
    if scores.is_empty() {
        return Ok(vec![(0.0, 0.0)]);
    }
    let thresholds = sweep_thresholds(&mut scores, options.max_thresholds);

    // counts[image][threshold] = (matched annotations, false positives)
    let counts: Vec<Vec<(usize, usize)>> = crate::exec::map_slice(images, |image| {
        thresholds
            .iter()
            .map(|&t| {
                let kept: Vec<ScoredDetection> = image
                    .detections
                    .iter()
                    .filter(|d| d.score >= t)
                    .copied()
                    .collect();
                let kept_n = kept.len();
                let result =
                    match_individual(&kept, image.annotations, options.min_overlap, options.metric);
                (result.tp_pairs.len(), kept_n - result.tp_pairs.len())
            })
            .collect()
    });

    let n_images = images.len() as f64;
    let mut points: Vec<(f64, f64)> = thresholds
        .iter()
        .enumerate()
        .map(|(k, _)| {
            let matched: usize = counts.iter().map(|c| c[k].0).sum();
            let fps: usize = counts.iter().map(|c| c[k].1).sum();
            (fps as f64 / n_images, matched as f64 / total_annotations as f64)
        })
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Ok(points)
}

/// Collapses duplicate x values (keeping the highest y) and anchors the curve
/// at (0, 0) when no zero-x point exists.
fn canonical_points(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut sorted: Vec<(f64, f64)> = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(sorted.len() + 1);
    for (x, y) in sorted {
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 = last.1.max(y),
            _ => out.push((x, y)),
        }
    }
    if out.first().is_none_or(|p| p.0 > 0.0) {
        out.insert(0, (0.0, 0.0));
    }
    out
}

/// Linear interpolation of a sweep onto one x value; clamps to the last y
/// beyond the measured range.
pub fn interpolate_at(points: &[(f64, f64)], x: f64) -> f64 {
    let pts = canonical_points(points);
    if pts.is_empty() {
        return 0.0;
    }
    if x <= pts[0].0 {
        return pts[0].1;
    }
    for w in pts.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        if x <= x1 {
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        }
    }
    pts.last().unwrap().1
}

/// Interpolates a sweep onto a fixed grid.
pub fn interpolate_onto(points: &[(f64, f64)], grid: &[f64]) -> Vec<f64> {
    grid.iter().map(|&g| interpolate_at(points, g)).collect()
}

/// Smallest x at which the curve reaches `y`, or `None` if it never does.
pub fn x_at_y(points: &[(f64, f64)], y: f64) -> Option<f64> {
    let pts = canonical_points(points);
    let mut prev: Option<(f64, f64)> = None;
    for &(x1, y1) in &pts {
        if y1 >= y {
            return match prev {
                Some((x0, y0)) if y1 > y0 => Some(x0 + (x1 - x0) * (y - y0) / (y1 - y0)),
                _ => Some(x1),
            };
        }
        prev = Some((x1, y1));
    }
    None
}

/// An FROC curve: the raw sweep points of one fold, or the per-grid-point
/// mean ± std across folds after aggregation.
#[derive(Debug, Clone)]
pub struct FrocCurve {
    /// Raw sweep points (empty on aggregated curves).
    pub points: Vec<(f64, f64)>,
    pub grid: Vec<f64>,
    pub mean_tpr: Vec<f64>,
    pub std_tpr: Vec<f64>,
    pub n_folds: usize,
}

impl FrocCurve {
    /// Wraps raw sweep points as a single-fold curve on `grid`.
    pub fn from_points(points: Vec<(f64, f64)>, grid: Vec<f64>) -> Self {
        let mean_tpr = interpolate_onto(&points, &grid);
        let std_tpr = vec![0.0; grid.len()];
        FrocCurve { points, grid, mean_tpr, std_tpr, n_folds: 1 }
    }
}

/// Full per-µC FROC of one fold, interpolated onto `grid`.
pub fn froc(images: &[FrocImage], grid: &[f64], options: &FrocOptions) -> Result<FrocCurve> {
    let points = froc_sweep(images, options)?;
    Ok(FrocCurve::from_points(points, grid.to_vec()))
}

/// Population mean and standard deviation per grid point across folds.
pub(crate) fn mean_std_columns(rows: &[&[f64]]) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let width = rows[0].len();
    let mut mean = vec![0.0; width];
    let mut std = vec![0.0; width];
    for row in rows {
        for (m, v) in mean.iter_mut().zip(*row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    for row in rows {
        for ((s, v), m) in std.iter_mut().zip(*row).zip(&mean) {
            let d = v - m;
            *s += d * d;
        }
    }
    std.iter_mut().for_each(|s| *s = (*s / n).sqrt());
    (mean, std)
}

/// Aggregates per-fold curves (matching grids) into mean ± std.
pub fn aggregate_curves(folds: &[FrocCurve]) -> Result<FrocCurve> {
    let Some(first) = folds.first() else {
        return Err(Error::Evaluation("no fold curves to aggregate".into()));
    };
    for f in folds {
        if f.grid != first.grid {
            return Err(Error::Evaluation("fold curves use different grids".into()));
        }
    }
    let rows: Vec<&[f64]> = folds.iter().map(|f| f.mean_tpr.as_slice()).collect();
    let (mean_tpr, std_tpr) = mean_std_columns(&rows);
    Ok(FrocCurve { points: Vec::new(), grid: first.grid.clone(), mean_tpr, std_tpr, n_folds: folds.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::RegionMask;

    fn square(x0: usize, y0: usize, side: usize) -> RegionMask {
        let mut pts = Vec::new();
        for y in y0..y0 + side {
            for x in x0..x0 + side {
                pts.push((x, y));
            }
        }
        RegionMask::from_points(&pts).unwrap()
    }

    #[test]
    fn hand_computed_fixture_one_tp_one_fp() {
        // 1 image, 2 annotations; detections: 1 exact TP + 1 far FP, both
        // above threshold -> the loosest sweep point is (FPI 1.0, TPR 0.5).
        let annots = vec![square(0, 0, 4), square(20, 20, 4)];
        let tp = square(0, 0, 4);
        let fp = square(40, 40, 4);
        let images = vec![FrocImage {
            detections: vec![
                ScoredDetection { mask: &tp, score: 2.0 },
                ScoredDetection { mask: &fp, score: 1.0 },
            ],
            annotations: &annots,
        }];
        let points = froc_sweep(&images, &FrocOptions::default()).unwrap();
        assert!(points.contains(&(1.0, 0.5)), "points {points:?}");
        // The stricter threshold keeps only the TP: (0.0, 0.5).
        assert!(points.contains(&(0.0, 0.5)));
    }

    #[test]
    fn no_detections_gives_origin_point() {
        let annots = vec![square(0, 0, 4)];
        let images = vec![FrocImage { detections: vec![], annotations: &annots }];
        let points = froc_sweep(&images, &FrocOptions::default()).unwrap();
        assert_eq!(points, vec![(0.0, 0.0)]);
    }

    #[test]
    fn all_matched_no_fp_is_perfect_point() {
        let annots = vec![square(0, 0, 4)];
        let tp = square(0, 0, 4);
        let images = vec![FrocImage {
            detections: vec![ScoredDetection { mask: &tp, score: 1.0 }],
            annotations: &annots,
        }];
        let points = froc_sweep(&images, &FrocOptions::default()).unwrap();
        assert_eq!(points, vec![(0.0, 1.0)]);
    }

    #[test]
    fn zero_annotations_is_an_error() {
        let images = vec![FrocImage { detections: vec![], annotations: &[] }];
        assert!(froc_sweep(&images, &FrocOptions::default()).is_err());
    }

    #[test]
    fn tpr_is_monotone_along_the_sweep() {
        let annots = vec![square(0, 0, 4), square(20, 20, 4), square(40, 0, 4)];
        let d1 = square(0, 0, 4);
        let d2 = square(20, 20, 4);
        let d3 = square(60, 60, 4);
        let d4 = square(40, 1, 4);
        let images = vec![FrocImage {
            detections: vec![
                ScoredDetection { mask: &d1, score: 4.0 },
                ScoredDetection { mask: &d2, score: 3.0 },
                ScoredDetection { mask: &d3, score: 2.5 },
                ScoredDetection { mask: &d4, score: 1.0 },
            ],
            annotations: &annots,
        }];
        let points = froc_sweep(&images, &FrocOptions::default()).unwrap();
        for w in points.windows(2) {
            assert!(w[0].0 <= w[1].0);
            assert!(w[0].1 <= w[1].1, "tpr dropped along the sweep: {points:?}");
        }
    }

    #[test]
    fn interpolation_clamps_and_lerps() {
        let points = vec![(1.0, 0.4), (3.0, 0.8)];
        assert_eq!(interpolate_at(&points, 0.0), 0.0); // anchor
        assert!((interpolate_at(&points, 0.5) - 0.2).abs() < 1e-12);
        assert!((interpolate_at(&points, 2.0) - 0.6).abs() < 1e-12);
        assert_eq!(interpolate_at(&points, 10.0), 0.8); // clamp
        assert_eq!(x_at_y(&points, 0.8), Some(3.0));
        assert_eq!(x_at_y(&points, 0.9), None);
        let x = x_at_y(&points, 0.6).unwrap();
        assert!((x - 2.0).abs() < 1e-12);
    }

    #[test]
    fn aggregation_mean_lies_within_fold_envelope() {
        let grid = default_fpi_grid();
        let a = FrocCurve::from_points(vec![(0.5, 0.2), (2.0, 0.6), (20.0, 0.9)], grid.clone());
        let b = FrocCurve::from_points(vec![(0.2, 0.4), (1.0, 0.7), (30.0, 1.0)], grid.clone());
        let agg = aggregate_curves(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(agg.n_folds, 2);
        for i in 0..grid.len() {
            let lo = a.mean_tpr[i].min(b.mean_tpr[i]);
            let hi = a.mean_tpr[i].max(b.mean_tpr[i]);
            assert!(agg.mean_tpr[i] >= lo - 1e-12 && agg.mean_tpr[i] <= hi + 1e-12);
            assert!(agg.std_tpr[i] >= 0.0 && agg.std_tpr[i] <= 1.0);
        }
    }

    #[test]
    fn fpi_grid_spans_the_published_range() {
        let grid = default_fpi_grid();
        assert_eq!(grid.len(), 32);
        assert!((grid[0] - 0.01).abs() < 1e-12);
        assert!((grid[31] - 100.0).abs() < 1e-9);
    }
}
