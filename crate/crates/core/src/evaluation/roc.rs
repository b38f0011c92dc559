//! Case-level ROC over cluster detections.

use super::froc::{interpolate_onto, mean_std_columns};
use crate::{Error, Result};

/// One case's label and score. The score is the maximum cluster score in the
/// case (cluster score = mean member score); `None` when nothing was detected.
#[derive(Debug, Clone)]
pub struct CaseScore {
    pub case_id: String,
    /// True when the case has at least one ground-truth µC cluster.
    pub positive: bool,
    pub score: Option<f64>,
}

/// Mean member score: the cluster's ranking score for the case ROC.
pub fn cluster_mean_score(member_scores: &[f64]) -> f64 {
    member_scores.iter().sum::<f64>() / member_scores.len() as f64
}

/// Linear FPR grid for ROC interpolation: 33 points over [0, 1].
pub fn default_fpr_grid() -> Vec<f64> {
    (0..33).map(|i| i as f64 / 32.0).collect()
}

/// Standard ROC sweep over case scores, from (0,0) to (1,1).
///
/// Cases without any detection can never be predicted positive before the
/// terminal all-positive point.
pub fn roc_sweep(cases: &[CaseScore]) -> Result<Vec<(f64, f64)>> {
    let n_pos = cases.iter().filter(|c| c.positive).count();
    let n_neg = cases.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Evaluation(format!(
            "case ROC needs both classes, got {n_pos} positive / {n_neg} negative cases"
        )));
    }
    let mut thresholds: Vec<f64> = cases.iter().filter_map(|c| c.score).collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();

    let mut points = vec![(0.0, 0.0)];
    for &t in &thresholds {
        let tp = cases.iter().filter(|c| c.positive && c.score.is_some_and(|s| s >= t)).count();
        let fp = cases.iter().filter(|c| !c.positive && c.score.is_some_and(|s| s >= t)).count();
        let point = (fp as f64 / n_neg as f64, tp as f64 / n_pos as f64);
        if points.last() != Some(&point) {
            points.push(point);
        }
    }
    if points.last() != Some(&(1.0, 1.0)) {
        points.push((1.0, 1.0));
    }
    Ok(points)
}

/// Trapezoidal area under a ROC polyline.
pub fn auc(points: &[(f64, f64)]) -> f64 {
    points.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) * 0.5).sum()
}

/// A case ROC curve, single fold or aggregated.
#[derive(Debug, Clone)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
    pub grid: Vec<f64>,
    pub mean_tpr: Vec<f64>,
    pub std_tpr: Vec<f64>,
    pub n_folds: usize,
}

impl RocCurve {
    pub fn from_points(points: Vec<(f64, f64)>, grid: Vec<f64>) -> Self {
        let mean_tpr = interpolate_onto(&points, &grid);
        let std_tpr = vec![0.0; grid.len()];
        RocCurve { points, grid, mean_tpr, std_tpr, n_folds: 1 }
    }
}

/// Case-based ROC of one fold, interpolated onto `grid`.
pub fn case_roc(cases: &[CaseScore], grid: &[f64]) -> Result<RocCurve> {
    let points = roc_sweep(cases)?;
    Ok(RocCurve::from_points(points, grid.to_vec()))
}

/// Aggregates per-fold ROC curves into mean ± std on their shared grid.
pub fn aggregate_roc(folds: &[RocCurve]) -> Result<RocCurve> {
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
    Ok(RocCurve { points: Vec::new(), grid: first.grid.clone(), mean_tpr, std_tpr, n_folds: folds.len() })
}
