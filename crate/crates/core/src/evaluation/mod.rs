//! Evaluation: overlap matching, per-µC FROC, cluster FROC and case ROC with
//! cross-fold interpolation.

pub mod froc;
pub mod matching;
pub mod roc;

pub use froc::{
    aggregate_curves, default_fpi_grid, froc, froc_sweep, interpolate_at, interpolate_onto,
    x_at_y, FrocCurve, FrocImage, FrocOptions,
};
pub use matching::{
    match_clusters, match_individual, region_overlap, MatchResult, OverlapMetric, ScoredDetection,
};
pub use roc::{
    aggregate_roc, auc, case_roc, cluster_mean_score, default_fpr_grid, roc_sweep, CaseScore,
    RocCurve,
};

use crate::data::RegionMask;
use crate::pipeline::cluster::cluster_points;

/// Builds ground-truth µC clusters by applying the pipeline's clustering rule
/// to the manual annotations. Returns member annotation-index lists.
pub fn gt_clusters_from_annotations(
    annotations: &[RegionMask],
    pixel_spacing_mm: f64,
    max_dist_mm: f64,
    min_size: usize,
) -> Vec<Vec<usize>> {
    let centroids: Vec<(f64, f64)> = annotations
        .iter()
        .map(|r| {
            let (x, y) = r.centroid_px();
            (x * pixel_spacing_mm, y * pixel_spacing_mm)
        })
        .collect();
    cluster_points(&centroids, max_dist_mm, min_size)
        .clusters
        .into_iter()
        .map(|c| c.members)
        .collect()
}
