//! The three-step detection pipeline: pixel-level candidate detection,
//! candidate classification, proximity clustering.

pub mod classify;
pub mod cluster;
pub mod detect;

pub use classify::classify_candidates;
pub use cluster::{cluster_candidates, Cluster, ClusterSet};
pub use detect::{detect_candidates, DetectOptions, MacroFilterMode};

use crate::data::{BBox, RegionMask};

/// One µC candidate: its pixel mask, physical centroid, the pixel detector's
/// peak margin, and (after the classification step) its stage-2 score.
#[derive(Debug, Clone)]
pub struct CandidateDetection {
    pub mask: RegionMask,
    /// Centroid of the mask in millimeters.
    pub centroid_mm: (f64, f64),
    /// Maximum final-stage pixel margin inside the component; ranks P.1-only
    /// output before any stage-2 score exists.
    pub peak_margin: f64,
    /// Stage-2 classifier margin; `None` until the candidate passes through
    /// candidate classification.
    pub score: Option<f64>,
}

impl CandidateDetection {
    #[inline]
    pub fn bbox(&self) -> BBox {
        self.mask.bbox()
    }
}
