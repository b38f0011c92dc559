//! Pixel-wise candidate detection (step one of the pipeline).

use serde::{Deserialize, Serialize};

use super::CandidateDetection;
use crate::boosting::cascade::cascade_accept_map;
use crate::boosting::{CascadeModel, FeatureSpace};
use crate::data::{connected_components, BBox, Connectivity, Mammogram};
use crate::features::enumerate_haar_bank;
use crate::{Error, Result, WINDOW_SIZE};

/// Reading of the macro-calcification size rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MacroFilterMode {
    /// Remove a component only when BOTH bbox dimensions exceed the limit.
    Conjunctive,
    /// Remove when EITHER dimension exceeds the limit.
    Disjunctive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectOptions {
    /// Pixel-classification stride; 1 scans densely, larger values fill each
    /// stride×stride block with one decision (desk-scale speed knob).
    pub stride: usize,
    /// Macro-calcification size limit in mm.
    pub macro_size_mm: f64,
    pub macro_mode: MacroFilterMode,
}

impl Default for DetectOptions {
    fn default() -> Self {
        DetectOptions { stride: 1, macro_size_mm: 1.0, macro_mode: MacroFilterMode::Conjunctive }
    }
}

/// The single place the macro rule is interpreted, so flipping the reading is
/// a one-line change.
pub fn is_macro_calcification(
    bbox: &BBox,
    pixel_spacing_mm: f64,
    macro_size_mm: f64,
    mode: MacroFilterMode,
) -> bool {
    let width_mm = bbox.width() as f64 * pixel_spacing_mm;
    let height_mm = bbox.height() as f64 * pixel_spacing_mm;
    match mode {
        MacroFilterMode::Conjunctive => width_mm > macro_size_mm && height_mm > macro_size_mm,
        MacroFilterMode::Disjunctive => width_mm > macro_size_mm || height_mm > macro_size_mm,
    }
}

/// Classifies every pixel through the cascade, groups accepted pixels into
/// 8-connected components, and drops macro-calcifications.
///
/// The image must already be preprocessed (noise-equalized); border pixels
/// are classified through replicate-clamped windows.
pub fn detect_candidates(
    image: &Mammogram,
    model: &CascadeModel,
    options: &DetectOptions,
) -> Result<Vec<CandidateDetection>> {
    if model.feature_space_tag != FeatureSpace::HaarWindow {
        return Err(Error::Config(
            "candidate detection needs a pixel-window model (feature_space_tag haar-window)".into(),
        ));
    }
    if model.window != WINDOW_SIZE {
        return Err(Error::Config(format!(
            "model window {} does not match the {WINDOW_SIZE}px pipeline window",
            model.window
        )));
    }
    let bank = enumerate_haar_bank(WINDOW_SIZE)?;
    let scan = cascade_accept_map(image, model, &bank, options.stride);
    let components =
        connected_components(&scan.accept, image.width(), image.height(), Connectivity::Eight);

    let spacing = image.pixel_spacing_mm;
    let mut out = Vec::new();
    for mask in components {
        if is_macro_calcification(&mask.bbox(), spacing, options.macro_size_mm, options.macro_mode)
        {
            continue;
        }
        let centroid_px = mask.centroid_px();
        let peak_margin = mask
            .pixels()
            .map(|(x, y)| f64::from(scan.margin[y * image.width() + x]))
            .fold(f64::NEG_INFINITY, f64::max);
        out.push(CandidateDetection {
            mask,
            centroid_mm: (centroid_px.0 * spacing, centroid_px.1 * spacing),
            peak_margin,
            score: None,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boosting::{BoostedStage, DecisionStump};

    fn reject_all_model() -> CascadeModel {
        CascadeModel::new(
            FeatureSpace::HaarWindow,
            vec![BoostedStage {
                stumps: vec![DecisionStump {
                    feature_index: 0,
                    threshold: 0.0,
                    polarity: 1,
                    alpha: 1.0,
                }],
                stage_threshold: f64::INFINITY,
                measured_d: 0.0,
                measured_f: 0.0,
            }],
        )
    }

    fn accept_all_model() -> CascadeModel {
        CascadeModel::new(FeatureSpace::HaarWindow, vec![])
    }

    #[test]
    fn all_reject_classifier_yields_no_candidates() {
        let img = Mammogram::new(vec![5.0; 32 * 32], 32, 32, 0.07, "c", "i").unwrap();
        let out = detect_candidates(&img, &reject_all_model(), &DetectOptions::default()).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn macro_filter_conjunctive_vs_disjunctive() {
        let spacing = 0.07;
        // 16×16 px is 1.12×1.12 mm: removed under both readings.
        let square = BBox { x0: 0, y0: 0, x1: 15, y1: 15 };
        assert!(is_macro_calcification(&square, spacing, 1.0, MacroFilterMode::Conjunctive));
        assert!(is_macro_calcification(&square, spacing, 1.0, MacroFilterMode::Disjunctive));
        // 5×20 px is 0.35×1.40 mm: kept conjunctively (only one side exceeds).
        let tall = BBox { x0: 0, y0: 0, x1: 4, y1: 19 };
        assert!(!is_macro_calcification(&tall, spacing, 1.0, MacroFilterMode::Conjunctive));
        assert!(is_macro_calcification(&tall, spacing, 1.0, MacroFilterMode::Disjunctive));
    }

    #[test]
    fn accept_all_on_whole_image_is_one_macro_component() {
        // Every pixel accepted forms one giant component, which the macro
        // filter removes.
        let img = Mammogram::new(vec![5.0; 32 * 32], 32, 32, 0.07, "c", "i").unwrap();
        let out = detect_candidates(&img, &accept_all_model(), &DetectOptions::default()).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn rejects_candidate_feature_space_model() {
        let img = Mammogram::new(vec![5.0; 144], 12, 12, 0.07, "c", "i").unwrap();
        let model = CascadeModel::new(FeatureSpace::CandidateFeatureVector, vec![]);
        assert!(detect_candidates(&img, &model, &DetectOptions::default()).is_err());
    }
}
