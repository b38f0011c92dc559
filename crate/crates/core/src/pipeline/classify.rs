//! Candidate classification (step two): score each detected candidate with
//! the region-level model and keep those at or above the threshold.

use super::CandidateDetection;
use crate::boosting::{CascadeModel, FeatureSpace};
use crate::data::Mammogram;
use crate::features::{enumerate_haar_bank, resize::resize_to_patch, FeatureVector};
use crate::{Error, Result, WINDOW_SIZE};

/// Builds a candidate's full feature vector: crop its bbox from the image,
/// resize to the 12×12 patch, take shape features from the native-resolution
/// mask and texture features from the patch.
pub fn candidate_features(
    image: &Mammogram,
    candidate: &CandidateDetection,
    bank: &[crate::features::HaarFeature],
) -> Result<FeatureVector> {
    let bbox = candidate.bbox();
    let (w, h) = (bbox.width(), bbox.height());
    let mut crop = Vec::with_capacity(w * h);
    for y in bbox.y0..=bbox.y1 {
        for x in bbox.x0..=bbox.x1 {
            crop.push(f64::from(image.get(x, y)));
        }
    }
    let patch = resize_to_patch(&crop, w, h);
    FeatureVector::extract(&candidate.mask, &patch, bank)
}

/// Scores one candidate with the region-level model; `None` if feature
/// extraction degenerates (the candidate is dropped with a diagnostic).
fn candidate_score(
    image: &Mammogram,
    candidate: &CandidateDetection,
    model: &CascadeModel,
    bank: &[crate::features::HaarFeature],
) -> Option<f64> {
    match candidate_features(image, candidate, bank) {
        Ok(features) => {
            let mut source = |i: usize| features.get(i);
            Some(model.score(&mut source).margin)
        }
        Err(e) => {
            let bbox = candidate.bbox();
            log::warn!(
                "dropping candidate at bbox ({},{})-({},{}): {e}",
                bbox.x0,
                bbox.y0,
                bbox.x1,
                bbox.y1
            );
            None
        }
    }
}

/// Runs the stage-2 classifier over P.1 candidates.
///
/// Keeps candidates whose margin is at least `threshold`, so the output is
/// always a subset of the input; `-inf` keeps everything (with scores
/// attached for later sweeping) and `+inf` keeps nothing.
pub fn classify_candidates(
    image: &Mammogram,
    candidates: Vec<CandidateDetection>,
    model: &CascadeModel,
    threshold: f64,
) -> Result<Vec<CandidateDetection>> {
    if model.feature_space_tag != FeatureSpace::CandidateFeatureVector {
        return Err(Error::Config(
            "candidate classification needs a candidate-featurevector model".into(),
        ));
    }
    let bank = enumerate_haar_bank(WINDOW_SIZE)?;
    let scores = crate::exec::map_slice(&candidates, |c| candidate_score(image, c, model, &bank));
    Ok(candidates
        .into_iter()
        .zip(scores)
        .filter_map(|(mut candidate, score)| {
            let score = score?;
            if score >= threshold {
                candidate.score = Some(score);
                Some(candidate)
            } else {
                None
            }
        })
        .collect())
}
