//! Boosted decision stumps, RUSBoost training and cascade assembly.

pub mod cascade;
pub mod rusboost;
pub mod sample;

pub use cascade::{calibrate_stage_threshold, train_cascade, CascadeParams, CascadeTrainingSet};
pub use rusboost::{train_rusboost, RusBoostTrainer};
pub use sample::{FeatureMatrix, SampleSet, WindowSampleSet};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, WINDOW_SIZE};

/// Lazily supplies feature values by index, so cascade inference only pays
/// for the features its surviving stages actually read.
pub trait FeatureSource {
    fn feature(&mut self, index: usize) -> f64;
}

impl<F: FnMut(usize) -> f64> FeatureSource for F {
    #[inline]
    fn feature(&mut self, index: usize) -> f64 {
        self(index)
    }
}

/// Single-feature threshold classifier with a boosting vote weight.
///
/// Predicts positive when `value > threshold` for polarity +1 and when
/// `value < threshold` for polarity −1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionStump {
    pub feature_index: usize,
    pub threshold: f64,
    pub polarity: i8,
    pub alpha: f64,
}

impl DecisionStump {
    #[inline]
    pub fn predict(&self, value: f64) -> bool {
        if self.polarity >= 0 {
            value > self.threshold
        } else {
            value < self.threshold
        }
    }

    /// Signed vote: +alpha for a positive prediction, −alpha otherwise.
    #[inline]
    pub fn vote(&self, value: f64) -> f64 {
        if self.predict(value) {
            self.alpha
        } else {
            -self.alpha
        }
    }
}

/// One cascade stage: a boosted stump ensemble with a calibrated cutoff on
/// the weighted vote sum, plus the validation rates it was calibrated at.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoostedStage {
    pub stumps: Vec<DecisionStump>,
    pub stage_threshold: f64,
    pub measured_d: f64,
    pub measured_f: f64,
}

impl BoostedStage {
    /// Weighted vote sum for one sample.
    pub fn vote_sum<S: FeatureSource>(&self, source: &mut S) -> f64 {
        self.stumps.iter().map(|s| s.vote(source.feature(s.feature_index))).sum()
    }
}

/// Which feature space a model's indices refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureSpace {
    #[serde(rename = "haar-window")]
    HaarWindow,
    #[serde(rename = "candidate-featurevector")]
    CandidateFeatureVector,
}

/// Outcome of scoring one sample with a cascade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeDecision {
    /// Accepted iff every stage accepted.
    pub accepted: bool,
    /// Margin (vote sum minus stage threshold) of the last stage evaluated;
    /// 0 for an empty cascade. Used to rank accepted samples.
    pub margin: f64,
}

const MODEL_FORMAT_VERSION: u32 = 1;

/// An ordered cascade of boosted stages over a declared feature space.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CascadeModel {
    pub format_version: u32,
    pub feature_space_tag: FeatureSpace,
    #[serde(rename = "M")]
    pub window: usize,
    pub stages: Vec<BoostedStage>,
}

impl CascadeModel {
    pub fn new(feature_space_tag: FeatureSpace, stages: Vec<BoostedStage>) -> Self {
        CascadeModel {
            format_version: MODEL_FORMAT_VERSION,
            feature_space_tag,
            window: WINDOW_SIZE,
            stages,
        }
    }

    /// Scores one sample, exiting at the first rejecting stage.
    pub fn score<S: FeatureSource>(&self, source: &mut S) -> CascadeDecision {
        let mut margin = 0.0;
        for stage in &self.stages {
            margin = stage.vote_sum(source) - stage.stage_threshold;
            if margin < 0.0 {
                return CascadeDecision { accepted: false, margin };
            }
        }
        CascadeDecision { accepted: true, margin }
    }

    fn validate(&self) -> Result<()> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Data(format!(
                "unsupported model format_version {} (expected {MODEL_FORMAT_VERSION})",
                self.format_version
            )));
        }
        for (i, stage) in self.stages.iter().enumerate() {
            if !(0.0..=1.0).contains(&stage.measured_d) || !(0.0..=1.0).contains(&stage.measured_f)
            {
                return Err(Error::Data(format!("stage {i} has rates outside [0, 1]")));
            }
            for stump in &stage.stumps {
                if !(stump.alpha.is_finite() && stump.alpha >= 0.0) {
                    return Err(Error::Data(format!("stage {i} has a non-finite or negative alpha")));
                }
                if stump.polarity != 1 && stump.polarity != -1 {
                    return Err(Error::Data(format!("stage {i} has polarity {}", stump.polarity)));
                }
            }
        }
        Ok(())
    }

    /// Serializes to the versioned JSON model format.
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Data(format!("cannot serialize model: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: CascadeModel = serde_json::from_str(text)
            .map_err(|e| Error::Data(format!("cannot parse model JSON: {e}")))?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Whole-cascade detection and false-positive rates from per-stage rates:
/// the product over stages.
pub fn cascade_rates(per_stage_d: &[f64], per_stage_f: &[f64]) -> Result<(f64, f64)> {
    if per_stage_d.is_empty() || per_stage_f.is_empty() {
        return Err(Error::Config("cascade_rates needs at least one stage".into()));
    }
    if per_stage_d.len() != per_stage_f.len() {
        return Err(Error::Config(format!(
            "rate lists differ in length: {} vs {}",
            per_stage_d.len(),
            per_stage_f.len()
        )));
    }
    for &r in per_stage_d.iter().chain(per_stage_f) {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::Config(format!("stage rate {r} outside [0, 1]")));
        }
    }
    Ok((per_stage_d.iter().product(), per_stage_f.iter().product()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stump(feature_index: usize, threshold: f64, polarity: i8, alpha: f64) -> DecisionStump {
        DecisionStump { feature_index, threshold, polarity, alpha }
    }

    #[test]
    fn cascade_rates_match_product_law() {
        let (d, f) = cascade_rates(&[0.99; 5], &[0.3; 5]).unwrap();
        assert!((d - 0.951).abs() < 1e-3);
        assert!((f - 0.00243).abs() < 1e-5);

        let (d, f) = cascade_rates(&[1.0], &[1.0]).unwrap();
        assert_eq!((d, f), (1.0, 1.0));

        let (d, f) = cascade_rates(&[0.9, 0.9], &[0.5, 0.5]).unwrap();
        assert!((d - 0.81).abs() < 1e-12);
        assert!((f - 0.25).abs() < 1e-12);
    }

    #[test]
    fn cascade_rates_rejects_empty_and_mismatched() {
        assert!(cascade_rates(&[], &[]).is_err());
        assert!(cascade_rates(&[0.9], &[0.5, 0.5]).is_err());
        assert!(cascade_rates(&[1.2], &[0.5]).is_err());
    }

    #[test]
    fn empty_cascade_accepts_everything() {
        let model = CascadeModel::new(FeatureSpace::HaarWindow, vec![]);
        let decision = model.score(&mut |_: usize| 0.0);
        assert!(decision.accepted);
        assert_eq!(decision.margin, 0.0);
    }

    #[test]
    fn early_exit_skips_later_stage_features() {
        let stage1 = BoostedStage {
            stumps: vec![stump(0, 0.5, 1, 1.0)],
            stage_threshold: 0.0,
            measured_d: 1.0,
            measured_f: 0.5,
        };
        let stage2 = BoostedStage {
            stumps: vec![stump(1, 0.5, 1, 1.0)],
            stage_threshold: 0.0,
            measured_d: 1.0,
            measured_f: 0.5,
        };
        let model = CascadeModel::new(FeatureSpace::CandidateFeatureVector, vec![stage1, stage2]);

        let mut probes = Vec::new();
        let decision = model.score(&mut |i: usize| {
            probes.push(i);
            0.0 // stage 1 votes negative, so the sample is rejected there
        });
        assert!(!decision.accepted);
        assert_eq!(probes, vec![0], "stage-2 features must not be evaluated");
    }

    #[test]
    fn acceptance_is_conjunction_of_stage_decisions() {
        let mk = |fi: usize| BoostedStage {
            stumps: vec![stump(fi, 0.0, 1, 2.0)],
            stage_threshold: 0.0,
            measured_d: 1.0,
            measured_f: 0.5,
        };
        let model = CascadeModel::new(FeatureSpace::CandidateFeatureVector, vec![mk(0), mk(1), mk(2)]);
        for bits in 0..8u32 {
            let values = [(bits & 1) as f64 - 0.5, ((bits >> 1) & 1) as f64 - 0.5, ((bits >> 2) & 1) as f64 - 0.5];
            let decision = model.score(&mut |i: usize| values[i]);
            let independent: bool = model.stages.iter().all(|stage| {
                stage.vote_sum(&mut |i: usize| values[i]) >= stage.stage_threshold
            });
            assert_eq!(decision.accepted, independent, "values {values:?}");
        }
    }

    #[test]
    fn model_json_roundtrip_is_bit_exact() {
        let model = CascadeModel::new(
            FeatureSpace::HaarWindow,
            vec![BoostedStage {
                stumps: vec![stump(7, -0.123456789012345e-3, -1, 1.0 / 3.0)],
                stage_threshold: 0.7071067811865476,
                measured_d: 0.99,
                measured_f: 0.3,
            }],
        );
        let json = model.to_json().unwrap();
        let reparsed = CascadeModel::from_json(&json).unwrap();
        assert_eq!(reparsed.to_json().unwrap(), json);
        assert_eq!(reparsed.stages[0].stumps[0].threshold, -0.123456789012345e-3);
        assert!(json.contains("\"feature_space_tag\": \"haar-window\""));
        assert!(json.contains("\"M\": 12"));
    }

    #[test]
    fn negative_alpha_rejected_on_load() {
        let mut model = CascadeModel::new(FeatureSpace::HaarWindow, vec![]);
        model.stages.push(BoostedStage {
            stumps: vec![stump(0, 0.0, 1, -1.0)],
            stage_threshold: 0.0,
            measured_d: 1.0,
            measured_f: 1.0,
        });
        let json = serde_json::to_string(&model).unwrap();
        assert!(CascadeModel::from_json(&json).is_err());
    }
}
