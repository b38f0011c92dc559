//! Cascade training: attentional negative mining, per-stage calibration to a
//! detection-rate target, and dense pixel scanning for inference.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sample::{WindowPixels, WindowSampleSet};
use super::{BoostedStage, CascadeDecision, CascadeModel, FeatureSpace, RusBoostTrainer, SampleSet};
use crate::data::{AnnotationSet, Mammogram};
use crate::features::haar::{haar_value, HaarFeature};
use crate::features::{enumerate_haar_bank, window_pixels, IntegralImage, WindowedImage};
use crate::{derive_seed, Error, Result, WINDOW_SIZE};

/// Sets the stage threshold to the largest cutoff that keeps at least
/// `d_target` of the validation positives, and records the rates measured at
/// that cutoff. Requires at least 10 validation positives.
pub fn calibrate_stage_threshold(
    mut stage: BoostedStage,
    val_pos_scores: &[f64],
    val_neg_scores: &[f64],
    d_target: f64,
) -> Result<BoostedStage> {
    if val_pos_scores.len() < 10 {
        return Err(Error::Training(format!(
            "stage calibration needs >= 10 validation positives, got {}",
            val_pos_scores.len()
        )));
    }
    if !(0.0..=1.0).contains(&d_target) {
        return Err(Error::Config(format!("d_target {d_target} outside [0, 1]")));
    }
    let mut sorted = val_pos_scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let drop = (((1.0 - d_target) * n as f64).floor() as usize).min(n - 1);
    let threshold = sorted[drop];

    let kept_pos = sorted.iter().filter(|&&s| s >= threshold).count();
    stage.stage_threshold = threshold;
    stage.measured_d = kept_pos as f64 / n as f64;
    stage.measured_f = if val_neg_scores.is_empty() {
        0.0
    } else {
        let kept_neg = val_neg_scores.iter().filter(|&&s| s >= threshold).count();
        kept_neg as f64 / val_neg_scores.len() as f64
    };
    debug_assert!(stage.measured_d >= d_target);
    Ok(stage)
}

/// Dense pixel classification of one (preprocessed) image.
#[derive(Debug, Clone)]
pub struct PixelScan {
    pub width: usize,
    pub height: usize,
    pub accept: Vec<bool>,
    /// Final-stage margin per pixel (negative where rejected).
    pub margin: Vec<f32>,
}

fn scan_grid_row(
    windowed: &WindowedImage,
    model: &CascadeModel,
    bank: &[HaarFeature],
    y: usize,
    stride: usize,
) -> Vec<CascadeDecision> {
    let mut out = Vec::with_capacity(windowed.width().div_ceil(stride));
    let ii = windowed.integral();
    let mut x = 0;
    while x < windowed.width() {
        let origin = windowed.window_origin(x, y);
        let mut source = |i: usize| haar_value(ii, origin, &bank[i]);
        out.push(model.score(&mut source));
        x += stride;
    }
    out
}

fn expand_scan(
    width: usize,
    height: usize,
    stride: usize,
    grid_rows: Vec<Vec<CascadeDecision>>,
) -> PixelScan {
    let mut accept = vec![false; width * height];
    let mut margin = vec![0.0f32; width * height];
    for (gy, row) in grid_rows.iter().enumerate() {
        let y0 = gy * stride;
        for (gx, decision) in row.iter().enumerate() {
            let x0 = gx * stride;
            for y in y0..(y0 + stride).min(height) {
                for x in x0..(x0 + stride).min(width) {
                    accept[y * width + x] = decision.accepted;
                    margin[y * width + x] = decision.margin as f32;
                }
            }
        }
    }
    PixelScan { width, height, accept, margin }
}

/// Classifies every pixel of the image through the cascade. With `stride > 1`
/// each decision fills its stride×stride block.
pub fn cascade_accept_map(
    image: &Mammogram,
    model: &CascadeModel,
    bank: &[HaarFeature],
    stride: usize,
) -> PixelScan {
    let stride = stride.max(1);
    let windowed = WindowedImage::new(image);
    let n_grid_rows = image.height().div_ceil(stride);
    let grid_rows = crate::exec::map_indexed(n_grid_rows, |gy| {
        scan_grid_row(&windowed, model, bank, gy * stride, stride)
    });
    expand_scan(image.width(), image.height(), stride, grid_rows)
}

/// Sequential twin of [`cascade_accept_map`].
pub fn cascade_accept_map_seq(
    image: &Mammogram,
    model: &CascadeModel,
    bank: &[HaarFeature],
    stride: usize,
) -> PixelScan {
    let stride = stride.max(1);
    let windowed = WindowedImage::new(image);
    let n_grid_rows = image.height().div_ceil(stride);
    let grid_rows: Vec<Vec<CascadeDecision>> = (0..n_grid_rows)
        .map(|gy| scan_grid_row(&windowed, model, bank, gy * stride, stride))
        .collect();
    expand_scan(image.width(), image.height(), stride, grid_rows)
}

/// Scores raw windows through a cascade model.
pub fn score_windows(
    model: &CascadeModel,
    bank: &[HaarFeature],
    windows: &[WindowPixels],
) -> Vec<CascadeDecision> {
    crate::exec::map_slice(windows, |w| {
        let ii = IntegralImage::from_pixels(w, WINDOW_SIZE, WINDOW_SIZE);
        let mut source = |i: usize| haar_value(&ii, (0, 0), &bank[i]);
        model.score(&mut source)
    })
}

/// Per-pixel annotation bitmap for one image.
pub fn annotated_mask(image: &Mammogram, annotations: &AnnotationSet) -> Vec<bool> {
    let mut mask = vec![false; image.width() * image.height()];
    for region in &annotations.regions {
        for (x, y) in region.pixels() {
            mask[y * image.width() + x] = true;
        }
    }
    mask
}

/// Windows centered on every annotated pixel of every image.
pub fn collect_positive_windows(records: &[(Mammogram, AnnotationSet)]) -> Vec<WindowPixels> {
    let per_image: Vec<Vec<WindowPixels>> = crate::exec::map_slice(records, |(img, ann)| {
        let mask = annotated_mask(img, ann);
        let mut windows = Vec::new();
        for y in 0..img.height() {
            for x in 0..img.width() {
                if mask[y * img.width() + x] {
                    windows.push(window_pixels(img, (x, y)));
                }
            }
        }
        windows
    });
    per_image.into_iter().flatten().collect()
}

/// Reservoir-samples up to `cap` items from a streamed sequence length.
struct Reservoir<T> {
    cap: usize,
    seen: usize,
    items: Vec<T>,
    rng: ChaCha8Rng,
}

impl<T> Reservoir<T> {
    fn new(cap: usize, seed: u64) -> Self {
        Reservoir { cap, seen: 0, items: Vec::new(), rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    fn offer(&mut self, item: T) {
        self.seen += 1;
        if self.items.len() < self.cap {
            self.items.push(item);
        } else {
            let j = self.rng.gen_range(0..self.seen);
            if j < self.cap {
                self.items[j] = item;
            }
        }
    }
}

/// Uniformly samples windows centered on non-annotated pixels.
pub fn sample_negative_windows(
    records: &[(Mammogram, AnnotationSet)],
    cap: usize,
    seed: u64,
) -> Vec<WindowPixels> {
    let mut reservoir: Reservoir<(usize, usize, usize)> = Reservoir::new(cap, seed);
    for (idx, (img, ann)) in records.iter().enumerate() {
        let mask = annotated_mask(img, ann);
        for y in 0..img.height() {
            for x in 0..img.width() {
                if !mask[y * img.width() + x] {
                    reservoir.offer((idx, x, y));
                }
            }
        }
    }
    reservoir
        .items
        .iter()
        .map(|&(idx, x, y)| window_pixels(&records[idx].0, (x, y)))
        .collect()
}

/// Mines negatives accepted by the current cascade prefix: the classic
/// bootstrapped false-positive pool. An empty model accepts everything, so
/// stage one draws uniformly from all non-annotated pixels.
fn mine_accepted_negatives(
    records: &[(Mammogram, AnnotationSet)],
    model: &CascadeModel,
    bank: &[HaarFeature],
    cap: usize,
    seed: u64,
) -> Vec<WindowPixels> {
    if model.stages.is_empty() {
        return sample_negative_windows(records, cap, seed);
    }
    let mut reservoir: Reservoir<(usize, usize, usize)> = Reservoir::new(cap, seed);
    for (idx, (img, ann)) in records.iter().enumerate() {
        let scan = cascade_accept_map(img, model, bank, 1);
        let mask = annotated_mask(img, ann);
        for y in 0..img.height() {
            for x in 0..img.width() {
                let i = y * img.width() + x;
                if scan.accept[i] && !mask[i] {
                    reservoir.offer((idx, x, y));
                }
            }
        }
    }
    reservoir
        .items
        .iter()
        .map(|&(idx, x, y)| window_pixels(&records[idx].0, (x, y)))
        .collect()
}

/// Preprocessed images available to cascade training.
pub struct CascadeTrainingSet<'a> {
    pub train: &'a [(Mammogram, AnnotationSet)],
    pub validation: &'a [(Mammogram, AnnotationSet)],
}

#[derive(Debug, Clone)]
pub struct CascadeParams {
    /// Weak-learner budget per stage.
    pub stage_budgets: Vec<usize>,
    /// Per-stage detection-rate target on validation survivors.
    pub d_target: f64,
    /// Per-stage false-positive-rate target; a stage stops adding stumps
    /// early once its measured rate drops to this.
    pub f_target: f64,
    /// Mined negative pool size per stage.
    pub neg_pool_size: usize,
    /// Negatives per positive in each boosting round's under-sample.
    pub neg_pos_ratio: f64,
    /// Validation negatives sampled for calibration.
    pub val_neg_cap: usize,
    pub seed: u64,
}

impl Default for CascadeParams {
    fn default() -> Self {
        CascadeParams {
            stage_budgets: vec![2, 3, 5, 12, 40],
            d_target: 0.99,
            f_target: 0.30,
            neg_pool_size: 100_000,
            neg_pos_ratio: 1.0,
            val_neg_cap: 20_000,
            seed: 0,
        }
    }
}

/// Trains the pixel cascade with attentional negative mining.
///
/// Stage s trains only on negatives accepted by stages 1..s−1, mined fresh
/// from the training images. Each stage is calibrated on the validation
/// positives that survived the earlier stages, so the product of the
/// per-stage measured rates equals the end-to-end validation rates.
pub fn train_cascade(data: &CascadeTrainingSet, params: &CascadeParams) -> Result<CascadeModel> {
    if params.stage_budgets.is_empty() {
        return Err(Error::Config("cascade needs at least one stage budget".into()));
    }
    if params.stage_budgets.iter().any(|&b| b == 0) {
        return Err(Error::Config("stage budgets must be >= 1".into()));
    }
    let bank = enumerate_haar_bank(WINDOW_SIZE)?;

    let train_pos = collect_positive_windows(data.train);
    if train_pos.is_empty() {
        return Err(Error::Training("no annotated pixels in the training images".into()));
    }
    let val_pos = collect_positive_windows(data.validation);
    let val_neg = sample_negative_windows(
        data.validation,
        params.val_neg_cap,
        derive_seed(params.seed, "cascade-val-neg"),
    );
    let pos_set = WindowSampleSet::new(train_pos, bank.clone());
    let val_pos_set = WindowSampleSet::new(val_pos, bank.clone());
    let val_neg_set = WindowSampleSet::new(val_neg, bank.clone());

    let mut model = CascadeModel::new(FeatureSpace::HaarWindow, Vec::new());
    let mut surviving_pos: Vec<usize> = (0..val_pos_set.len()).collect();
    let mut surviving_neg: Vec<usize> = (0..val_neg_set.len()).collect();

    for (stage_idx, &budget) in params.stage_budgets.iter().enumerate() {
        let pool = mine_accepted_negatives(
            data.train,
            &model,
            &bank,
            params.neg_pool_size,
            derive_seed(params.seed, &format!("cascade-mine-{stage_idx}")),
        );
        if pool.is_empty() {
            log::warn!(
                "no negatives survive to stage {stage_idx}; cascade truncated at {} stages",
                model.stages.len()
            );
            break;
        }
        let neg_set = WindowSampleSet::new(pool, bank.clone());
        let mut trainer = RusBoostTrainer::new(
            &pos_set,
            &neg_set,
            params.neg_pos_ratio,
            derive_seed(params.seed, &format!("cascade-stage-{stage_idx}")),
        )?;

        let mut pos_scores = vec![0.0f64; surviving_pos.len()];
        let mut neg_scores = vec![0.0f64; surviving_neg.len()];
        let mut calibrated: Option<BoostedStage> = None;
        for _round in 0..budget {
            let stump = trainer.round()?;
            let f = stump.feature_index;
            let pos_votes = crate::exec::map_slice(&surviving_pos, |&i| {
                stump.vote(val_pos_set.feature(i, f))
            });
            let neg_votes = crate::exec::map_slice(&surviving_neg, |&i| {
                stump.vote(val_neg_set.feature(i, f))
            });
            for (s, v) in pos_scores.iter_mut().zip(pos_votes) {
                *s += v;
            }
            for (s, v) in neg_scores.iter_mut().zip(neg_votes) {
                *s += v;
            }

            let stage = BoostedStage {
                stumps: trainer.stumps().to_vec(),
                stage_threshold: 0.0,
                measured_d: 1.0,
                measured_f: 1.0,
            };
            let stage = calibrate_stage_threshold(stage, &pos_scores, &neg_scores, params.d_target)?;
            let done = stage.measured_f <= params.f_target;
            calibrated = Some(stage);
            if done {
                break;
            }
        }
        let stage = calibrated.expect("budget >= 1 guarantees at least one round");

        // Only validation samples accepted here reach the next stage.
        let threshold = stage.stage_threshold;
        surviving_pos = surviving_pos
            .iter()
            .zip(&pos_scores)
            .filter(|(_, &s)| s >= threshold)
            .map(|(&i, _)| i)
            .collect();
        surviving_neg = surviving_neg
            .iter()
            .zip(&neg_scores)
            .filter(|(_, &s)| s >= threshold)
            .map(|(&i, _)| i)
            .collect();
        model.stages.push(stage);
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibration_keeps_the_target_fraction() {
        let stage = BoostedStage {
            stumps: vec![],
            stage_threshold: 0.0,
            measured_d: 1.0,
            measured_f: 1.0,
        };
        let pos: Vec<f64> = (1..=100).map(f64::from).collect();
        let neg: Vec<f64> = (1..=100).map(|v| f64::from(v) / 200.0).collect();
        let out = calibrate_stage_threshold(stage, &pos, &neg, 0.99).unwrap();
        assert!(out.stage_threshold <= 2.0, "threshold {} above 2nd-smallest", out.stage_threshold);
        assert!(out.measured_d >= 0.99);
    }

    #[test]
    fn calibration_with_equal_scores_keeps_everything() {
        let stage = BoostedStage {
            stumps: vec![],
            stage_threshold: 0.0,
            measured_d: 1.0,
            measured_f: 1.0,
        };
        let pos = vec![3.25; 40];
        let out = calibrate_stage_threshold(stage, &pos, &[], 0.99).unwrap();
        assert_eq!(out.stage_threshold, 3.25);
        assert_eq!(out.measured_d, 1.0);
        assert_eq!(out.measured_f, 0.0);
    }

    #[test]
    fn calibration_separated_scores_have_low_f() {
        // Score distributions separated by ~4x their common spread; a d=0.99
        // cutoff then leaves well under 10% of negatives above threshold.
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let pos_dist = Normal::new(3.0, 0.7).unwrap();
        let neg_dist = Normal::new(0.0, 0.7).unwrap();
        let pos: Vec<f64> = (0..2000).map(|_| pos_dist.sample(&mut rng)).collect();
        let neg: Vec<f64> = (0..2000).map(|_| neg_dist.sample(&mut rng)).collect();
        let stage = BoostedStage {
            stumps: vec![],
            stage_threshold: 0.0,
            measured_d: 1.0,
            measured_f: 1.0,
        };
        let out = calibrate_stage_threshold(stage, &pos, &neg, 0.99).unwrap();
        assert!(out.measured_f < 0.1, "measured_f {} too high", out.measured_f);
    }

    #[test]
    fn calibration_requires_ten_positives() {
        let stage = BoostedStage {
            stumps: vec![],
            stage_threshold: 0.0,
            measured_d: 1.0,
            measured_f: 1.0,
        };
        assert!(calibrate_stage_threshold(stage, &[1.0; 9], &[], 0.99).is_err());
    }
}
