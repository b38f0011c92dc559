//! RUSBoost: AdaBoost over decision stumps with per-round random
//! under-sampling of the majority (negative) class.
//!
//! Each round draws a weight-proportional negative subsample (without
//! replacement) down to `ratio` negatives per positive, fits the best stump
//! on that balanced subset, then computes the stump's weighted error and the
//! multiplicative weight update over the FULL training set. Weights are
//! renormalized to sum 1 after every round.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sample::SampleSet;
use super::DecisionStump;
use crate::{Error, Result};

const EPSILON_FLOOR: f64 = 1e-10;

/// Column-major view of a sample block: `column(f)` is contiguous.
pub struct ColumnSamples {
    n_samples: usize,
    n_features: usize,
    data: Vec<f64>,
}

impl ColumnSamples {
    pub fn from_rows(rows: &[f64], n_samples: usize, n_features: usize) -> Self {
        debug_assert_eq!(rows.len(), n_samples * n_features);
        let mut data = vec![0.0; rows.len()];
        for s in 0..n_samples {
            for f in 0..n_features {
                data[f * n_samples + s] = rows[s * n_features + f];
            }
        }
        ColumnSamples { n_samples, n_features, data }
    }

    pub fn from_set<S: SampleSet>(set: &S) -> Self {
        let n_features = set.n_features();
        let rows: Vec<Vec<f64>> = crate::exec::map_indexed(set.len(), |i| {
            let mut row = vec![0.0; n_features];
            set.fill_row(i, &mut row);
            row
        });
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        Self::from_rows(&flat, set.len(), n_features)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n_samples
    }

    pub fn is_empty(&self) -> bool {
        self.n_samples == 0
    }

    #[inline]
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    #[inline]
    pub fn column(&self, feature: usize) -> &[f64] {
        &self.data[feature * self.n_samples..(feature + 1) * self.n_samples]
    }
}

/// Best threshold found for one feature (or the whole search).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StumpSplit {
    pub feature_index: usize,
    pub threshold: f64,
    pub polarity: i8,
    pub weighted_error: f64,
}

/// Scans one feature for its lowest weighted-error midpoint threshold.
///
/// Ties keep the lowest threshold, and polarity +1 beats −1 at equal error.
/// Returns `None` when the feature is constant on this sample block.
fn scan_feature(
    pos_vals: &[f64],
    neg_vals: &[f64],
    pos_w: &[f64],
    neg_w: &[f64],
) -> Option<(f64, f64, i8)> {
    let n = pos_vals.len() + neg_vals.len();
    let mut items: Vec<(f64, f64, bool)> = Vec::with_capacity(n);
    items.extend(pos_vals.iter().zip(pos_w).map(|(&v, &w)| (v, w, true)));
    items.extend(neg_vals.iter().zip(neg_w).map(|(&v, &w)| (v, w, false)));
    items.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

    let total_pos: f64 = pos_w.iter().sum();
    let total_neg: f64 = neg_w.iter().sum();
    let mut below_pos = 0.0;
    let mut below_neg = 0.0;
    let mut best: Option<(f64, f64, i8)> = None;
    for i in 0..n - 1 {
        let (v, w, is_pos) = items[i];
        if is_pos {
            below_pos += w;
        } else {
            below_neg += w;
        }
        let next = items[i + 1].0;
        if next <= v {
            continue;
        }
        let threshold = 0.5 * (v + next);
        // polarity +1: positive iff value > threshold
        let err_plus = below_pos + (total_neg - below_neg);
        // polarity −1: positive iff value < threshold
        let err_minus = below_neg + (total_pos - below_pos);
        for (err, polarity) in [(err_plus, 1i8), (err_minus, -1i8)] {
            if best.map_or(true, |(e, _, _)| err < e) {
                best = Some((err, threshold, polarity));
            }
        }
    }
    best
}

fn select_best(candidates: Vec<Option<(f64, f64, i8)>>) -> Result<StumpSplit> {
    let mut best: Option<StumpSplit> = None;
    for (feature_index, cand) in candidates.into_iter().enumerate() {
        let Some((weighted_error, threshold, polarity)) = cand else {
            continue;
        };
        if best.map_or(true, |b| weighted_error < b.weighted_error) {
            best = Some(StumpSplit { feature_index, threshold, polarity, weighted_error });
        }
    }
    best.ok_or_else(|| Error::Training("every feature is constant on the sampled subset".into()))
}

/// Finds the minimum-weighted-error stump across all features.
/// Ties go to the lowest feature index, then the lowest threshold.
pub fn find_best_stump(
    pos: &ColumnSamples,
    neg: &ColumnSamples,
    pos_w: &[f64],
    neg_w: &[f64],
) -> Result<StumpSplit> {
    let candidates = crate::exec::map_indexed(pos.n_features(), |f| {
        scan_feature(pos.column(f), neg.column(f), pos_w, neg_w)
    });
    select_best(candidates)
}

/// Sequential twin of [`find_best_stump`].
pub fn find_best_stump_seq(
    pos: &ColumnSamples,
    neg: &ColumnSamples,
    pos_w: &[f64],
    neg_w: &[f64],
) -> Result<StumpSplit> {
    let candidates = (0..pos.n_features())
        .map(|f| scan_feature(pos.column(f), neg.column(f), pos_w, neg_w))
        .collect();
    select_best(candidates)
}

/// Incremental RUSBoost trainer; cascade stages drive it round by round so
/// they can calibrate and stop early.
pub struct RusBoostTrainer<'a, P: SampleSet, N: SampleSet> {
    pos: &'a P,
    neg: &'a N,
    pos_cols: ColumnSamples,
    ratio: f64,
    rng: ChaCha8Rng,
    /// Full-set weights, positives first; always sums to 1.
    weights: Vec<f64>,
    stumps: Vec<DecisionStump>,
}

impl<'a, P: SampleSet, N: SampleSet> RusBoostTrainer<'a, P, N> {
    pub fn new(pos: &'a P, neg: &'a N, neg_pos_ratio: f64, seed: u64) -> Result<Self> {
        if pos.is_empty() || neg.is_empty() {
            return Err(Error::Training(format!(
                "need at least one positive and one negative sample (got {} / {})",
                pos.len(),
                neg.len()
            )));
        }
        if pos.n_features() != neg.n_features() {
            return Err(Error::Training(format!(
                "feature spaces differ: {} vs {}",
                pos.n_features(),
                neg.n_features()
            )));
        }
        if !(neg_pos_ratio.is_finite() && neg_pos_ratio > 0.0) {
            return Err(Error::Training(format!("neg:pos ratio must be positive, got {neg_pos_ratio}")));
        }
        // Uniform initialization (the classic choice): the per-round
        // under-sample then yields a count- and weight-balanced subset.
        let n = pos.len() + neg.len();
        Ok(RusBoostTrainer {
            pos_cols: ColumnSamples::from_set(pos),
            pos,
            neg,
            ratio: neg_pos_ratio,
            rng: ChaCha8Rng::seed_from_u64(seed),
            weights: vec![1.0 / n as f64; n],
            stumps: Vec::new(),
        })
    }

    pub fn stumps(&self) -> &[DecisionStump] {
        &self.stumps
    }

    /// Current full-set weight sum (1 up to float error); exposed so the
    /// renormalization invariant can be asserted from outside.
    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Weight-proportional sampling without replacement (exponential-keys
    /// method): draw one uniform per item in index order, keep the top-k by
    /// `ln(u)/w`.
    fn sample_negatives(&mut self, k: usize) -> Vec<usize> {
        let n_pos = self.pos.len();
        let mut keyed: Vec<(f64, usize)> = (0..self.neg.len())
            .map(|i| {
                let u: f64 = self.rng.gen_range(f64::MIN_POSITIVE..1.0);
                let w = self.weights[n_pos + i];
                let key = if w > 0.0 { u.ln() / w } else { f64::NEG_INFINITY };
                (key, i)
            })
            .collect();
        keyed.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut chosen: Vec<usize> = keyed.into_iter().take(k).map(|(_, i)| i).collect();
        chosen.sort_unstable();
        chosen
    }

    /// Runs one boosting round and returns the stump it appended.
    pub fn round(&mut self) -> Result<DecisionStump> {
        let n_pos = self.pos.len();
        let k = ((self.ratio * n_pos as f64).round() as usize).clamp(1, self.neg.len());
        let chosen = self.sample_negatives(k);

        // Materialize the sampled negatives' feature rows.
        let n_features = self.pos.n_features();
        let rows: Vec<Vec<f64>> = crate::exec::map_slice(&chosen, |&i| {
            let mut row = vec![0.0; n_features];
            self.neg.fill_row(i, &mut row);
            row
        });
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let neg_cols = ColumnSamples::from_rows(&flat, chosen.len(), n_features);

        // Subset weights, normalized so errors are comparable across rounds.
        let mut pos_w: Vec<f64> = self.weights[..n_pos].to_vec();
        let mut neg_w: Vec<f64> = chosen.iter().map(|&i| self.weights[n_pos + i]).collect();
        let subset_total: f64 = pos_w.iter().sum::<f64>() + neg_w.iter().sum::<f64>();
        if subset_total <= 0.0 {
            return Err(Error::Training("subset weights sum to zero".into()));
        }
        pos_w.iter_mut().for_each(|w| *w /= subset_total);
        neg_w.iter_mut().for_each(|w| *w /= subset_total);

        let split = find_best_stump(&self.pos_cols, &neg_cols, &pos_w, &neg_w)?;
        let mut stump = DecisionStump {
            feature_index: split.feature_index,
            threshold: split.threshold,
            polarity: split.polarity,
            alpha: 0.0,
        };

        // Full-set weighted error; flip polarity if the subset's best stump is
        // worse than chance on the whole set, so alpha stays nonnegative.
        let predictions = self.full_set_predictions(&stump);
        let mut eps = self.weighted_error(&predictions, n_pos);
        if eps > 0.5 {
            stump.polarity = -stump.polarity;
            eps = 1.0 - eps;
        }
        let eps = eps.clamp(EPSILON_FLOOR, 1.0 - EPSILON_FLOOR);
        stump.alpha = 0.5 * ((1.0 - eps) / eps).ln();

        // Multiplicative update over the full set, then renormalize.
        let predictions = self.full_set_predictions(&stump);
        let up = stump.alpha.exp();
        let down = (-stump.alpha).exp();
        for (i, w) in self.weights.iter_mut().enumerate() {
            let correct = predictions[i] == (i < n_pos);
            *w *= if correct { down } else { up };
        }
        let total: f64 = self.weights.iter().sum();
        self.weights.iter_mut().for_each(|w| *w /= total);

        self.stumps.push(stump.clone());
        Ok(stump)
    }

    fn full_set_predictions(&self, stump: &DecisionStump) -> Vec<bool> {
        let f = stump.feature_index;
        let pos_col = self.pos_cols.column(f);
        let mut out: Vec<bool> = pos_col.iter().map(|&v| stump.predict(v)).collect();
        let neg_preds =
            crate::exec::map_indexed(self.neg.len(), |i| stump.predict(self.neg.feature(i, f)));
        out.extend(neg_preds);
        out
    }

    fn weighted_error(&self, predictions: &[bool], n_pos: usize) -> f64 {
        predictions
            .iter()
            .enumerate()
            .filter(|&(i, &p)| p != (i < n_pos))
            .map(|(i, _)| self.weights[i])
            .sum()
    }
}

/// Trains a RUSBoost stump ensemble of `n_weak` rounds.
pub fn train_rusboost<P: SampleSet, N: SampleSet>(
    pos: &P,
    neg: &N,
    n_weak: usize,
    neg_pos_ratio: f64,
    seed: u64,
) -> Result<Vec<DecisionStump>> {
    if n_weak == 0 {
        return Err(Error::Training("n_weak must be at least 1".into()));
    }
    let mut trainer = RusBoostTrainer::new(pos, neg, neg_pos_ratio, seed)?;
    for _ in 0..n_weak {
        trainer.round()?;
    }
    Ok(trainer.stumps.clone())
}
