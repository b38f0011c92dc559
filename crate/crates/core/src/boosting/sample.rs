//! Sample containers for boosting: dense feature matrices and lazy
//! Haar-over-window sets that only materialize the features a round needs.

use crate::features::haar::{haar_value, haar_values_into, HaarFeature};
use crate::features::IntegralImage;
use crate::{Error, Result, WINDOW_SIZE};

use super::DecisionStump;

/// Read access to a set of samples in a fixed feature space.
pub trait SampleSet: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn n_features(&self) -> usize;

    /// One feature of one sample.
    fn feature(&self, sample: usize, feature: usize) -> f64;

    /// All features of one sample, into `out` (length `n_features`).
    fn fill_row(&self, sample: usize, out: &mut [f64]) {
        for (f, slot) in out.iter_mut().enumerate() {
            *slot = self.feature(sample, f);
        }
    }

    /// Weighted-vote score of one sample under a stump ensemble.
    fn ensemble_score(&self, sample: usize, stumps: &[DecisionStump]) -> f64 {
        stumps.iter().map(|s| s.vote(self.feature(sample, s.feature_index))).sum()
    }
}

/// Scores every sample of a set under an ensemble, in order.
pub fn score_all<S: SampleSet>(set: &S, stumps: &[DecisionStump]) -> Vec<f64> {
    crate::exec::map_indexed(set.len(), |i| set.ensemble_score(i, stumps))
}

/// Dense row-major feature matrix.
#[derive(Debug, Clone, Default)]
pub struct FeatureMatrix {
    n_features: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(n_features: usize) -> Self {
        FeatureMatrix { n_features, data: Vec::new() }
    }

    pub fn with_capacity(n_features: usize, rows: usize) -> Self {
        FeatureMatrix { n_features, data: Vec::with_capacity(n_features * rows) }
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.n_features {
            return Err(Error::Training(format!(
                "row has {} features, matrix expects {}",
                row.len(),
                self.n_features
            )));
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_features = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut m = FeatureMatrix::with_capacity(n_features, rows.len());
        for r in rows {
            m.push_row(r)?;
        }
        Ok(m)
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_features..(i + 1) * self.n_features]
    }
}

impl SampleSet for FeatureMatrix {
    fn len(&self) -> usize {
        if self.n_features == 0 {
            0
        } else {
            self.data.len() / self.n_features
        }
    }

    fn n_features(&self) -> usize {
        self.n_features
    }

    #[inline]
    fn feature(&self, sample: usize, feature: usize) -> f64 {
        self.data[sample * self.n_features + feature]
    }

    fn fill_row(&self, sample: usize, out: &mut [f64]) {
        out.copy_from_slice(self.row(sample));
    }
}

/// Raw pixel window stored for lazy Haar evaluation.
pub type WindowPixels = [f32; WINDOW_SIZE * WINDOW_SIZE];

/// A set of 12×12 pixel windows whose feature space is the Haar bank.
///
/// Windows are cheap to hold (576 bytes each), so a six-figure negative pool
/// fits in memory while its 1,697-dimensional feature rows are computed only
/// for the samples a boosting round actually draws.
pub struct WindowSampleSet {
    windows: Vec<WindowPixels>,
    bank: Vec<HaarFeature>,
}

impl WindowSampleSet {
    pub fn new(windows: Vec<WindowPixels>, bank: Vec<HaarFeature>) -> Self {
        WindowSampleSet { windows, bank }
    }

    pub fn bank(&self) -> &[HaarFeature] {
        &self.bank
    }

    fn integral(&self, sample: usize) -> IntegralImage {
        IntegralImage::from_pixels(&self.windows[sample], WINDOW_SIZE, WINDOW_SIZE)
    }
}

impl SampleSet for WindowSampleSet {
    fn len(&self) -> usize {
        self.windows.len()
    }

    fn n_features(&self) -> usize {
        self.bank.len()
    }

    fn feature(&self, sample: usize, feature: usize) -> f64 {
        haar_value(&self.integral(sample), (0, 0), &self.bank[feature])
    }

    fn fill_row(&self, sample: usize, out: &mut [f64]) {
        haar_values_into(&self.integral(sample), (0, 0), &self.bank, out);
    }

    fn ensemble_score(&self, sample: usize, stumps: &[DecisionStump]) -> f64 {
        let ii = self.integral(sample);
        stumps
            .iter()
            .map(|s| s.vote(haar_value(&ii, (0, 0), &self.bank[s.feature_index])))
            .sum()
    }
}

/// Materializes full Haar feature rows for a list of windows.
pub fn haar_feature_rows(windows: &[WindowPixels], bank: &[HaarFeature]) -> FeatureMatrix {
    let n_features = bank.len();
    let rows: Vec<Vec<f64>> = crate::exec::map_slice(windows, |w| {
        let ii = IntegralImage::from_pixels(w, WINDOW_SIZE, WINDOW_SIZE);
        let mut row = vec![0.0; n_features];
        haar_values_into(&ii, (0, 0), bank, &mut row);
        row
    });
    let mut m = FeatureMatrix::with_capacity(n_features, windows.len());
    for r in &rows {
        m.push_row(r).expect("row length matches bank");
    }
    m
}

/// Sequential twin of [`haar_feature_rows`], kept for benchmarking the
/// parallel speedup.
pub fn haar_feature_rows_seq(windows: &[WindowPixels], bank: &[HaarFeature]) -> FeatureMatrix {
    let n_features = bank.len();
    let mut m = FeatureMatrix::with_capacity(n_features, windows.len());
    let mut row = vec![0.0; n_features];
    for w in windows {
        let ii = IntegralImage::from_pixels(w, WINDOW_SIZE, WINDOW_SIZE);
        haar_values_into(&ii, (0, 0), bank, &mut row);
        m.push_row(&row).expect("row length matches bank");
    }
    m
}
