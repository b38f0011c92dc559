//! Feature extraction: integral images, the Haar bank, shape, SGLD texture,
//! LBP histograms and bicubic patch resizing.

pub mod haar;
pub mod integral;
pub mod lbp;
pub mod resize;
pub mod sgld;
pub mod shape;
pub mod window;

pub use haar::{enumerate_haar_bank, haar_value, haar_value_checked, HaarFeature, HaarKind};
pub use integral::IntegralImage;
pub use lbp::{lbp_code, lbp_histogram};
pub use resize::{resize_bicubic, resize_to_patch};
pub use sgld::sgld_features;
pub use shape::{shape_features, SHAPE_FEATURE_NAMES};
pub use window::{window_pixels, WindowedImage};

use crate::data::RegionMask;
use crate::{Error, Result, FEATURE_VECTOR_LEN, HAAR_BANK_LEN};

/// Side length of the fixed analysis patch.
pub const PATCH_SIDE: usize = crate::WINDOW_SIZE;

/// A 12×12 intensity patch in double precision.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    data: [f64; PATCH_SIDE * PATCH_SIDE],
}

impl Patch {
    pub fn new(data: [f64; PATCH_SIDE * PATCH_SIDE]) -> Self {
        Patch { data }
    }

    pub fn constant(value: f64) -> Self {
        Patch { data: [value; PATCH_SIDE * PATCH_SIDE] }
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        if values.len() != PATCH_SIDE * PATCH_SIDE {
            return Err(Error::Data(format!(
                "patch needs {} values, got {}",
                PATCH_SIDE * PATCH_SIDE,
                values.len()
            )));
        }
        let mut data = [0.0; PATCH_SIDE * PATCH_SIDE];
        data.copy_from_slice(values);
        Ok(Patch { data })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * PATCH_SIDE + x]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn integral(&self) -> IntegralImage {
        IntegralImage::from_fn(PATCH_SIDE, PATCH_SIDE, |x, y| self.get(x, y))
    }
}

/// Index ranges of the feature groups inside a [`FeatureVector`].
pub const SHAPE_RANGE: std::ops::Range<usize> = 0..11;
pub const SGLD_RANGE: std::ops::Range<usize> = 11..38;
pub const HAAR_RANGE: std::ops::Range<usize> = 38..38 + HAAR_BANK_LEN;
pub const LBP_RANGE: std::ops::Range<usize> = 38 + HAAR_BANK_LEN..FEATURE_VECTOR_LEN;

/// The concatenated candidate descriptor: 11 shape, 27 SGLD, 1,697 Haar and
/// 256 LBP values in that fixed order (1,991 total).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
}

impl FeatureVector {
    /// Extracts the full descriptor for one candidate: shape features from its
    /// native-resolution mask, the rest from the resized 12×12 patch.
    pub fn extract(mask: &RegionMask, patch: &Patch, bank: &[HaarFeature]) -> Result<Self> {
        debug_assert_eq!(bank.len(), HAAR_BANK_LEN);
        let mut values = Vec::with_capacity(FEATURE_VECTOR_LEN);
        values.extend_from_slice(&shape_features(mask)?);
        values.extend_from_slice(&sgld_features(patch));
        let ii = patch.integral();
        let start = values.len();
        values.resize(start + HAAR_BANK_LEN, 0.0);
        haar::haar_values_into(&ii, (0, 0), bank, &mut values[start..]);
        values.extend_from_slice(&lbp_histogram(patch));
        debug_assert_eq!(values.len(), FEATURE_VECTOR_LEN);
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "feature {} ({}) is not finite for this candidate",
                bad,
                feature_name(bad)
            )));
        }
        Ok(FeatureVector { values })
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }
}

/// Human-readable name of a feature index, used for CSV dumps.
pub fn feature_name(index: usize) -> String {
    if SHAPE_RANGE.contains(&index) {
        format!("shape_{}", SHAPE_FEATURE_NAMES[index])
    } else if SGLD_RANGE.contains(&index) {
        let local = index - SGLD_RANGE.start;
        let (dx, dy) = sgld::SGLD_OFFSETS[local / 9];
        format!("sgld_d{dx}{dy}_{}", sgld::SGLD_STAT_NAMES[local % 9])
    } else if HAAR_RANGE.contains(&index) {
        format!("haar_{:04}", index - HAAR_RANGE.start)
    } else {
        format!("lbp_{:03}", index - LBP_RANGE.start)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_vector_has_fixed_layout() {
        let mask = RegionMask::from_points(&[(0, 0), (1, 0), (0, 1), (1, 1)]).unwrap();
        let mut data = [0.0; PATCH_SIDE * PATCH_SIDE];
        for (i, v) in data.iter_mut().enumerate() {
            *v = ((i * 29 + 3) % 101) as f64;
        }
        let bank = enumerate_haar_bank(12).unwrap();
        let fv = FeatureVector::extract(&mask, &Patch::new(data), &bank).unwrap();
        assert_eq!(fv.values().len(), FEATURE_VECTOR_LEN);
        assert!(fv.values().iter().all(|v| v.is_finite()));
        // Group boundaries line up.
        assert_eq!(SHAPE_RANGE.len(), 11);
        assert_eq!(SGLD_RANGE.len(), 27);
        assert_eq!(HAAR_RANGE.len(), 1697);
        assert_eq!(LBP_RANGE.len(), 256);
        assert_eq!(LBP_RANGE.end, FEATURE_VECTOR_LEN);
        // Shape block really is the shape features.
        let shape = shape_features(&mask).unwrap();
        assert_eq!(&fv.values()[SHAPE_RANGE], &shape[..]);
    }

    #[test]
    fn feature_names_cover_all_groups() {
        assert_eq!(feature_name(0), "shape_area");
        assert_eq!(feature_name(11), "sgld_d10_energy");
        assert_eq!(feature_name(38), "haar_0000");
        assert_eq!(feature_name(FEATURE_VECTOR_LEN - 1), "lbp_255");
    }
}
