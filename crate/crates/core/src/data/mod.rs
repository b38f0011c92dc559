//! Core data model: images, annotation masks, case splits.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{derive_seed, Error, Result, WINDOW_SIZE};

pub mod dataset;
pub mod phantom;

pub use dataset::{load_dataset, save_dataset};
pub use phantom::{generate_phantom, generate_phantom_dataset, PhantomDatasetSpec, PhantomSpec};

/// A single grayscale mammogram with physical pixel spacing.
///
/// Intensities are nonnegative linear units; both dimensions must be at least
/// the classification window size so every pixel has a usable window.
#[derive(Debug, Clone)]
pub struct Mammogram {
    pixels: Vec<f32>,
    width: usize,
    height: usize,
    pub pixel_spacing_mm: f64,
    pub case_id: String,
    pub image_id: String,
}

impl Mammogram {
    pub fn new(
        pixels: Vec<f32>,
        width: usize,
        height: usize,
        pixel_spacing_mm: f64,
        case_id: impl Into<String>,
        image_id: impl Into<String>,
    ) -> Result<Self> {
        let image_id = image_id.into();
        if width < WINDOW_SIZE || height < WINDOW_SIZE {
            return Err(Error::Data(format!(
                "image '{image_id}' is {width}x{height} px; both dimensions must be >= {WINDOW_SIZE}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::Data(format!(
                "image '{image_id}': pixel buffer length {} does not match {width}x{height}",
                pixels.len()
            )));
        }
        if !(pixel_spacing_mm.is_finite() && pixel_spacing_mm > 0.0) {
            return Err(Error::Config(format!(
                "pixel spacing must be positive, got {pixel_spacing_mm}"
            )));
        }
        if let Some(bad) = pixels.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::Data(format!(
                "image '{image_id}' contains a negative or non-finite intensity ({bad})"
            )));
        }
        Ok(Mammogram { pixels, width, height, pixel_spacing_mm, case_id: case_id.into(), image_id })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.pixels[y * self.width + x]
    }

    /// Replicate-edge read: out-of-range coordinates clamp to the border.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f32 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.pixels[cy * self.width + cx]
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    /// Same geometry and identity, transformed intensities.
    pub fn with_pixels(&self, pixels: Vec<f32>) -> Result<Self> {
        Mammogram::new(
            pixels,
            self.width,
            self.height,
            self.pixel_spacing_mm,
            self.case_id.clone(),
            self.image_id.clone(),
        )
    }
}

/// Inclusive pixel bounding box: `x1`/`y1` are the last covered column/row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl BBox {
    #[inline]
    pub fn width(&self) -> usize {
        self.x1 - self.x0 + 1
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.y1 - self.y0 + 1
    }

    #[inline]
    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    pub fn intersect(&self, other: &BBox) -> Option<BBox> {
        let x0 = self.x0.max(other.x0);
        let y0 = self.y0.max(other.y0);
        let x1 = self.x1.min(other.x1);
        let y1 = self.y1.min(other.y1);
        (x0 <= x1 && y0 <= y1).then_some(BBox { x0, y0, x1, y1 })
    }
}

/// A binary pixel region stored as its tight bounding box plus a local bitmap.
///
/// Used both for manual µC annotations and for detected candidates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMask {
    bbox: BBox,
    data: Vec<bool>,
}

impl RegionMask {
    /// Builds a region from absolute pixel coordinates. The bounding box is
    /// tightened to the points.
    pub fn from_points(points: &[(usize, usize)]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Data("region mask must contain at least one pixel".into()));
        }
        let x0 = points.iter().map(|p| p.0).min().unwrap();
        let x1 = points.iter().map(|p| p.0).max().unwrap();
        let y0 = points.iter().map(|p| p.1).min().unwrap();
        let y1 = points.iter().map(|p| p.1).max().unwrap();
        let bbox = BBox { x0, y0, x1, y1 };
        let mut data = vec![false; bbox.area()];
        for &(x, y) in points {
            data[(y - y0) * bbox.width() + (x - x0)] = true;
        }
        Ok(RegionMask { bbox, data })
    }

    #[inline]
    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    /// Number of foreground pixels.
    pub fn area(&self) -> usize {
        self.data.iter().filter(|b| **b).count()
    }

    /// Foreground test in absolute image coordinates.
    #[inline]
    pub fn contains(&self, x: usize, y: usize) -> bool {
        if x < self.bbox.x0 || x > self.bbox.x1 || y < self.bbox.y0 || y > self.bbox.y1 {
            return false;
        }
        self.data[(y - self.bbox.y0) * self.bbox.width() + (x - self.bbox.x0)]
    }

    /// Foreground test in bbox-local coordinates.
    #[inline]
    pub fn local(&self, lx: usize, ly: usize) -> bool {
        self.data[ly * self.bbox.width() + lx]
    }

    /// Absolute coordinates of all foreground pixels, row-major.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.bbox.width();
        self.data.iter().enumerate().filter(|(_, on)| **on).map(move |(i, _)| {
            (self.bbox.x0 + i % w, self.bbox.y0 + i / w)
        })
    }

    /// Centroid of foreground pixel centers, in pixel units.
    pub fn centroid_px(&self) -> (f64, f64) {
        let mut sx = 0.0;
        let mut sy = 0.0;
        let mut n = 0.0;
        for (x, y) in self.pixels() {
            sx += x as f64 + 0.5;
            sy += y as f64 + 0.5;
            n += 1.0;
        }
        (sx / n, sy / n)
    }

    /// Number of foreground pixels shared with `other`.
    pub fn intersection_area(&self, other: &RegionMask) -> usize {
        let Some(overlap) = self.bbox.intersect(&other.bbox) else {
            return 0;
        };
        let mut count = 0;
        for y in overlap.y0..=overlap.y1 {
            for x in overlap.x0..=overlap.x1 {
                if self.contains(x, y) && other.contains(x, y) {
                    count += 1;
                }
            }
        }
        count
    }

    /// Region translated by whole pixels; coordinates must stay nonnegative.
    pub fn translated(&self, dx: isize, dy: isize) -> Result<Self> {
        let points: Vec<(usize, usize)> = self
            .pixels()
            .map(|(x, y)| {
                let nx = x as isize + dx;
                let ny = y as isize + dy;
                if nx < 0 || ny < 0 {
                    Err(Error::Data("translation moves region out of bounds".into()))
                } else {
                    Ok((nx as usize, ny as usize))
                }
            })
            .collect::<Result<_>>()?;
        RegionMask::from_points(&points)
    }
}

/// All µC annotations for one image. Region boxes live in the image's
/// coordinate frame.
#[derive(Debug, Clone)]
pub struct AnnotationSet {
    pub width: usize,
    pub height: usize,
    pub regions: Vec<RegionMask>,
}

impl AnnotationSet {
    pub fn new(width: usize, height: usize, regions: Vec<RegionMask>) -> Result<Self> {
        for r in &regions {
            let b = r.bbox();
            if b.x1 >= width || b.y1 >= height {
                return Err(Error::Data(format!(
                    "annotation bbox ({},{})-({},{}) exceeds image {}x{}",
                    b.x0, b.y0, b.x1, b.y1, width, height
                )));
            }
        }
        Ok(AnnotationSet { width, height, regions })
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }
}

/// Pixel connectivity for component labeling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

/// Splits a full-image binary map into connected components.
///
/// Components are returned in row-major order of their first-scanned pixel,
/// which makes the output deterministic.
pub fn connected_components(
    mask: &[bool],
    width: usize,
    height: usize,
    connectivity: Connectivity,
) -> Vec<RegionMask> {
    assert_eq!(mask.len(), width * height);
    let mut visited = vec![false; mask.len()];
    let mut components = Vec::new();
    let mut stack = Vec::new();
    let neighbors: &[(isize, isize)] = match connectivity {
        Connectivity::Four => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
        Connectivity::Eight => &[
            (1, 0),
            (-1, 0),
            (0, 1),
            (0, -1),
            (1, 1),
            (1, -1),
            (-1, 1),
            (-1, -1),
        ],
    };
    for start in 0..mask.len() {
        if !mask[start] || visited[start] {
            continue;
        }
        let mut points = Vec::new();
        visited[start] = true;
        stack.push(start);
        while let Some(idx) = stack.pop() {
            let x = idx % width;
            let y = idx / width;
            points.push((x, y));
            for &(dx, dy) in neighbors {
                let nx = x as isize + dx;
                let ny = y as isize + dy;
                if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
                    continue;
                }
                let nidx = ny as usize * width + nx as usize;
                if mask[nidx] && !visited[nidx] {
                    visited[nidx] = true;
                    stack.push(nidx);
                }
            }
        }
        components.push(RegionMask::from_points(&points).expect("non-empty component"));
    }
    components
}

/// One cross-validation fold: disjoint case-id lists covering every case.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseSplit {
    pub fold_index: usize,
    pub train_cases: Vec<String>,
    pub validation_cases: Vec<String>,
    pub test_cases: Vec<String>,
}

/// Randomly partitions cases into train/validation/test per fold.
///
/// Rounding uses largest-remainder with the remainder assigned to train, so
/// 115 cases at (0.6, 0.2, 0.2) give 69/23/23 and 5 cases give 3/1/1. All
/// images of a case stay on one side of every split.
pub fn split_cases(
    case_ids: &[String],
    n_folds: usize,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<Vec<CaseSplit>> {
    let n = case_ids.len();
    if n_folds == 0 {
        return Err(Error::Config("n_folds must be at least 1".into()));
    }
    if n < n_folds {
        return Err(Error::Data(format!("{n} cases is fewer than {n_folds} folds")));
    }
    if n < 5 {
        return Err(Error::Data(format!("need at least 5 cases, got {n}")));
    }
    {
        let mut sorted: Vec<&String> = case_ids.iter().collect();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != n {
            return Err(Error::Data("duplicate case ids in split input".into()));
        }
    }
    let (rt, rv, rs) = ratios;
    if !(rt > 0.0 && rv > 0.0 && rs > 0.0 && (rt + rv + rs - 1.0).abs() < 1e-9) {
        return Err(Error::Config(format!("split ratios must be positive and sum to 1, got {ratios:?}")));
    }

    let n_val = (rv * n as f64).floor() as usize;
    let n_test = (rs * n as f64).floor() as usize;
    let n_train = n - n_val - n_test;
    if n_val == 0 || n_test == 0 || n_train == 0 {
        return Err(Error::Data(format!(
            "split of {n} cases yields an empty partition ({n_train}/{n_val}/{n_test})"
        )));
    }

    let mut folds = Vec::with_capacity(n_folds);
    for fold_index in 0..n_folds {
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("split-fold-{fold_index}")));
        order.shuffle(&mut rng);
        let pick = |slice: &[usize]| -> Vec<String> {
            let mut ids: Vec<String> = slice.iter().map(|&i| case_ids[i].clone()).collect();
            ids.sort();
            ids
        };
        folds.push(CaseSplit {
            fold_index,
            train_cases: pick(&order[0..n_train]),
            validation_cases: pick(&order[n_train..n_train + n_val]),
            test_cases: pick(&order[n_train + n_val..]),
        });
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("case_{i:03}")).collect()
    }

    #[test]
    fn undersized_image_rejected() {
        let err = Mammogram::new(vec![0.0; 100], 10, 10, 0.07, "c", "i").unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn negative_intensity_rejected() {
        let mut px = vec![0.0f32; 144];
        px[5] = -1.0;
        assert!(Mammogram::new(px, 12, 12, 0.07, "c", "i").is_err());
    }

    #[test]
    fn region_mask_roundtrip() {
        let m = RegionMask::from_points(&[(3, 4), (4, 4), (3, 5)]).unwrap();
        assert_eq!(m.bbox(), BBox { x0: 3, y0: 4, x1: 4, y1: 5 });
        assert_eq!(m.area(), 3);
        assert!(m.contains(3, 4));
        assert!(!m.contains(4, 5));
        let pts: Vec<_> = m.pixels().collect();
        assert_eq!(pts, vec![(3, 4), (4, 4), (3, 5)]);
    }

    #[test]
    fn two_blobs_are_two_components() {
        // 8-connectivity joins diagonals, so keep the blobs fully separated.
        let width = 8;
        let height = 4;
        let mut mask = vec![false; width * height];
        for (x, y) in [(0, 0), (1, 0), (0, 1), (5, 2), (6, 2)] {
            mask[y * width + x] = true;
        }
        let comps = connected_components(&mask, width, height, Connectivity::Eight);
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].area(), 3);
        assert_eq!(comps[1].area(), 2);
    }

    #[test]
    fn diagonal_blob_connectivity_differs() {
        let width = 4;
        let mut mask = vec![false; 16];
        mask[0] = true; // (0,0)
        mask[5] = true; // (1,1)
        assert_eq!(connected_components(&mask, width, 4, Connectivity::Eight).len(), 1);
        assert_eq!(connected_components(&mask, width, 4, Connectivity::Four).len(), 2);
    }

    #[test]
    fn split_115_cases_is_69_23_23() {
        let folds = split_cases(&ids(115), 5, (0.6, 0.2, 0.2), 7).unwrap();
        assert_eq!(folds.len(), 5);
        for f in &folds {
            assert_eq!(f.train_cases.len(), 69);
            assert_eq!(f.validation_cases.len(), 23);
            assert_eq!(f.test_cases.len(), 23);
        }
    }

    #[test]
    fn split_5_cases_is_3_1_1() {
        let folds = split_cases(&ids(5), 5, (0.6, 0.2, 0.2), 0).unwrap();
        for f in &folds {
            assert_eq!(f.train_cases.len(), 3);
            assert_eq!(f.validation_cases.len(), 1);
            assert_eq!(f.test_cases.len(), 1);
        }
    }

    #[test]
    fn split_is_deterministic_and_leak_free() {
        let cases = ids(23);
        let a = split_cases(&cases, 5, (0.6, 0.2, 0.2), 99).unwrap();
        let b = split_cases(&cases, 5, (0.6, 0.2, 0.2), 99).unwrap();
        for (fa, fb) in a.iter().zip(&b) {
            assert_eq!(fa.train_cases, fb.train_cases);
            assert_eq!(fa.validation_cases, fb.validation_cases);
            assert_eq!(fa.test_cases, fb.test_cases);
        }
        for f in &a {
            let mut all: Vec<&String> =
                f.train_cases.iter().chain(&f.validation_cases).chain(&f.test_cases).collect();
            assert_eq!(all.len(), cases.len());
            all.sort();
            all.dedup();
            assert_eq!(all.len(), cases.len(), "fold {} has overlapping partitions", f.fold_index);
        }
    }

    #[test]
    fn split_rejects_too_few_cases() {
        assert!(split_cases(&ids(4), 5, (0.6, 0.2, 0.2), 0).is_err());
    }
}
