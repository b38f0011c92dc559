//! Brute-force oracles for every feature extractor (see `common` for the
//! oracle implementations themselves).

mod common;

use calc_cade_core::data::RegionMask;
use calc_cade_core::features::{
    enumerate_haar_bank, haar_value, lbp_code, lbp_histogram, resize_bicubic, sgld_features,
    shape_features, IntegralImage, Patch,
};
use common::{
    brute_haar, brute_lbp_code, brute_rect_sum, brute_sgld_matrix, brute_sgld_stats,
    random_pixels, SIDE,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn integral_rect_sums_match_brute_force_loops() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..100 {
        let px = random_pixels(&mut rng);
        let ii = IntegralImage::from_pixels(&px, SIDE, SIDE);
        for _ in 0..50 {
            let x0 = rng.gen_range(0..SIDE);
            let x1 = rng.gen_range(x0..=SIDE);
            let y0 = rng.gen_range(0..SIDE);
            let y1 = rng.gen_range(y0..=SIDE);
            let expected = brute_rect_sum(&px, x0, y0, x1, y1);
            let got = ii.rect_sum(x0, y0, x1, y1);
            let tolerance = 1e-6 * expected.abs().max(1.0);
            assert!((got - expected).abs() <= tolerance, "rect ({x0},{y0})-({x1},{y1})");
        }
    }
}

#[test]
fn haar_bank_matches_brute_force_on_1000_patches() {
    let bank = enumerate_haar_bank(SIDE).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for _ in 0..1000 {
        let px = random_pixels(&mut rng);
        let ii = IntegralImage::from_pixels(&px, SIDE, SIDE);
        for f in &bank {
            let got = haar_value(&ii, (0, 0), f);
            let expected = brute_haar(&px, f);
            let tolerance = 1e-9 * expected.abs().max(1.0);
            assert!((got - expected).abs() <= tolerance, "{f:?}: {got} vs {expected}");
        }
    }
}

#[test]
fn sgld_features_match_brute_force_pair_counting() {
    let offsets = [(1usize, 0usize), (0, 1), (1, 1)];
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for _ in 0..1000 {
        let px = random_pixels(&mut rng);
        let data: Vec<f64> = px.iter().map(|&v| f64::from(v)).collect();
        let patch = Patch::from_slice(&data).unwrap();
        let got = sgld_features(&patch);
        for (k, &offset) in offsets.iter().enumerate() {
            let matrix = brute_sgld_matrix(&patch, offset);
            let expected = brute_sgld_stats(&matrix);
            for (s, (g, e)) in got[k * 9..(k + 1) * 9].iter().zip(&expected).enumerate() {
                let tolerance = 1e-9 * e.abs().max(1.0);
                assert!((g - e).abs() <= tolerance, "offset {offset:?} stat {s}: {g} vs {e}");
            }
        }
    }
}

#[test]
fn lbp_codes_match_direct_eight_comparisons() {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    // Small integer-valued patches so ties (neighbor == center) are common.
    for _ in 0..1000 {
        let data: Vec<f64> = (0..SIDE * SIDE).map(|_| rng.gen_range(0..6) as f64).collect();
        let patch = Patch::from_slice(&data).unwrap();
        let mut hist_expected = [0.0f64; 256];
        for y in 1..SIDE - 1 {
            for x in 1..SIDE - 1 {
                let code = brute_lbp_code(&patch, x, y);
                assert_eq!(lbp_code(&patch, x, y), code, "pixel ({x},{y})");
                hist_expected[code as usize] += 1.0;
            }
        }
        let hist = lbp_histogram(&patch);
        for (bin, (&g, &e)) in hist.iter().zip(&hist_expected).enumerate() {
            assert!((g - e / 100.0).abs() < 1e-12, "bin {bin}");
        }
    }
}

fn random_blob_mask(rng: &mut ChaCha8Rng) -> RegionMask {
    // Union of a few random rectangles and disks, clipped to a 40x40 canvas.
    let mut points = Vec::new();
    for _ in 0..rng.gen_range(1..4) {
        if rng.gen_bool(0.5) {
            let x0 = rng.gen_range(0..30);
            let y0 = rng.gen_range(0..30);
            let w = rng.gen_range(1..10);
            let h = rng.gen_range(1..10);
            for y in y0..(y0 + h).min(40) {
                for x in x0..(x0 + w).min(40) {
                    points.push((x, y));
                }
            }
        } else {
            let cx = rng.gen_range(5.0..35.0);
            let cy = rng.gen_range(5.0..35.0);
            let r = rng.gen_range(1.0..6.0);
            for y in 0..40usize {
                for x in 0..40usize {
                    let dx = x as f64 + 0.5 - cx;
                    let dy = y as f64 + 0.5 - cy;
                    if dx * dx + dy * dy <= r * r {
                        points.push((x, y));
                    }
                }
            }
        }
    }
    points.sort_unstable();
    points.dedup();
    RegionMask::from_points(&points).unwrap()
}

/// Independent shape quantities recomputed with plain loops on a full canvas.
fn brute_shape(mask: &RegionMask) -> (f64, f64, f64, f64, f64) {
    let pts: Vec<(usize, usize)> = mask.pixels().collect();
    let area = pts.len() as f64;
    let min_x = pts.iter().map(|p| p.0).min().unwrap();
    let max_x = pts.iter().map(|p| p.0).max().unwrap();
    let min_y = pts.iter().map(|p| p.1).min().unwrap();
    let max_y = pts.iter().map(|p| p.1).max().unwrap();
    let extent_x = (max_x - min_x + 1) as f64;
    let extent_y = (max_y - min_y + 1) as f64;
    let rectangularity = area / (extent_x * extent_y);

    // Marching-squares length via explicit case analysis on a padded canvas.
    let on = |x: isize, y: isize| -> bool {
        x >= 0 && y >= 0 && mask.contains(x as usize, y as usize)
    };
    let mut perimeter = 0.0;
    for y in -1..=max_y as isize {
        for x in -1..=max_x as isize {
            let (tl, tr, bl, br) = (on(x, y), on(x + 1, y), on(x, y + 1), on(x + 1, y + 1));
            let count = [tl, tr, bl, br].iter().filter(|b| **b).count();
            perimeter += match count {
                0 | 4 => 0.0,
                1 | 3 => std::f64::consts::SQRT_2 / 2.0,
                2 => {
                    if (tl && br && !tr && !bl) || (tr && bl && !tl && !br) {
                        std::f64::consts::SQRT_2
                    } else {
                        1.0
                    }
                }
                _ => unreachable!(),
            };
        }
    }
    (area, perimeter, rectangularity, extent_x, extent_y)
}

#[test]
fn shape_features_match_brute_force_on_1000_masks() {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    for _ in 0..1000 {
        let mask = random_blob_mask(&mut rng);
        let f = shape_features(&mask).unwrap();
        let (area, perimeter, rectangularity, extent_x, extent_y) = brute_shape(&mask);
        assert_eq!(f[0], area);
        assert!((f[1] - perimeter).abs() <= 1e-9 * perimeter.max(1.0));
        assert!((f[2] - perimeter / area).abs() <= 1e-9);
        assert!((f[3] - rectangularity).abs() <= 1e-9);
        let circ = 4.0 * std::f64::consts::PI * area / (perimeter * perimeter);
        assert!((f[4] - circ).abs() <= 1e-9 * circ.max(1.0));
        assert_eq!(f[9], extent_x);
        assert_eq!(f[10], extent_y);
        assert!(f.iter().all(|v| v.is_finite()));
    }
}

#[test]
fn resize_preserves_value_range_bounds_loosely() {
    // Keys bicubic can overshoot by at most a bounded fraction of the local
    // contrast; constants and the identity are exact (covered in unit tests).
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    for _ in 0..200 {
        let sw = rng.gen_range(2..30);
        let sh = rng.gen_range(2..30);
        let src: Vec<f64> = (0..sw * sh).map(|_| rng.gen_range(0.0..100.0)).collect();
        let out = resize_bicubic(&src, sw, sh, 12, 12);
        let lo = src.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = src.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let slack = 0.25 * (hi - lo) + 1e-9;
        for &v in &out {
            assert!(v >= lo - slack && v <= hi + slack);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Scaling all intensities by a > 0 scales every Haar value by a.
    #[test]
    fn haar_values_are_linear_in_intensity(seed in 0u64..1_000_000, scale in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let px = random_pixels(&mut rng);
        let scaled: Vec<f32> = px.iter().map(|&v| (f64::from(v) * scale) as f32).collect();
        let ii = IntegralImage::from_pixels(&px, SIDE, SIDE);
        let ii_scaled = IntegralImage::from_pixels(&scaled, SIDE, SIDE);
        let bank = enumerate_haar_bank(SIDE).unwrap();
        for f in bank.iter().step_by(37) {
            let base = haar_value(&ii, (0, 0), f);
            let got = haar_value(&ii_scaled, (0, 0), f);
            // f32 storage of the scaled pixels dominates the error budget.
            let tolerance = 1e-4 * (base.abs() * scale).max(1.0);
            prop_assert!((got - base * scale).abs() <= tolerance);
        }
    }

    /// LBP histograms are invariant under strictly monotone intensity maps.
    #[test]
    fn lbp_histogram_invariant_under_monotone_transform(seed in 0u64..1_000_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..SIDE * SIDE).map(|_| rng.gen_range(0..32) as f64).collect();
        let patch = Patch::from_slice(&data).unwrap();
        // x^3 + 2x is strictly increasing on all of R.
        let mapped: Vec<f64> = data.iter().map(|&v| v * v * v + 2.0 * v).collect();
        let patch_mapped = Patch::from_slice(&mapped).unwrap();
        prop_assert_eq!(lbp_histogram(&patch), lbp_histogram(&patch_mapped));
    }

    /// SGLD statistics stay within definitional bounds on arbitrary patches.
    #[test]
    fn sgld_energy_entropy_bounds(seed in 0u64..1_000_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..SIDE * SIDE).map(|_| rng.gen_range(0.0..50.0)).collect();
        let patch = Patch::from_slice(&data).unwrap();
        let f = sgld_features(&patch);
        for k in 0..3 {
            prop_assert!(f[k * 9] > 0.0 && f[k * 9] <= 1.0); // energy
            prop_assert!(f[k * 9 + 1] >= 0.0); // entropy
            prop_assert!(f[k * 9 + 3].abs() <= 1.0 + 1e-9); // correlation
        }
    }
}
