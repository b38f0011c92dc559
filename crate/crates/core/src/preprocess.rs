//! Quantum-noise equalization.
//!
//! Detector noise in full-field digital mammograms is Poisson-like: the local
//! variance grows linearly with the local mean. [`estimate_noise`] recovers
//! that linear law from homogeneous tiles, and [`equalize`] applies the
//! generalized Anscombe square-root transform so the output noise standard
//! deviation is approximately 1 regardless of intensity.

use serde::{Deserialize, Serialize};

use crate::data::Mammogram;
use crate::{Error, Result};

/// Tile side used for the local mean/variance statistics.
const TILE: usize = 16;

/// Minimum pixels required for a meaningful fit.
const MIN_PIXELS: usize = 10_000;

/// Linear noise law `variance ≈ gain · (mean − offset)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Slope of the variance-vs-mean line; strictly positive.
    pub gain_estimate: f64,
    /// Dark-level offset, clamped to be nonnegative.
    pub offset_estimate: f64,
    /// Set when the tile fit was degenerate and the gain fell back to the
    /// global variance/mean ratio.
    pub degenerate_fit: bool,
}

struct TileStats {
    mean: f64,
    var: f64,
    grad: f64,
}

/// Tile statistics with the homogeneity signal decoupled from the variance
/// estimate: the structure score comes from even rows, the mean/variance
/// from odd rows. Selecting tiles on a statistic computed from the same
/// pixels as the variance would systematically pick low-variance tiles and
/// shrink the fitted gain.
///
/// The structure score is the half-tile mean contrast divided by the tile's
/// own pixel-difference noise scale. Averaging over half tiles suppresses
/// noise, so pure-noise tiles score a small constant regardless of gain or
/// dark level, while edges, ramps and blobs score high.
fn tile_stats(image: &Mammogram, tx: usize, ty: usize) -> TileStats {
    let x0 = tx * TILE;
    let y0 = ty * TILE;
    let half = TILE / 2;
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    let mut n = 0.0;
    let mut diff_abs = 0.0;
    let mut diff_n = 0.0;
    let mut halves = [0.0f64; 4]; // left, right, top, bottom (even rows only)
    let mut halves_n = [0.0f64; 4];
    for y in y0..y0 + TILE {
        if (y - y0) % 2 == 0 {
            for x in x0..x0 + TILE {
                let v = f64::from(image.get(x, y));
                if x + 1 < x0 + TILE {
                    diff_abs += (f64::from(image.get(x + 1, y)) - v).abs();
                    diff_n += 1.0;
                }
                let hx = usize::from(x - x0 >= half);
                let hy = usize::from(y - y0 >= half);
                halves[hx] += v;
                halves_n[hx] += 1.0;
                halves[2 + hy] += v;
                halves_n[2 + hy] += 1.0;
            }
        } else {
            for x in x0..x0 + TILE {
                let v = f64::from(image.get(x, y));
                sum += v;
                sum2 += v * v;
                n += 1.0;
            }
        }
    }
    let mean = sum / n;
    let var = ((sum2 - sum * sum / n) / (n - 1.0)).max(0.0);
    let contrast = (halves[0] / halves_n[0] - halves[1] / halves_n[1]).abs()
        + (halves[2] / halves_n[2] - halves[3] / halves_n[3]).abs();
    TileStats { mean, var, grad: contrast / (diff_abs / diff_n + 1e-12) }
}

/// Estimates the Poisson-like noise law from homogeneous tiles.
///
/// Tiles whose noise-normalized gradient is below the median are considered
/// homogeneous; the gain is the least-squares slope of their variance against
/// their mean. A degenerate fit (constant image, no spread in tile means,
/// non-positive slope) falls back to the global variance/mean ratio and sets
/// the warning flag.
pub fn estimate_noise(image: &Mammogram) -> Result<NoiseModel> {
    if image.width() * image.height() < MIN_PIXELS {
        return Err(Error::Data(format!(
            "noise estimation needs at least {MIN_PIXELS} pixels, image has {}",
            image.width() * image.height()
        )));
    }
    let tiles_x = image.width() / TILE;
    let tiles_y = image.height() / TILE;
    let stats = crate::exec::map_indexed(tiles_x * tiles_y, |i| {
        tile_stats(image, i % tiles_x, i / tiles_x)
    });

    let mut grads: Vec<f64> = stats.iter().map(|t| t.grad).collect();
    grads.sort_by(f64::total_cmp);
    let median = grads[grads.len() / 2];
    let kept: Vec<&TileStats> = stats.iter().filter(|t| t.grad < median).collect();

    let fallback = |image: &Mammogram| {
        let n = (image.width() * image.height()) as f64;
        let mean = image.pixels().iter().map(|&v| f64::from(v)).sum::<f64>() / n;
        let var = image
            .pixels()
            .iter()
            .map(|&v| {
                let d = f64::from(v) - mean;
                d * d
            })
            .sum::<f64>()
            / n;
        let gain = if mean > 0.0 { (var / mean).max(1e-12) } else { 1e-12 };
        NoiseModel { gain_estimate: gain, offset_estimate: 0.0, degenerate_fit: true }
    };

    if kept.len() < 2 {
        return Ok(fallback(image));
    }
    let n = kept.len() as f64;
    let mean_x = kept.iter().map(|t| t.mean).sum::<f64>() / n;
    let mean_y = kept.iter().map(|t| t.var).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for t in &kept {
        let dx = t.mean - mean_x;
        sxx += dx * dx;
        sxy += dx * (t.var - mean_y);
    }
    if sxx <= 1e-9 {
        return Ok(fallback(image));
    }
    let slope = sxy / sxx;
    if !(slope.is_finite() && slope > 0.0) {
        return Ok(fallback(image));
    }
    let intercept = mean_y - slope * mean_x;
    let offset = (-intercept / slope).max(0.0);
    Ok(NoiseModel { gain_estimate: slope, offset_estimate: offset, degenerate_fit: false })
}

/// Applies the variance-stabilizing transform
/// `u(p) = 2·sqrt(max(p − offset, 0)/gain + 3/8)`.
///
/// Monotone non-decreasing in the input; preserves dimensions and spacing.
pub fn equalize(image: &Mammogram, model: &NoiseModel) -> Mammogram {
    let gain = model.gain_estimate;
    let offset = model.offset_estimate;
    let pixels: Vec<f32> = image
        .pixels()
        .iter()
        .map(|&p| {
            let centered = (f64::from(p) - offset).max(0.0);
            (2.0 * (centered / gain + 0.375).sqrt()) as f32
        })
        .collect();
    image.with_pixels(pixels).expect("transform preserves validity")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Poisson};

    /// `p = a·Poisson(λ(x)) + b` with λ stepping through ten constant bands,
    /// so within-band spread is pure photon noise.
    fn simulated_image(a: f64, b: f64, lambda_range: (f64, f64), seed: u64) -> (Mammogram, Vec<f64>) {
        let (w, h) = (512, 512);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pixels = Vec::with_capacity(w * h);
        let mut lambdas = Vec::with_capacity(w * h);
        for _y in 0..h {
            for x in 0..w {
                let band = (x * 10 / w) as f64;
                let lam = lambda_range.0 + (lambda_range.1 - lambda_range.0) * band / 9.0;
                let counts = Poisson::new(lam).unwrap().sample(&mut rng);
                pixels.push((a * counts + b) as f32);
                lambdas.push(lam);
            }
        }
        (Mammogram::new(pixels, w, h, 0.07, "c", "i").unwrap(), lambdas)
    }

    #[test]
    fn pure_poisson_gain_recovered_within_15_percent() {
        let (img, _) = simulated_image(4.0, 0.0, (100.0, 400.0), 1);
        let model = estimate_noise(&img).unwrap();
        assert!(!model.degenerate_fit);
        assert!(
            (model.gain_estimate - 4.0).abs() <= 0.15 * 4.0,
            "gain {} not within 15% of 4",
            model.gain_estimate
        );
    }

    #[test]
    fn affine_scaled_poisson_recovers_slope_and_offset() {
        let (a, b) = (3.0, 50.0);
        let (img, _) = simulated_image(a, b, (100.0, 400.0), 2);
        let model = estimate_noise(&img).unwrap();
        assert!(!model.degenerate_fit);
        // var = a²λ and mean = aλ + b, so the variance-vs-mean slope is a and
        // the dark level is b.
        assert!(
            (model.gain_estimate - a).abs() <= 0.15 * a,
            "slope {} not within 15% of {a}",
            model.gain_estimate
        );
        assert!(
            (model.offset_estimate - b).abs() <= 0.2 * b,
            "offset {} not near {b}",
            model.offset_estimate
        );
    }

    #[test]
    fn constant_image_takes_degenerate_path() {
        let img = Mammogram::new(vec![100.0; 128 * 128], 128, 128, 0.07, "c", "i").unwrap();
        let model = estimate_noise(&img).unwrap();
        assert!(model.degenerate_fit);
        assert!(model.gain_estimate > 0.0);
    }

    #[test]
    fn constant_image_equalizes_to_pointwise_formula() {
        let c = 250.0f32;
        let img = Mammogram::new(vec![c; 144], 12, 12, 0.07, "c", "i").unwrap();
        let model = NoiseModel { gain_estimate: 4.0, offset_estimate: 10.0, degenerate_fit: false };
        let out = equalize(&img, &model);
        let expected = 2.0 * ((f64::from(c) - 10.0) / 4.0 + 0.375).sqrt();
        for &v in out.pixels() {
            assert!((f64::from(v) - expected).abs() < 1e-5);
        }
        assert_eq!(out.width(), img.width());
        assert_eq!(out.pixel_spacing_mm, img.pixel_spacing_mm);
    }

    #[test]
    fn equalize_is_monotone() {
        let model = NoiseModel { gain_estimate: 2.5, offset_estimate: 30.0, degenerate_fit: false };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut values: Vec<f32> = (0..144).map(|_| rng.gen_range(0.0..1000.0)).collect();
        let img = Mammogram::new(values.clone(), 12, 12, 0.07, "c", "i").unwrap();
        let out = equalize(&img, &model);
        let mut pairs: Vec<(f32, f32)> =
            values.drain(..).zip(out.pixels().iter().copied()).collect();
        pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
        for w in pairs.windows(2) {
            assert!(w[0].1 <= w[1].1, "equalize not monotone: {w:?}");
        }
    }

    #[test]
    fn stabilized_noise_std_near_one_across_gains() {
        for (case, gain) in [(10u64, 1.0), (11, 4.0), (12, 16.0)] {
            let (img, lambdas) = simulated_image(gain, 0.0, (50.0, 800.0), case);
            let model = estimate_noise(&img).unwrap();
            let out = equalize(&img, &model);
            // Group by the true intensity band and check the residual std.
            let mut distinct: Vec<f64> = lambdas.clone();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            assert_eq!(distinct.len(), 10);
            for (d, &lam) in distinct.iter().enumerate() {
                let idxs: Vec<usize> =
                    (0..lambdas.len()).filter(|&i| lambdas[i] == lam).collect();
                let mean =
                    idxs.iter().map(|&i| f64::from(out.pixels()[i])).sum::<f64>() / idxs.len() as f64;
                let var = idxs
                    .iter()
                    .map(|&i| {
                        let r = f64::from(out.pixels()[i]) - mean;
                        r * r
                    })
                    .sum::<f64>()
                    / idxs.len() as f64;
                let std = var.sqrt();
                assert!(
                    (0.8..=1.2).contains(&std),
                    "gain {gain}, band {d} (lambda {lam}): stabilized std {std}"
                );
            }
        }
    }
}
