//! Synthetic phantom generation: a desk-scale stand-in for screening data.
//!
//! Each phantom is a smooth low-frequency background with Poisson photon
//! noise (variance = `photon_gain` × mean) plus clusters of small bright
//! blobs standing in for micro-calcifications. The rng seed fully determines
//! the output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::{AnnotationSet, Mammogram, RegionMask};
use crate::{derive_seed, Error, Result};

/// Parameters for one phantom image.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub width: usize,
    pub height: usize,
    pub pixel_spacing_mm: f64,
    /// Correlation length of the background field, in pixels.
    pub background_smoothness: f64,
    /// Background intensity range (low, high), in detector counts.
    pub background_range: (f64, f64),
    /// Poisson gain: noise variance ≈ gain × mean.
    pub photon_gain: f64,
    pub n_clusters: usize,
    /// Inclusive range of µC count per cluster.
    pub mc_per_cluster_range: (usize, usize),
    /// µC diameter range in mm; must stay within [0.05, 1.5].
    pub mc_diameter_range_mm: (f64, f64),
    /// Blob amplitude in units of the local noise standard deviation.
    pub mc_contrast_range: (f64, f64),
    /// Radius within which a cluster's members are placed, in mm.
    pub cluster_radius_mm: f64,
    /// Minimum center-to-center distance between µCs of one cluster, in mm.
    pub min_mc_separation_mm: f64,
    /// Bright linear streaks (vessel/fibrous-tissue stand-ins) per image.
    /// They are not annotated: a brightness-only detector fires on them while
    /// shape and texture distinguish them from µCs.
    #[serde(default = "default_distractor_count")]
    pub n_distractors_range: (usize, usize),
    #[serde(default = "default_distractor_length")]
    pub distractor_length_range_mm: (f64, f64),
    /// Streak peak amplitude in local-noise-sigma units.
    #[serde(default = "default_distractor_contrast")]
    pub distractor_contrast_range: (f64, f64),
    pub rng_seed: u64,
}

fn default_distractor_count() -> (usize, usize) {
    (3, 8)
}
fn default_distractor_length() -> (f64, f64) {
    (0.4, 1.2)
}
fn default_distractor_contrast() -> (f64, f64) {
    (4.0, 6.0)
}

impl Default for PhantomSpec {
    fn default() -> Self {
        PhantomSpec {
            width: 512,
            height: 512,
            pixel_spacing_mm: crate::DEFAULT_PIXEL_SPACING_MM,
            background_smoothness: 64.0,
            background_range: (300.0, 900.0),
            photon_gain: 4.0,
            n_clusters: 1,
            mc_per_cluster_range: (3, 5),
            mc_diameter_range_mm: (0.5, 0.9),
            mc_contrast_range: (7.0, 12.0),
            cluster_radius_mm: 3.0,
            min_mc_separation_mm: 1.8,
            n_distractors_range: default_distractor_count(),
            distractor_length_range_mm: default_distractor_length(),
            distractor_contrast_range: default_distractor_contrast(),
            rng_seed: 0,
        }
    }
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        let (dlo, dhi) = self.mc_diameter_range_mm;
        if !(0.05..=1.5).contains(&dlo) || !(0.05..=1.5).contains(&dhi) || dlo > dhi {
            return Err(Error::Config(format!(
                "mc_diameter_range_mm must be an ordered range within [0.05, 1.5], got ({dlo}, {dhi})"
            )));
        }
        if self.photon_gain <= 0.0 || !self.photon_gain.is_finite() {
            return Err(Error::Config("photon_gain must be positive".into()));
        }
        if self.background_range.0 <= 0.0 || self.background_range.0 > self.background_range.1 {
            return Err(Error::Config("background_range must be positive and ordered".into()));
        }
        if self.background_smoothness < 1.0 {
            return Err(Error::Config("background_smoothness must be >= 1 px".into()));
        }
        if self.mc_per_cluster_range.0 > self.mc_per_cluster_range.1 {
            return Err(Error::Config("mc_per_cluster_range must be ordered".into()));
        }
        if self.mc_contrast_range.0 <= 0.0 || self.mc_contrast_range.0 > self.mc_contrast_range.1 {
            return Err(Error::Config("mc_contrast_range must be positive and ordered".into()));
        }
        if self.cluster_radius_mm <= 0.0 || self.min_mc_separation_mm <= 0.0 {
            return Err(Error::Config("cluster geometry must be positive".into()));
        }
        if self.n_distractors_range.0 > self.n_distractors_range.1 {
            return Err(Error::Config("n_distractors_range must be ordered".into()));
        }
        if self.distractor_length_range_mm.0 <= 0.0
            || self.distractor_length_range_mm.0 > self.distractor_length_range_mm.1
        {
            return Err(Error::Config("distractor_length_range_mm must be positive and ordered".into()));
        }
        Ok(())
    }
}

/// Distance from a point to a segment.
fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let len2 = vx * vx + vy * vy;
    let t = if len2 > 0.0 { ((p.0 - a.0) * vx + (p.1 - a.1) * vy) / len2 } else { 0.0 };
    let t = t.clamp(0.0, 1.0);
    (p.0 - (a.0 + t * vx)).hypot(p.1 - (a.1 + t * vy))
}

/// A generated phantom plus its noise-free background, kept for diagnostics
/// and noise-model verification.
#[derive(Debug, Clone)]
pub struct PhantomImage {
    pub image: Mammogram,
    pub annotations: AnnotationSet,
    /// The clean background field (no blobs, no noise), one value per pixel.
    pub clean_background: Vec<f64>,
}

/// Bilinearly interpolated random coarse grid, mapped onto `range`.
fn smooth_background(
    width: usize,
    height: usize,
    cell: f64,
    range: (f64, f64),
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let gw = (width as f64 / cell).ceil() as usize + 2;
    let gh = (height as f64 / cell).ceil() as usize + 2;
    let grid: Vec<f64> = (0..gw * gh).map(|_| rng.gen::<f64>()).collect();
    let mut out = Vec::with_capacity(width * height);
    for y in 0..height {
        let gy = y as f64 / cell;
        let y0 = gy.floor() as usize;
        let fy = gy - y0 as f64;
        for x in 0..width {
            let gx = x as f64 / cell;
            let x0 = gx.floor() as usize;
            let fx = gx - x0 as f64;
            let v00 = grid[y0 * gw + x0];
            let v10 = grid[y0 * gw + x0 + 1];
            let v01 = grid[(y0 + 1) * gw + x0];
            let v11 = grid[(y0 + 1) * gw + x0 + 1];
            let v = v00 * (1.0 - fx) * (1.0 - fy)
                + v10 * fx * (1.0 - fy)
                + v01 * (1.0 - fx) * fy
                + v11 * fx * fy;
            out.push(range.0 + v * (range.1 - range.0));
        }
    }
    out
}

const PLACEMENT_RETRIES: usize = 500;

struct Blob {
    cx: f64,
    cy: f64,
    radius_px: f64,
    contrast: f64,
}

/// Generates one phantom image with ground-truth annotations.
pub fn generate_phantom(spec: &PhantomSpec) -> Result<PhantomImage> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let (w, h) = (spec.width, spec.height);
    let px_per_mm = 1.0 / spec.pixel_spacing_mm;
    let background =
        smooth_background(w, h, spec.background_smoothness, spec.background_range, &mut rng);

    // Cluster centers: far enough apart that members of different clusters can
    // never fall within the 10 mm linking distance of each other.
    let cluster_radius_px = spec.cluster_radius_mm * px_per_mm;
    let margin = cluster_radius_px + 0.5 * spec.mc_diameter_range_mm.1 * px_per_mm + 2.0;
    let min_center_sep_px = (2.0 * spec.cluster_radius_mm + 10.5) * px_per_mm;
    if 2.0 * margin >= w as f64 || 2.0 * margin >= h as f64 {
        return Err(Error::Config("phantom image too small for the requested cluster geometry".into()));
    }
    // Restart the whole constellation when a center dead-ends: a bad early
    // draw (say, dead center of the image) can make later clusters impossible.
    let mut centers: Vec<(f64, f64)> = Vec::new();
    'attempt: for _ in 0..PLACEMENT_RETRIES {
        centers.clear();
        for _ in 0..spec.n_clusters {
            let mut placed = false;
            for _ in 0..50 {
                let cx = rng.gen_range(margin..w as f64 - margin);
                let cy = rng.gen_range(margin..h as f64 - margin);
                if centers.iter().all(|&(ox, oy)| (cx - ox).hypot(cy - oy) >= min_center_sep_px) {
                    centers.push((cx, cy));
                    placed = true;
                    break;
                }
            }
            if !placed {
                continue 'attempt;
            }
        }
        break;
    }
    if centers.len() != spec.n_clusters {
        return Err(Error::Data(format!(
            "phantom seed {}: could not place {} clusters after {} attempts \
             (image {}x{} px, min separation {:.1} px)",
            spec.rng_seed, spec.n_clusters, PLACEMENT_RETRIES, w, h, min_center_sep_px
        )));
    }

    // Members within each cluster.
    let min_member_sep_px = spec.min_mc_separation_mm * px_per_mm;
    let mut blobs: Vec<Blob> = Vec::new();
    let mut regions: Vec<RegionMask> = Vec::new();
    for (cluster_idx, &(ccx, ccy)) in centers.iter().enumerate() {
        let count = rng.gen_range(spec.mc_per_cluster_range.0..=spec.mc_per_cluster_range.1);
        let mut members: Vec<(f64, f64)> = Vec::new();
        for member_idx in 0..count {
            let mut placed = false;
            for _ in 0..PLACEMENT_RETRIES {
                let angle = rng.gen_range(0.0..std::f64::consts::TAU);
                let r = cluster_radius_px * rng.gen::<f64>().sqrt();
                let mx = ccx + r * angle.cos();
                let my = ccy + r * angle.sin();
                if members.iter().all(|&(ox, oy)| (mx - ox).hypot(my - oy) >= min_member_sep_px) {
                    members.push((mx, my));
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(Error::Data(format!(
                    "phantom seed {}: could not place µC {member_idx} in cluster {cluster_idx} \
                     after {PLACEMENT_RETRIES} retries",
                    spec.rng_seed
                )));
            }
        }
        for &(mx, my) in &members {
            let diameter_mm =
                rng.gen_range(spec.mc_diameter_range_mm.0..=spec.mc_diameter_range_mm.1);
            let contrast = rng.gen_range(spec.mc_contrast_range.0..=spec.mc_contrast_range.1);
            let radius_px = 0.5 * diameter_mm * px_per_mm;
            blobs.push(Blob { cx: mx, cy: my, radius_px, contrast });

            // Ground truth: pixel centers inside the blob disk.
            let mut points: Vec<(usize, usize)> = Vec::new();
            let x_lo = (mx - radius_px - 1.0).floor().max(0.0) as usize;
            let x_hi = ((mx + radius_px + 1.0).ceil() as usize).min(w - 1);
            let y_lo = (my - radius_px - 1.0).floor().max(0.0) as usize;
            let y_hi = ((my + radius_px + 1.0).ceil() as usize).min(h - 1);
            for y in y_lo..=y_hi {
                for x in x_lo..=x_hi {
                    let dx = x as f64 + 0.5 - mx;
                    let dy = y as f64 + 0.5 - my;
                    if dx * dx + dy * dy <= radius_px * radius_px {
                        points.push((x, y));
                    }
                }
            }
            if points.is_empty() {
                points.push((mx.round().clamp(0.0, (w - 1) as f64) as usize,
                             my.round().clamp(0.0, (h - 1) as f64) as usize));
            }
            regions.push(RegionMask::from_points(&points).expect("blob has pixels"));
        }
    }

    // Blob signal field: calcifications are sharp-edged dense specks, so the
    // profile is a flat-top disk with a one-pixel linear skirt. Ground truth
    // (the disk of the drawn radius) coincides with the half-maximum contour.
    let mut signal = vec![0.0f64; w * h];
    for blob in &blobs {
        let local_bg = {
            let xi = (blob.cx as usize).min(w - 1);
            let yi = (blob.cy as usize).min(h - 1);
            background[yi * w + xi]
        };
        let amplitude = blob.contrast * (spec.photon_gain * local_bg).sqrt();
        let reach = (blob.radius_px + 2.0).ceil() as isize;
        let bx = blob.cx.round() as isize;
        let by = blob.cy.round() as isize;
        for y in (by - reach).max(0)..=(by + reach).min(h as isize - 1) {
            for x in (bx - reach).max(0)..=(bx + reach).min(w as isize - 1) {
                let dx = x as f64 + 0.5 - blob.cx;
                let dy = y as f64 + 0.5 - blob.cy;
                let d = (dx * dx + dy * dy).sqrt();
                let profile = (blob.radius_px + 0.5 - d).clamp(0.0, 1.0);
                signal[y as usize * w + x as usize] += amplitude * profile;
            }
        }
    }

    // Bright streaks: Gaussian-ridge capsules kept clear of every µC so they
    // never merge with an annotated component.
    let n_distractors =
        rng.gen_range(spec.n_distractors_range.0..=spec.n_distractors_range.1);
    let clearance_px = 2.5 * px_per_mm;
    for _ in 0..n_distractors {
        let mut placed: Option<((f64, f64), (f64, f64), f64, f64)> = None;
        for _ in 0..100 {
            let length = rng
                .gen_range(spec.distractor_length_range_mm.0..=spec.distractor_length_range_mm.1)
                * px_per_mm;
            let angle = rng.gen_range(0.0..std::f64::consts::PI);
            let cx = rng.gen_range(2.0..w as f64 - 2.0);
            let cy = rng.gen_range(2.0..h as f64 - 2.0);
            let half = (0.5 * length * angle.cos(), 0.5 * length * angle.sin());
            let a = (cx - half.0, cy - half.1);
            let b = (cx + half.0, cy + half.1);
            let thickness = rng.gen_range(0.6..1.4);
            let contrast = rng
                .gen_range(spec.distractor_contrast_range.0..=spec.distractor_contrast_range.1);
            if blobs.iter().all(|blob| {
                point_segment_distance((blob.cx, blob.cy), a, b) >= clearance_px
            }) {
                placed = Some((a, b, thickness, contrast));
                break;
            }
        }
        // A crowded image may reject every draw; fewer streaks is fine.
        let Some((a, b, sigma_t, contrast)) = placed else {
            continue;
        };
        let local_bg = {
            let xi = ((a.0 + b.0) * 0.5) as usize;
            let yi = ((a.1 + b.1) * 0.5) as usize;
            background[yi.min(h - 1) * w + xi.min(w - 1)]
        };
        let amplitude = contrast * (spec.photon_gain * local_bg).sqrt();
        let reach = (3.0 * sigma_t).ceil();
        let x_lo = (a.0.min(b.0) - reach).floor().max(0.0) as usize;
        let x_hi = ((a.0.max(b.0) + reach).ceil() as usize).min(w - 1);
        let y_lo = (a.1.min(b.1) - reach).floor().max(0.0) as usize;
        let y_hi = ((a.1.max(b.1) + reach).ceil() as usize).min(h - 1);
        for y in y_lo..=y_hi {
            for x in x_lo..=x_hi {
                let d = point_segment_distance((x as f64 + 0.5, y as f64 + 0.5), a, b);
                if d <= reach {
                    signal[y * w + x] += amplitude * (-d * d / (2.0 * sigma_t * sigma_t)).exp();
                }
            }
        }
    }

    // Photon noise: counts are Poisson in quanta of `photon_gain`, rounded to
    // integer detector values so a 16-bit round trip through disk is exact.
    let g = spec.photon_gain;
    let mut pixels = Vec::with_capacity(w * h);
    for i in 0..w * h {
        let lambda = ((background[i] + signal[i]) / g).max(1e-9);
        let counts = Poisson::new(lambda).expect("positive lambda").sample(&mut rng);
        let value = (g * counts).round().clamp(0.0, f64::from(u16::MAX));
        pixels.push(value as f32);
    }

    let image = Mammogram::new(pixels, w, h, spec.pixel_spacing_mm, "phantom", "phantom")?;
    let annotations = AnnotationSet::new(w, h, regions)?;
    Ok(PhantomImage { image, annotations, clean_background: background })
}

/// Parameters for a whole phantom dataset.
///
/// `image` acts as the per-image template; its `n_clusters` and `rng_seed`
/// are overridden per image from `n_clusters_range` and `seed`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhantomDatasetSpec {
    pub n_images: usize,
    pub images_per_case: usize,
    /// Inclusive range of clusters per image; zero means a normal image.
    pub n_clusters_range: (usize, usize),
    pub seed: u64,
    pub image: PhantomSpec,
}

impl Default for PhantomDatasetSpec {
    fn default() -> Self {
        PhantomDatasetSpec {
            n_images: 40,
            images_per_case: 3,
            n_clusters_range: (0, 2),
            seed: 0,
            image: PhantomSpec::default(),
        }
    }
}

/// Generates a seeded phantom dataset with case grouping.
pub fn generate_phantom_dataset(
    spec: &PhantomDatasetSpec,
) -> Result<Vec<(Mammogram, AnnotationSet)>> {
    if spec.n_images == 0 || spec.images_per_case == 0 {
        return Err(Error::Config("phantom dataset needs n_images and images_per_case >= 1".into()));
    }
    if spec.n_clusters_range.0 > spec.n_clusters_range.1 {
        return Err(Error::Config("n_clusters_range must be ordered".into()));
    }
    // Per-image cluster counts come from their own stream so that changing an
    // image's content never shifts any other image.
    let mut count_rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, "phantom-cluster-counts"));
    let cluster_counts: Vec<usize> = (0..spec.n_images)
        .map(|_| count_rng.gen_range(spec.n_clusters_range.0..=spec.n_clusters_range.1))
        .collect();

    let results = crate::exec::map_indexed(spec.n_images, |i| -> Result<(Mammogram, AnnotationSet)> {
        let mut image_spec = spec.image.clone();
        image_spec.n_clusters = cluster_counts[i];
        image_spec.rng_seed = derive_seed(spec.seed, &format!("phantom-image-{i}"));
        let mut phantom = generate_phantom(&image_spec)?;
        phantom.image.image_id = format!("img_{i:04}");
        phantom.image.case_id = format!("case_{:03}", i / spec.images_per_case);
        Ok((phantom.image, phantom.annotations))
    });
    results.into_iter().collect()
}
