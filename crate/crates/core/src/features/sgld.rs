//! Spatial grey-level dependence (co-occurrence) texture statistics.

use super::{Patch, PATCH_SIDE};

/// Quantization levels for the co-occurrence matrices.
pub const SGLD_LEVELS: usize = 16;

/// Pixel offsets of the three co-occurrence directions.
pub const SGLD_OFFSETS: [(usize, usize); 3] = [(1, 0), (0, 1), (1, 1)];

/// Names of the 9 statistics computed per offset, in output order.
pub const SGLD_STAT_NAMES: [&str; 9] = [
    "energy",
    "entropy",
    "inertia",
    "correlation",
    "inverse_difference_moment",
    "sum_average",
    "sum_entropy",
    "difference_entropy",
    "cluster_shade",
];

/// Min-max quantization of a patch to [`SGLD_LEVELS`] gray levels.
/// A constant patch maps entirely to level 0.
pub fn quantize(patch: &Patch) -> [u8; PATCH_SIDE * PATCH_SIDE] {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in patch.data() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let mut levels = [0u8; PATCH_SIDE * PATCH_SIDE];
    if hi > lo {
        let scale = SGLD_LEVELS as f64 / (hi - lo);
        for (slot, &v) in levels.iter_mut().zip(patch.data()) {
            *slot = (((v - lo) * scale) as usize).min(SGLD_LEVELS - 1) as u8;
        }
    }
    levels
}

/// Symmetrized, normalized co-occurrence matrix for one offset.
/// Entries sum to 1 whenever the offset yields at least one pair.
pub fn cooccurrence_matrix(
    levels: &[u8; PATCH_SIDE * PATCH_SIDE],
    offset: (usize, usize),
) -> [[f64; SGLD_LEVELS]; SGLD_LEVELS] {
    let (dx, dy) = offset;
    let mut counts = [[0.0f64; SGLD_LEVELS]; SGLD_LEVELS];
    let mut total = 0.0;
    for y in 0..PATCH_SIDE - dy {
        for x in 0..PATCH_SIDE - dx {
            let a = levels[y * PATCH_SIDE + x] as usize;
            let b = levels[(y + dy) * PATCH_SIDE + (x + dx)] as usize;
            counts[a][b] += 1.0;
            counts[b][a] += 1.0;
            total += 2.0;
        }
    }
    if total > 0.0 {
        for row in counts.iter_mut() {
            for cell in row.iter_mut() {
                *cell /= total;
            }
        }
    }
    counts
}

fn neg_p_log_p(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.ln()
    } else {
        0.0
    }
}

/// The 9 Haralick-style statistics of one normalized co-occurrence matrix.
pub fn matrix_statistics(p: &[[f64; SGLD_LEVELS]; SGLD_LEVELS]) -> [f64; 9] {
    let g = SGLD_LEVELS;
    let mut energy = 0.0;
    let mut entropy = 0.0;
    let mut inertia = 0.0;
    let mut idm = 0.0;
    let mut mu_x = 0.0;
    let mut mu_y = 0.0;
    let mut p_sum = vec![0.0; 2 * g - 1];
    let mut p_diff = vec![0.0; g];
    for i in 0..g {
        for j in 0..g {
            let v = p[i][j];
            energy += v * v;
            entropy += neg_p_log_p(v);
            let d = i as f64 - j as f64;
            inertia += v * d * d;
            idm += v / (1.0 + d * d);
            mu_x += i as f64 * v;
            mu_y += j as f64 * v;
            p_sum[i + j] += v;
            p_diff[i.abs_diff(j)] += v;
        }
    }
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    let mut cov = 0.0;
    let mut shade = 0.0;
    for i in 0..g {
        for j in 0..g {
            let v = p[i][j];
            let di = i as f64 - mu_x;
            let dj = j as f64 - mu_y;
            var_x += di * di * v;
            var_y += dj * dj * v;
            cov += di * dj * v;
            shade += (di + dj).powi(3) * v;
        }
    }
    // Constant patch: zero variance, correlation 0 by convention.
    let correlation = if var_x > 1e-12 && var_y > 1e-12 {
        cov / (var_x.sqrt() * var_y.sqrt())
    } else {
        0.0
    };
    let sum_average = p_sum.iter().enumerate().map(|(k, &v)| k as f64 * v).sum::<f64>();
    let sum_entropy = p_sum.iter().map(|&v| neg_p_log_p(v)).sum::<f64>();
    let diff_entropy = p_diff.iter().map(|&v| neg_p_log_p(v)).sum::<f64>();

    [energy, entropy, inertia, correlation, idm, sum_average, sum_entropy, diff_entropy, shade]
}

/// 27 SGLD features: 9 statistics for each of the offsets (1,0), (0,1), (1,1),
/// offset-major.
pub fn sgld_features(patch: &Patch) -> [f64; 27] {
    let levels = quantize(patch);
    let mut out = [0.0; 27];
    for (k, &offset) in SGLD_OFFSETS.iter().enumerate() {
        let matrix = cooccurrence_matrix(&levels, offset);
        out[k * 9..(k + 1) * 9].copy_from_slice(&matrix_statistics(&matrix));
    }
    out
}
