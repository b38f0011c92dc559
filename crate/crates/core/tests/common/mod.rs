//! Brute-force oracles shared by the oracle suites and the acceptance tests.
//! Everything here is written straight from definitions with plain loops,
//! independent of the library's integral-image / lookup implementations.

use calc_cade_core::features::{HaarFeature, HaarKind, Patch};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SIDE: usize = 12;

pub fn random_pixels(rng: &mut ChaCha8Rng) -> Vec<f32> {
    (0..SIDE * SIDE).map(|_| rng.gen_range(0.0..1000.0)).collect()
}

pub fn brute_rect_sum(px: &[f32], x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
    let mut sum = 0.0;
    for y in y0..y1 {
        for x in x0..x1 {
            sum += f64::from(px[y * SIDE + x]);
        }
    }
    sum
}

/// Haar value recomputed from raw pixel sums, one rectangle at a time.
pub fn brute_haar(px: &[f32], f: &HaarFeature) -> f64 {
    let (x, y) = (f.x as usize, f.y as usize);
    let (w, h) = (f.w as usize, f.h as usize);
    let rect = |rx: usize, ry: usize| brute_rect_sum(px, rx, ry, rx + w, ry + h);
    match f.kind {
        HaarKind::TwoRectHorizontal => rect(x, y) - rect(x + w, y),
        HaarKind::TwoRectVertical => rect(x, y) - rect(x, y + h),
        HaarKind::ThreeRectHorizontal => 2.0 * rect(x + w, y) - rect(x, y) - rect(x + 2 * w, y),
        HaarKind::ThreeRectVertical => 2.0 * rect(x, y + h) - rect(x, y) - rect(x, y + 2 * h),
        HaarKind::FourRectChecker => {
            rect(x, y) + rect(x + w, y + h) - rect(x + w, y) - rect(x, y + h)
        }
    }
}

/// Quantize + count co-occurring pairs by scanning every pixel pair directly.
pub fn brute_sgld_matrix(patch: &Patch, offset: (usize, usize)) -> Vec<Vec<f64>> {
    let g = 16usize;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for y in 0..SIDE {
        for x in 0..SIDE {
            lo = lo.min(patch.get(x, y));
            hi = hi.max(patch.get(x, y));
        }
    }
    let level = |v: f64| -> usize {
        if hi > lo {
            (((v - lo) / (hi - lo) * g as f64) as usize).min(g - 1)
        } else {
            0
        }
    };
    let mut counts = vec![vec![0usize; g]; g];
    let mut total = 0usize;
    for y in 0..SIDE {
        for x in 0..SIDE {
            let (nx, ny) = (x + offset.0, y + offset.1);
            if nx < SIDE && ny < SIDE {
                let a = level(patch.get(x, y));
                let b = level(patch.get(nx, ny));
                counts[a][b] += 1;
                counts[b][a] += 1;
                total += 2;
            }
        }
    }
    counts
        .into_iter()
        .map(|row| row.into_iter().map(|c| c as f64 / total as f64).collect())
        .collect()
}

pub fn brute_sgld_stats(p: &[Vec<f64>]) -> [f64; 9] {
    let g = p.len();
    let idx = |i: usize| i as f64;
    let mut mu_x = 0.0;
    let mut mu_y = 0.0;
    for i in 0..g {
        for j in 0..g {
            mu_x += idx(i) * p[i][j];
            mu_y += idx(j) * p[i][j];
        }
    }
    let mut energy = 0.0;
    let mut entropy = 0.0;
    let mut inertia = 0.0;
    let mut idm = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    let mut cov = 0.0;
    let mut shade = 0.0;
    let mut p_sum = vec![0.0; 2 * g - 1];
    let mut p_diff = vec![0.0; g];
    for i in 0..g {
        for j in 0..g {
            let v = p[i][j];
            energy += v * v;
            if v > 0.0 {
                entropy -= v * v.ln();
            }
            inertia += (idx(i) - idx(j)).powi(2) * v;
            idm += v / (1.0 + (idx(i) - idx(j)).powi(2));
            var_x += (idx(i) - mu_x).powi(2) * v;
            var_y += (idx(j) - mu_y).powi(2) * v;
            cov += (idx(i) - mu_x) * (idx(j) - mu_y) * v;
            shade += (idx(i) + idx(j) - mu_x - mu_y).powi(3) * v;
            p_sum[i + j] += v;
            p_diff[i.abs_diff(j)] += v;
        }
    }
    let corr =
        if var_x > 1e-12 && var_y > 1e-12 { cov / (var_x.sqrt() * var_y.sqrt()) } else { 0.0 };
    let sum_avg = p_sum.iter().enumerate().map(|(k, &v)| k as f64 * v).sum();
    let sum_ent = p_sum.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum();
    let diff_ent = p_diff.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum();
    [energy, entropy, inertia, corr, idm, sum_avg, sum_ent, diff_ent, shade]
}

/// LBP code by direct comparison against the eight neighbors, clockwise from
/// the top-left, bit k for neighbor k.
pub fn brute_lbp_code(patch: &Patch, x: usize, y: usize) -> u8 {
    let c = patch.get(x, y);
    let neighbors = [
        patch.get(x - 1, y - 1),
        patch.get(x, y - 1),
        patch.get(x + 1, y - 1),
        patch.get(x + 1, y),
        patch.get(x + 1, y + 1),
        patch.get(x, y + 1),
        patch.get(x - 1, y + 1),
        patch.get(x - 1, y),
    ];
    let mut code = 0u8;
    for (k, &nv) in neighbors.iter().enumerate() {
        if nv >= c {
            code |= 1 << k;
        }
    }
    code
}

/// Connected components by BFS over an explicit adjacency matrix.
pub fn bfs_cluster_oracle(
    points: &[(f64, f64)],
    max_dist: f64,
    min_size: usize,
) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut adjacent = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d = (points[i].0 - points[j].0).hypot(points[i].1 - points[j].1);
                adjacent[i][j] = d < max_dist;
            }
        }
    }
    let mut seen = vec![false; n];
    let mut components = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut queue = std::collections::VecDeque::from([start]);
        seen[start] = true;
        let mut members = Vec::new();
        while let Some(i) = queue.pop_front() {
            members.push(i);
            for j in 0..n {
                if adjacent[i][j] && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        members.sort_unstable();
        if members.len() >= min_size {
            components.push(members);
        }
    }
    components.sort();
    components
}
