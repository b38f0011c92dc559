//! Local binary pattern histogram over a patch.

use super::{Patch, PATCH_SIDE};

/// Clockwise neighbor offsets starting at the top-left corner; bit k of the
/// code corresponds to `LBP_NEIGHBORS[k]`.
const LBP_NEIGHBORS: [(isize, isize); 8] =
    [(-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0)];

/// LBP code of an interior pixel: bit k is set iff the neighbor is >= the
/// center value (so a constant patch codes to 255).
pub fn lbp_code(patch: &Patch, x: usize, y: usize) -> u8 {
    debug_assert!(x >= 1 && y >= 1 && x < PATCH_SIDE - 1 && y < PATCH_SIDE - 1);
    let center = patch.get(x, y);
    let mut code = 0u8;
    for (k, &(dx, dy)) in LBP_NEIGHBORS.iter().enumerate() {
        let v = patch.get((x as isize + dx) as usize, (y as isize + dy) as usize);
        if v >= center {
            code |= 1 << k;
        }
    }
    code
}

/// Normalized 256-bin histogram of LBP codes over all interior pixels.
pub fn lbp_histogram(patch: &Patch) -> [f64; 256] {
    let mut hist = [0.0f64; 256];
    let interior = ((PATCH_SIDE - 2) * (PATCH_SIDE - 2)) as f64;
    for y in 1..PATCH_SIDE - 1 {
        for x in 1..PATCH_SIDE - 1 {
            hist[lbp_code(patch, x, y) as usize] += 1.0;
        }
    }
    for bin in hist.iter_mut() {
        *bin /= interior;
    }
    hist
}
