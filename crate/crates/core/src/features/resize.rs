//! Bicubic patch resizing (Keys kernel, a = −0.5) with corner alignment and
//! replicate-edge taps.

use super::{Patch, PATCH_SIDE};

const A: f64 = -0.5;

#[inline]
fn cubic_weight(t: f64) -> f64 {
    let t = t.abs();
    if t <= 1.0 {
        (A + 2.0) * t * t * t - (A + 3.0) * t * t + 1.0
    } else if t < 2.0 {
        A * t * t * t - 5.0 * A * t * t + 8.0 * A * t - 4.0 * A
    } else {
        0.0
    }
}

/// Resizes a grayscale buffer with bicubic interpolation.
///
/// Mapping is corner-aligned: output corner samples coincide with input
/// corner samples, and an identically sized input is returned unchanged.
pub fn resize_bicubic(src: &[f64], sw: usize, sh: usize, tw: usize, th: usize) -> Vec<f64> {
    assert!(sw >= 1 && sh >= 1 && tw >= 1 && th >= 1);
    assert_eq!(src.len(), sw * sh);
    let sx_scale = if tw > 1 { (sw - 1) as f64 / (tw - 1) as f64 } else { 0.0 };
    let sy_scale = if th > 1 { (sh - 1) as f64 / (th - 1) as f64 } else { 0.0 };
    let tap = |x: isize, y: isize| -> f64 {
        let cx = x.clamp(0, sw as isize - 1) as usize;
        let cy = y.clamp(0, sh as isize - 1) as usize;
        src[cy * sw + cx]
    };
    let mut out = Vec::with_capacity(tw * th);
    for ty in 0..th {
        let sy = ty as f64 * sy_scale;
        let iy = sy.floor() as isize;
        let fy = sy - iy as f64;
        for tx in 0..tw {
            let sx = tx as f64 * sx_scale;
            let ix = sx.floor() as isize;
            let fx = sx - ix as f64;
            let mut acc = 0.0;
            for ky in -1..=2isize {
                let wy = cubic_weight(fy - ky as f64);
                if wy == 0.0 {
                    continue;
                }
                let mut row = 0.0;
                for kx in -1..=2isize {
                    let wx = cubic_weight(fx - kx as f64);
                    if wx != 0.0 {
                        row += wx * tap(ix + kx, iy + ky);
                    }
                }
                acc += wy * row;
            }
            out.push(acc);
        }
    }
    out
}

/// Resizes an arbitrary sub-image to the fixed 12×12 patch.
pub fn resize_to_patch(src: &[f64], sw: usize, sh: usize) -> Patch {
    let data = resize_bicubic(src, sw, sh, PATCH_SIDE, PATCH_SIDE);
    let mut out = [0.0; PATCH_SIDE * PATCH_SIDE];
    out.copy_from_slice(&data);
    Patch::new(out)
}
