//! Pixel-centered window access with replicate-edge padding.
//!
//! The classification window around pixel (x, y) covers columns
//! `x − M/2 .. x + M/2` (half-open) and likewise in y; border pixels read
//! replicated edge values. One padded integral image serves every window of
//! an image, so a window evaluation is O(1) per Haar rectangle.

use super::integral::IntegralImage;
use crate::data::Mammogram;
use crate::WINDOW_SIZE;

/// Integral image of the replicate-padded mammogram.
pub struct WindowedImage {
    ii: IntegralImage,
    width: usize,
    height: usize,
}

impl WindowedImage {
    pub fn new(image: &Mammogram) -> Self {
        let pad = WINDOW_SIZE / 2;
        let ii = IntegralImage::from_fn(
            image.width() + WINDOW_SIZE,
            image.height() + WINDOW_SIZE,
            |x, y| f64::from(image.get_clamped(x as isize - pad as isize, y as isize - pad as isize)),
        );
        WindowedImage { ii, width: image.width(), height: image.height() }
    }

    #[inline]
    pub fn integral(&self) -> &IntegralImage {
        &self.ii
    }

    /// Top-left corner of pixel (x, y)'s window in padded coordinates.
    /// With pad = M/2 this is simply (x, y).
    #[inline]
    pub fn window_origin(&self, x: usize, y: usize) -> (usize, usize) {
        debug_assert!(x < self.width && y < self.height);
        (x, y)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }
}

/// Raw window pixels around `center`, replicate-clamped at the borders.
/// Row-major, length `WINDOW_SIZE * WINDOW_SIZE`.
pub fn window_pixels(image: &Mammogram, center: (usize, usize)) -> [f32; WINDOW_SIZE * WINDOW_SIZE] {
    let half = (WINDOW_SIZE / 2) as isize;
    let mut out = [0.0f32; WINDOW_SIZE * WINDOW_SIZE];
    for wy in 0..WINDOW_SIZE {
        for wx in 0..WINDOW_SIZE {
            out[wy * WINDOW_SIZE + wx] = image.get_clamped(
                center.0 as isize + wx as isize - half,
                center.1 as isize + wy as isize - half,
            );
        }
    }
    out
}
