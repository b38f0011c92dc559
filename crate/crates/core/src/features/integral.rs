//! Summed-area table with O(1) rectangle sums.

use crate::{Error, Result};

/// Summed-area table of size (width+1)×(height+1).
///
/// `rect_sum` uses half-open rectangles `[x0, x1) × [y0, y1)` in the source
/// image's coordinates.
#[derive(Debug, Clone)]
pub struct IntegralImage {
    width: usize,
    height: usize,
    table: Vec<f64>,
}

impl IntegralImage {
    /// Builds the table from a pixel getter, which lets callers feed padded
    /// or virtual images without materializing them.
    pub fn from_fn(width: usize, height: usize, get: impl Fn(usize, usize) -> f64) -> Self {
        let stride = width + 1;
        let mut table = vec![0.0; stride * (height + 1)];
        for y in 0..height {
            let mut row_sum = 0.0;
            for x in 0..width {
                row_sum += get(x, y);
                table[(y + 1) * stride + (x + 1)] = table[y * stride + (x + 1)] + row_sum;
            }
        }
        IntegralImage { width, height, table }
    }

    pub fn from_pixels(pixels: &[f32], width: usize, height: usize) -> Self {
        assert_eq!(pixels.len(), width * height);
        Self::from_fn(width, height, |x, y| f64::from(pixels[y * width + x]))
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    /// Sum over `[x0, x1) × [y0, y1)`. The rectangle must lie inside the image.
    #[inline]
    pub fn rect_sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
        debug_assert!(x0 <= x1 && y0 <= y1 && x1 <= self.width && y1 <= self.height);
        let s = self.width + 1;
        self.table[y1 * s + x1] + self.table[y0 * s + x0]
            - self.table[y0 * s + x1]
            - self.table[y1 * s + x0]
    }

    /// Bounds-checked variant of [`rect_sum`](Self::rect_sum).
    pub fn rect_sum_checked(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> Result<f64> {
        if x0 > x1 || y0 > y1 || x1 > self.width || y1 > self.height {
            return Err(Error::Config(format!(
                "rectangle [{x0},{x1})x[{y0},{y1}) outside {}x{} image",
                self.width, self.height
            )));
        }
        Ok(self.rect_sum(x0, y0, x1, y1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_hand_sum() {
        let ii = IntegralImage::from_pixels(&[1.0, 2.0, 3.0, 4.0], 2, 2);
        assert_eq!(ii.rect_sum(0, 0, 2, 2), 10.0);
        assert_eq!(ii.rect_sum(0, 0, 1, 1), 1.0);
        assert_eq!(ii.rect_sum(1, 0, 2, 2), 6.0);
        assert_eq!(ii.rect_sum(0, 1, 2, 2), 7.0);
        assert_eq!(ii.rect_sum(1, 1, 1, 1), 0.0);
    }

    #[test]
    fn constant_rect_is_area_times_value() {
        let c = 2.5f32;
        let ii = IntegralImage::from_pixels(&[c; 35], 7, 5);
        for (x0, y0, x1, y1) in [(0, 0, 7, 5), (1, 2, 4, 3), (3, 0, 7, 4)] {
            let expected = f64::from(c) * ((x1 - x0) * (y1 - y0)) as f64;
            assert!((ii.rect_sum(x0, y0, x1, y1) - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn out_of_bounds_rect_rejected() {
        let ii = IntegralImage::from_pixels(&[0.0; 16], 4, 4);
        assert!(ii.rect_sum_checked(0, 0, 5, 4).is_err());
        assert!(ii.rect_sum_checked(2, 2, 1, 3).is_err());
        assert!(ii.rect_sum_checked(0, 0, 4, 4).is_ok());
    }
}
