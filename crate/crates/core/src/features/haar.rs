//! Haar-like feature bank over the 12×12 classification window.
//!
//! Five rectangle layouts are enumerated; all of them are balanced so a
//! constant window scores exactly zero:
//!
//! * two-rect horizontal: `sum(left) − sum(right)`, extent 2w×h
//! * two-rect vertical:   `sum(top) − sum(bottom)`, extent w×2h
//! * three-rect horizontal: `2·sum(middle) − sum(left) − sum(right)`, extent 3w×h
//! * three-rect vertical:   `2·sum(middle) − sum(top) − sum(bottom)`, extent w×3h
//! * four-rect checker: `(TL + BR) − (TR + BL)`, extent 2w×2h
//!
//! The bank is enumerated in two deterministic passes ordered by
//! (kind, w, h, x, y): first every descriptor on the coarse lattice (odd unit
//! sizes, even positions), then the remaining fine-lattice descriptors until
//! the bank holds exactly [`HAAR_BANK_LEN`](crate::HAAR_BANK_LEN) entries.

use serde::{Deserialize, Serialize};

use super::integral::IntegralImage;
use crate::{Error, Result, HAAR_BANK_LEN, WINDOW_SIZE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HaarKind {
    TwoRectHorizontal,
    TwoRectVertical,
    ThreeRectHorizontal,
    ThreeRectVertical,
    FourRectChecker,
}

impl HaarKind {
    const ALL: [HaarKind; 5] = [
        HaarKind::TwoRectHorizontal,
        HaarKind::TwoRectVertical,
        HaarKind::ThreeRectHorizontal,
        HaarKind::ThreeRectVertical,
        HaarKind::FourRectChecker,
    ];

    /// Unit-rectangle multipliers: total extent is (w·kx) × (h·ky).
    #[inline]
    fn extent_multipliers(self) -> (usize, usize) {
        match self {
            HaarKind::TwoRectHorizontal => (2, 1),
            HaarKind::TwoRectVertical => (1, 2),
            HaarKind::ThreeRectHorizontal => (3, 1),
            HaarKind::ThreeRectVertical => (1, 3),
            HaarKind::FourRectChecker => (2, 2),
        }
    }
}

/// One Haar-like descriptor in window coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HaarFeature {
    pub kind: HaarKind,
    pub x: u8,
    pub y: u8,
    /// Unit rectangle width; the feature spans 2 or 3 units depending on kind.
    pub w: u8,
    /// Unit rectangle height.
    pub h: u8,
}

impl HaarFeature {
    /// Total extent of the feature in window pixels.
    pub fn extent(&self) -> (usize, usize) {
        let (kx, ky) = self.kind.extent_multipliers();
        (self.w as usize * kx, self.h as usize * ky)
    }

    fn fits(&self, window: usize) -> bool {
        let (ew, eh) = self.extent();
        self.x as usize + ew <= window && self.y as usize + eh <= window
    }
}

fn push_if_fits(
    out: &mut Vec<HaarFeature>,
    kind: HaarKind,
    window: usize,
    coarse_only: bool,
    limit: usize,
) {
    let (kx, ky) = kind.extent_multipliers();
    for w in 1..=window / kx {
        for h in 1..=window / ky {
            for x in 0..=(window - w * kx) {
                for y in 0..=(window - h * ky) {
                    let on_coarse = w % 2 == 1 && h % 2 == 1 && x % 2 == 0 && y % 2 == 0;
                    if coarse_only != on_coarse {
                        continue;
                    }
                    if out.len() == limit {
                        return;
                    }
                    out.push(HaarFeature {
                        kind,
                        x: x as u8,
                        y: y as u8,
                        w: w as u8,
                        h: h as u8,
                    });
                }
            }
        }
    }
}

/// Enumerates the fixed Haar bank for the 12×12 window: exactly 1,697
/// descriptors in a stable order.
pub fn enumerate_haar_bank(window: usize) -> Result<Vec<HaarFeature>> {
    if window != WINDOW_SIZE {
        return Err(Error::Config(format!(
            "haar bank is defined for the {WINDOW_SIZE}x{WINDOW_SIZE} window, got {window}"
        )));
    }
    let mut bank = Vec::with_capacity(HAAR_BANK_LEN);
    for kind in HaarKind::ALL {
        push_if_fits(&mut bank, kind, window, true, HAAR_BANK_LEN);
    }
    for kind in HaarKind::ALL {
        if bank.len() == HAAR_BANK_LEN {
            break;
        }
        push_if_fits(&mut bank, kind, window, false, HAAR_BANK_LEN);
    }
    debug_assert_eq!(bank.len(), HAAR_BANK_LEN);
    debug_assert!(bank.iter().all(|f| f.fits(window)));
    Ok(bank)
}

/// Evaluates one descriptor on a window whose top-left corner sits at
/// `origin` in the integral image's coordinates.
#[inline]
pub fn haar_value(ii: &IntegralImage, origin: (usize, usize), f: &HaarFeature) -> f64 {
    let x = origin.0 + f.x as usize;
    let y = origin.1 + f.y as usize;
    let w = f.w as usize;
    let h = f.h as usize;
    match f.kind {
        HaarKind::TwoRectHorizontal => {
            ii.rect_sum(x, y, x + w, y + h) - ii.rect_sum(x + w, y, x + 2 * w, y + h)
        }
        HaarKind::TwoRectVertical => {
            ii.rect_sum(x, y, x + w, y + h) - ii.rect_sum(x, y + h, x + w, y + 2 * h)
        }
        HaarKind::ThreeRectHorizontal => {
            2.0 * ii.rect_sum(x + w, y, x + 2 * w, y + h)
                - ii.rect_sum(x, y, x + w, y + h)
                - ii.rect_sum(x + 2 * w, y, x + 3 * w, y + h)
        }
        HaarKind::ThreeRectVertical => {
            2.0 * ii.rect_sum(x, y + h, x + w, y + 2 * h)
                - ii.rect_sum(x, y, x + w, y + h)
                - ii.rect_sum(x, y + 2 * h, x + w, y + 3 * h)
        }
        HaarKind::FourRectChecker => {
            ii.rect_sum(x, y, x + w, y + h) + ii.rect_sum(x + w, y + h, x + 2 * w, y + 2 * h)
                - ii.rect_sum(x + w, y, x + 2 * w, y + h)
                - ii.rect_sum(x, y + h, x + w, y + 2 * h)
        }
    }
}

/// Bounds-checked [`haar_value`]: errors if the window or feature would read
/// outside the integral image.
pub fn haar_value_checked(
    ii: &IntegralImage,
    origin: (usize, usize),
    f: &HaarFeature,
) -> Result<f64> {
    let (ew, eh) = f.extent();
    let x1 = origin.0 + f.x as usize + ew;
    let y1 = origin.1 + f.y as usize + eh;
    if x1 > ii.width() || y1 > ii.height() {
        return Err(Error::Config(format!(
            "haar feature at origin {origin:?} reads outside the {}x{} image",
            ii.width(),
            ii.height()
        )));
    }
    Ok(haar_value(ii, origin, f))
}

/// Evaluates the whole bank on one window into `out` (length of the bank).
pub fn haar_values_into(
    ii: &IntegralImage,
    origin: (usize, usize),
    bank: &[HaarFeature],
    out: &mut [f64],
) {
    debug_assert_eq!(bank.len(), out.len());
    for (slot, f) in out.iter_mut().zip(bank) {
        *slot = haar_value(ii, origin, f);
    }
}
