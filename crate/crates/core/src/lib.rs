//! Micro-calcification (µC) detection for full-field digital mammograms.
//!
//! The pipeline has three stages, preceded by quantum-noise equalization:
//!
//! 1. candidate detection — a pixel-wise cascade of boosted stumps over
//!    Haar-like features in a 12×12 window, followed by connected-component
//!    grouping and macro-calcification removal;
//! 2. candidate classification — a single boosted ensemble over shape, SGLD
//!    texture, Haar and LBP features of each candidate;
//! 3. proximity clustering — connected components of the 10 mm centroid graph,
//!    keeping clusters of three or more µCs.
//!
//! [`evaluation`] computes per-µC FROC, cluster FROC and case-level ROC curves
//! with cross-fold interpolation, and [`experiment`] orchestrates the whole
//! protocol (splitting, training, detection, evaluation) from a single config.
//!
//! Data-parallel inner loops (pixel scanning, stump search, per-image
//! evaluation) run on rayon when the default `parallel` feature is enabled and
//! fall back to equivalent sequential code otherwise. Both paths produce
//! bit-identical results.

pub mod boosting;
pub mod data;
pub mod error;
pub(crate) mod exec;
pub mod evaluation;
pub mod experiment;
pub mod features;
pub mod pipeline;
pub mod preprocess;

pub use error::{Error, Result};

/// Side length of the square pixel-classification window, in pixels.
pub const WINDOW_SIZE: usize = 12;

/// Number of Haar-like descriptors in the fixed feature bank.
pub const HAAR_BANK_LEN: usize = 1697;

/// Total length of a candidate feature vector: 11 shape + 27 SGLD + 1697 Haar + 256 LBP.
pub const FEATURE_VECTOR_LEN: usize = 1991;

/// Default detector pixel pitch in mm (FFDM-scale); user-overridable everywhere.
pub const DEFAULT_PIXEL_SPACING_MM: f64 = 0.07;

/// Derives an independent sub-seed from a master seed and a purpose label.
///
/// Keeps every randomized component on its own deterministic stream so that
/// reordering or parallelizing work never perturbs another component's draws.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    // FNV-1a over the label, then a splitmix64 finalizer.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = master ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
