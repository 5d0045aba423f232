//! Bad-pixel error rates.

use crate::error::{Error, Result};
use crate::image::{GrayImage, Grid};

/// Error thresholds (px) of the usual bad-pixel family.
pub const BAD_THRESHOLDS: [f64; 4] = [0.5, 1.0, 2.0, 4.0];

/// Percentage of evaluated pixels whose error exceeds `threshold`.
/// Pixels outside `mask` or with non-finite ground truth are not evaluated.
pub fn bad_rate(est: &GrayImage, gt: &GrayImage, mask: Option<&Grid<bool>>, threshold: f64) -> Result<f64> {
    if !est.same_dims(gt) || mask.is_some_and(|m| !m.same_dims(gt)) {
        return Err(Error::DimensionMismatch(format!(
            "estimate {}x{}, ground truth {}x{}",
            est.width(),
            est.height(),
            gt.width(),
            gt.height()
        )));
    }
    let mut total = 0usize;
    let mut bad = 0usize;
    for (i, (&e, &g)) in est.as_slice().iter().zip(gt.as_slice()).enumerate() {
        if !g.is_finite() || mask.is_some_and(|m| !m.as_slice()[i]) {
            continue;
        }
        total += 1;
        // a non-finite estimate always counts as bad
        if !((e - g).abs() <= threshold) {
            bad += 1;
        }
    }
    if total == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(100.0 * bad as f64 / total as f64)
}
