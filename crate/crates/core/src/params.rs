//! Energy parameters.

use crate::error::{Error, Result};

/// Data-term parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchParams {
    /// Guided-filter regularization added to the color covariance.
    pub e: f64,
    pub tau_col: f64,
    pub tau_grad: f64,
    /// Balance between the color (0) and gradient (1) dissimilarities.
    pub alpha: f64,
    /// Matching window is `(2 * window_radius + 1)²`.
    pub window_radius: usize,
    /// Local regression window radius of the guided filter.
    pub regression_radius: usize,
}

impl MatchParams {
    /// Parameters for a given matching-window radius, pairing it with a
    /// regression window of half the radius.
    pub fn with_window_radius(window_radius: usize) -> Self {
        MatchParams {
            window_radius,
            regression_radius: window_radius / 2,
            ..Self::default()
        }
    }

    /// Largest raw matching cost.
    #[inline]
    pub fn cost_ceiling(&self) -> f64 {
        (1.0 - self.alpha) * self.tau_col + self.alpha * self.tau_grad
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.tau_col >= 0.0) || !(self.tau_grad >= 0.0) {
            return bad("tau_col and tau_grad must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad("alpha must lie in [0, 1]");
        }
        if !(self.e > 0.0) {
            return bad("e must be positive");
        }
        if self.regression_radius != self.window_radius / 2 {
            return bad("regression_radius must equal window_radius / 2");
        }
        Ok(())
    }
}

impl Default for MatchParams {
    /// 41×41 matching windows with 21×21 regression windows.
    fn default() -> Self {
        MatchParams {
            e: 0.01 * 0.01,
            tau_col: 10.0,
            tau_grad: 2.0,
            alpha: 0.9,
            window_radius: 20,
            regression_radius: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Neighborhood {
    Four,
    Eight,
}

impl Neighborhood {
    /// Forward offsets; each unordered neighbor pair is produced exactly once.
    pub fn forward_offsets(self) -> &'static [(isize, isize)] {
        match self {
            Neighborhood::Four => &[(1, 0), (0, 1)],
            Neighborhood::Eight => &[(1, 0), (0, 1), (1, 1), (-1, 1)],
        }
    }

    /// All offsets in both directions.
    pub fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Neighborhood::Four => &[(1, 0), (0, 1), (-1, 0), (0, -1)],
            Neighborhood::Eight => &[(1, 0), (0, 1), (1, 1), (-1, 1), (-1, 0), (0, -1), (-1, -1), (1, -1)],
        }
    }
}

/// Smoothness-term parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothParams {
    pub lambda: f64,
    pub tau_dis: f64,
    /// Lower bound of the contrast-sensitive weight.
    pub eps: f64,
    pub gamma: f64,
    pub neighborhood: Neighborhood,
}

impl SmoothParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.lambda >= 0.0) {
            return bad("lambda must be non-negative");
        }
        if !(self.tau_dis > 0.0) {
            return bad("tau_dis must be positive");
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return bad("eps must lie in (0, 1]");
        }
        if !(self.gamma > 0.0) {
            return bad("gamma must be positive");
        }
        Ok(())
    }
}

impl Default for SmoothParams {
    fn default() -> Self {
        SmoothParams {
            lambda: 1.0,
            tau_dis: 1.0,
            eps: 0.01,
            gamma: 10.0,
            neighborhood: Neighborhood::Eight,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        MatchParams::default().validate().unwrap();
        SmoothParams::default().validate().unwrap();
        assert!((MatchParams::default().cost_ceiling() - 2.8).abs() < 1e-12);
        let m = MatchParams::with_window_radius(10);
        assert_eq!(m.regression_radius, 5);
        m.validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let m = MatchParams { alpha: 1.5, ..Default::default() };
        assert!(m.validate().is_err());
        let s = SmoothParams { eps: 0.0, ..Default::default() };
        assert!(s.validate().is_err());
        let s = SmoothParams { tau_dis: 0.0, ..Default::default() };
        assert!(s.validate().is_err());
    }
}
