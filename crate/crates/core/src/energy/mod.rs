//! MRF energy: slanted-window data term aggregated with guided-filter
//! weights, and the truncated plane-curvature smoothness term.

mod cost;
mod guided;

use std::sync::Arc;

use rayon::prelude::*;

pub use cost::{CostVolume, MatchingCost, PhotoConsistency};
pub use guided::{weights_naive, GuidanceStats, WeightMap};

use crate::error::{Error, Result};
use crate::image::{color_l1, Grid, Rect};
use crate::params::{MatchParams, SmoothParams};
use crate::plane::PlaneLabel;
use crate::stereo::{LabelField, LabelSource, StereoPair, View};

/// Raw costs over the filtering region and aggregated data costs over the
/// expansion region, all for a single label.
#[derive(Clone, Debug)]
pub struct CostSlice {
    /// Expansion region `R`.
    pub region: Rect,
    /// `R` dilated by the matching-window radius, clipped to the image.
    pub filter_region: Rect,
    pub raw: Vec<f64>,
    pub aggregated: Vec<f64>,
}

impl CostSlice {
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.aggregated[self.region.offset(x, y)]
    }
}

/// Energy of one view's label field.
pub struct EnergyModel {
    pair: Arc<StereoPair>,
    matching: MatchParams,
    smooth: SmoothParams,
    view: View,
    cost: Arc<dyn MatchingCost>,
    guidance: GuidanceStats,
    /// `max(w_pq, eps)` per pixel and forward neighbor offset.
    pair_weights: Grid<[f64; 4]>,
}

impl EnergyModel {
    /// Model with the photo-consistency raw cost.
    pub fn new(pair: Arc<StereoPair>, matching: MatchParams, smooth: SmoothParams, view: View) -> Result<Self> {
        let cost = Arc::new(PhotoConsistency::new(pair.clone(), view, &matching));
        Self::with_cost(pair, matching, smooth, view, cost)
    }

    /// Model with an arbitrary raw-cost source, e.g. a [`CostVolume`].
    pub fn with_cost(
        pair: Arc<StereoPair>,
        matching: MatchParams,
        smooth: SmoothParams,
        view: View,
        cost: Arc<dyn MatchingCost>,
    ) -> Result<Self> {
        matching.validate()?;
        smooth.validate()?;
        let image = pair.image(view);
        let guidance = GuidanceStats::new(image, matching.regression_radius, matching.e);
        let (w, h) = (pair.width(), pair.height());
        let offsets = smooth.neighborhood.forward_offsets();
        let pair_weights = Grid::from_fn(w, h, |x, y| {
            let mut ws = [0.0; 4];
            for (slot, &(dx, dy)) in ws.iter_mut().zip(offsets) {
                let (qx, qy) = (x as isize + dx, y as isize + dy);
                if qx >= 0 && qy >= 0 && (qx as usize) < w && (qy as usize) < h {
                    let wpq = contrast_weight(image.get(x, y), image.get(qx as usize, qy as usize), smooth.gamma);
                    *slot = wpq.max(smooth.eps);
                }
            }
            ws
        });
        Ok(EnergyModel {
            pair,
            matching,
            smooth,
            view,
            cost,
            guidance,
            pair_weights,
        })
    }

    pub fn pair(&self) -> &Arc<StereoPair> {
        &self.pair
    }

    pub fn view(&self) -> View {
        self.view
    }

    pub fn match_params(&self) -> &MatchParams {
        &self.matching
    }

    pub fn smooth_params(&self) -> &SmoothParams {
        &self.smooth
    }

    pub fn width(&self) -> usize {
        self.pair.width()
    }

    pub fn height(&self) -> usize {
        self.pair.height()
    }

    pub fn bounds(&self) -> Rect {
        self.pair.bounds()
    }

    pub fn disp_max(&self) -> f64 {
        self.pair.disp_max()
    }

    /// Largest raw cost; also the data cost charged to labels whose
    /// disparity leaves `[0, disp_max]` at a pixel.
    pub fn cost_ceiling(&self) -> f64 {
        self.cost.ceiling()
    }

    /// Matching point of `(sx, sy)` in the other view.
    pub fn warp_point(&self, label: &PlaneLabel, sx: usize, sy: usize) -> (f64, f64) {
        let d = label.disparity_at_px(sx, sy);
        (sx as f64 + self.view.warp_sign() * d, sy as f64)
    }

    #[inline]
    pub fn raw_cost(&self, label: &PlaneLabel, sx: usize, sy: usize) -> f64 {
        self.cost.cost(sx, sy, label.disparity_at_px(sx, sy))
    }

    /// Explicit guided-filter weights over the matching window of `p`.
    pub fn guided_weights_naive(&self, px: usize, py: usize) -> WeightMap {
        weights_naive(
            self.pair.image(self.view),
            self.matching.e,
            self.matching.regression_radius,
            self.matching.window_radius,
            (px, py),
        )
    }

    /// Data term of `label` at `p` by explicit summation over the window.
    pub fn data_term_naive(&self, label: &PlaneLabel, px: usize, py: usize) -> f64 {
        let wm = self.guided_weights_naive(px, py);
        wm.rect
            .pixels()
            .map(|(sx, sy)| wm.at(sx, sy) * self.raw_cost(label, sx, sy))
            .sum()
    }

    /// Data costs of one label for every pixel of `region`, computed with a
    /// single raw-cost pass over the filtering region and box-sum filtering.
    pub fn region_data_costs(&self, label: &PlaneLabel, region: Rect) -> CostSlice {
        let bounds = self.bounds();
        debug_assert!(bounds.contains_rect(&region));
        let filter_region = region.dilate(self.matching.window_radius.max(2 * self.matching.regression_radius), &bounds);
        let mut raw = Vec::with_capacity(filter_region.area());
        for y in filter_region.y0..filter_region.y1 {
            for x in filter_region.x0..filter_region.x1 {
                raw.push(self.raw_cost(label, x, y));
            }
        }
        let aggregated = guided::aggregate(&self.guidance, &raw, &filter_region, &region);
        CostSlice {
            region,
            filter_region,
            raw,
            aggregated,
        }
    }

    /// Data term of `label` at `p` via the region path on a single pixel.
    pub fn data_term(&self, label: &PlaneLabel, px: usize, py: usize) -> f64 {
        self.region_data_costs(label, Rect::new(px, py, px + 1, py + 1)).aggregated[0]
    }

    #[inline]
    pub fn in_range(&self, label: &PlaneLabel, x: usize, y: usize) -> bool {
        let d = label.disparity_at_px(x, y);
        d >= 0.0 && d <= self.disp_max()
    }

    /// Unary potential given the already aggregated data term `phi`.
    #[inline]
    pub fn unary_from(&self, label: &PlaneLabel, x: usize, y: usize, phi: f64) -> f64 {
        if self.in_range(label, x, y) {
            phi
        } else {
            self.cost_ceiling()
        }
    }

    /// Unary potential of `label` at `p`.
    pub fn unary(&self, label: &PlaneLabel, x: usize, y: usize) -> f64 {
        if self.in_range(label, x, y) {
            self.data_term(label, x, y)
        } else {
            self.cost_ceiling()
        }
    }

    pub fn smooth_weight(&self, (px, py): (usize, usize), (qx, qy): (usize, usize)) -> f64 {
        let img = self.pair.image(self.view);
        contrast_weight(img.get(px, py), img.get(qx, qy), self.smooth.gamma)
    }

    /// Smoothness potential without the `lambda` factor.
    pub fn pairwise_term(&self, p: (usize, usize), q: (usize, usize), fp: &PlaneLabel, fq: &PlaneLabel) -> f64 {
        let w = self.smooth_weight(p, q).max(self.smooth.eps);
        w * curvature(p, q, fp, fq).min(self.smooth.tau_dis)
    }

    /// `lambda · ψ` for the forward neighbor `dir` of `p`, using cached
    /// weights.
    #[inline]
    pub(crate) fn weighted_pair(&self, p: (usize, usize), dir: usize, q: (usize, usize), fp: &PlaneLabel, fq: &PlaneLabel) -> f64 {
        let w = self.pair_weights[p][dir];
        self.smooth.lambda * w * curvature(p, q, fp, fq).min(self.smooth.tau_dis)
    }

    /// Forward neighbors of `p` inside the image, with their direction slot.
    #[inline]
    pub(crate) fn forward_neighbors(&self, x: usize, y: usize) -> impl Iterator<Item = (usize, (usize, usize))> + '_ {
        let (w, h) = (self.width() as isize, self.height() as isize);
        self.smooth
            .neighborhood
            .forward_offsets()
            .iter()
            .enumerate()
            .filter_map(move |(dir, &(dx, dy))| {
                let (qx, qy) = (x as isize + dx, y as isize + dy);
                (qx >= 0 && qy >= 0 && qx < w && qy < h).then_some((dir, (qx as usize, qy as usize)))
            })
    }

    /// `lambda · Σ ψ` over all neighbor pairs of the labeling.
    pub fn smoothness_energy<L: LabelSource + Sync>(&self, f: &L) -> f64 {
        (0..self.height())
            .into_par_iter()
            .map(|y| {
                let mut acc = 0.0;
                for x in 0..self.width() {
                    let fp = f.label(x, y);
                    for (dir, q) in self.forward_neighbors(x, y) {
                        acc += self.weighted_pair((x, y), dir, q, &fp, &f.label(q.0, q.1));
                    }
                }
                acc
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum()
    }

    /// Unary potential of every pixel under its current label.
    pub fn unary_costs(&self, f: &LabelField) -> Grid<f64> {
        let (w, h) = (self.width(), self.height());
        let rows: Vec<Vec<f64>> = (0..h)
            .into_par_iter()
            .map(|y| (0..w).map(|x| self.unary(&f.get(x, y), x, y)).collect())
            .collect();
        Grid::from_vec(w, h, rows.into_iter().flatten().collect())
    }

    /// Total energy of a labeling, recomputing every data term.
    pub fn total_energy(&self, f: &LabelField) -> Result<f64> {
        self.check_field(f)?;
        let data: f64 = self.unary_costs(f).as_slice().iter().sum();
        Ok(data + self.smoothness_energy(f))
    }

    pub fn check_field(&self, f: &LabelField) -> Result<()> {
        if f.width() != self.width() || f.height() != self.height() {
            return Err(Error::DimensionMismatch(format!(
                "label field is {}x{}, images are {}x{}",
                f.width(),
                f.height(),
                self.width(),
                self.height()
            )));
        }
        Ok(())
    }
}

#[inline]
fn contrast_weight(a: &[f64; 3], b: &[f64; 3], gamma: f64) -> f64 {
    (-color_l1(a, b) / gamma).exp()
}

/// Untruncated plane discrepancy `|d_p(f_p) − d_p(f_q)| + |d_q(f_q) − d_q(f_p)|`.
#[inline]
pub fn curvature(p: (usize, usize), q: (usize, usize), fp: &PlaneLabel, fq: &PlaneLabel) -> f64 {
    (fp.disparity_at_px(p.0, p.1) - fq.disparity_at_px(p.0, p.1)).abs()
        + (fq.disparity_at_px(q.0, q.1) - fp.disparity_at_px(q.0, q.1)).abs()
}
