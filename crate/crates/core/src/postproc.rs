//! Left-right consistency check, invalid-pixel filling and weighted median
//! filtering of the filled pixels.

use rayon::prelude::*;

use crate::image::{color_l1, ColorImage, Grid};
use crate::plane::PlaneLabel;
use crate::stereo::{LabelField, StereoPair, View};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PostParams {
    /// Max disparity disagreement (px) between the views.
    pub lr_threshold: f64,
    pub median_radius: usize,
    /// Color bandwidth of the median weights.
    pub gamma_w: f64,
}

impl Default for PostParams {
    fn default() -> Self {
        PostParams {
            lr_threshold: 1.0,
            median_radius: 17,
            gamma_w: 10.0,
        }
    }
}

/// Validity mask of `f` against the labeling `other` of the opposite view.
fn consistency_mask(f: &LabelField, other: &LabelField, threshold: f64) -> Grid<bool> {
    let shift = f.view().warp_sign();
    let (w, h) = (f.width(), f.height());
    let rows: Vec<Vec<bool>> = (0..h)
        .into_par_iter()
        .map(|y| {
            (0..w)
                .map(|x| {
                    let d = f.get(x, y).disparity_at_px(x, y);
                    let xq = (x as f64 + shift * d).round();
                    if !(xq >= 0.0 && xq < w as f64) {
                        return false;
                    }
                    let xq = xq as usize;
                    (d - other.get(xq, y).disparity_at_px(xq, y)).abs() <= threshold
                })
                .collect()
        })
        .collect();
    Grid::from_vec(w, h, rows.concat())
}

/// Validity masks of the left and right labelings. A pixel is valid when its
/// match in the other view lies inside the image and carries a disparity
/// within `threshold` of its own.
pub fn lr_check(left: &LabelField, right: &LabelField, threshold: f64) -> (Grid<bool>, Grid<bool>) {
    debug_assert_eq!(left.view(), View::Left);
    debug_assert_eq!(right.view(), View::Right);
    (
        consistency_mask(left, right, threshold),
        consistency_mask(right, left, threshold),
    )
}

/// Fills each invalid pixel with the nearest valid label to its left or
/// right on the same row, whichever extrapolates to the lower disparity.
/// Rows without valid pixels copy the nearest filled row. The flag is `true`
/// when the mask has no valid pixel at all, in which case `f` is returned
/// unchanged.
pub fn fill_invalid(f: &LabelField, mask: &Grid<bool>) -> (LabelField, bool) {
    let (w, h) = (f.width(), f.height());
    let mut out = f.clone();
    let mut row_ok = vec![false; h];
    for (y, ok) in row_ok.iter_mut().enumerate() {
        let valid: Vec<usize> = (0..w).filter(|&x| *mask.get(x, y)).collect();
        if valid.is_empty() {
            continue;
        }
        *ok = true;
        let mut next = 0;
        for x in 0..w {
            if *mask.get(x, y) {
                continue;
            }
            while next < valid.len() && valid[next] < x {
                next += 1;
            }
            let left = next.checked_sub(1).map(|i| f.get(valid[i], y));
            let right = valid.get(next).map(|&xr| f.get(xr, y));
            let pick = match (left, right) {
                (Some(l), Some(r)) => {
                    if l.disparity_at_px(x, y) <= r.disparity_at_px(x, y) {
                        l
                    } else {
                        r
                    }
                }
                (Some(l), None) => l,
                (None, Some(r)) => r,
                (None, None) => unreachable!(),
            };
            out.set(x, y, pick);
        }
    }
    if !row_ok.iter().any(|&ok| ok) {
        log::warn!("no consistent pixel in the {} view; fill skipped", f.view().name());
        return (out, true);
    }
    for y in 0..h {
        if row_ok[y] {
            continue;
        }
        let src = (1..h)
            .flat_map(|k| [y.checked_sub(k), Some(y + k).filter(|&v| v < h)])
            .flatten()
            .find(|&v| row_ok[v])
            .expect("some row is valid");
        for x in 0..w {
            let l = out.get(x, src);
            out.set(x, y, l);
        }
    }
    (out, false)
}

/// Index of the weighted median of `(value, weight)` samples: the first
/// sample in ascending value order whose cumulative weight reaches half of
/// the total.
pub fn weighted_median_index(samples: &[(f64, f64)]) -> Option<usize> {
    if samples.is_empty() {
        return None;
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| samples[a].0.total_cmp(&samples[b].0).then(a.cmp(&b)));
    let total: f64 = samples.iter().map(|s| s.1).sum();
    let mut acc = 0.0;
    for &i in &order {
        acc += samples[i].1;
        if 2.0 * acc >= total {
            return Some(i);
        }
    }
    order.last().copied()
}

/// Replaces each invalid pixel's label by the label whose extrapolated
/// disparity at that pixel is the color-weighted median over the window.
pub fn weighted_median(f: &LabelField, image: &ColorImage, mask: &Grid<bool>, radius: usize, gamma_w: f64) -> LabelField {
    let (w, h) = (f.width(), f.height());
    let rows: Vec<Vec<PlaneLabel>> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut samples = Vec::new();
            let mut labels = Vec::new();
            (0..w)
                .map(|x| {
                    if *mask.get(x, y) {
                        return f.get(x, y);
                    }
                    samples.clear();
                    labels.clear();
                    let ip = image.get(x, y);
                    for qy in y.saturating_sub(radius)..(y + radius + 1).min(h) {
                        for qx in x.saturating_sub(radius)..(x + radius + 1).min(w) {
                            let l = f.get(qx, qy);
                            let wt = (-color_l1(ip, image.get(qx, qy)) / gamma_w).exp();
                            samples.push((l.disparity_at_px(x, y), wt));
                            labels.push(l);
                        }
                    }
                    labels[weighted_median_index(&samples).expect("window is never empty")]
                })
                .collect()
        })
        .collect();
    LabelField::from_grid(f.view(), Grid::from_vec(w, h, rows.concat()))
}

/// Post-processed labelings of both views.
#[derive(Clone, Debug)]
pub struct PostResult {
    pub left: LabelField,
    pub right: LabelField,
    pub left_valid: Grid<bool>,
    pub right_valid: Grid<bool>,
}

/// Consistency check, fill and median filter on both views.
pub fn postprocess(pair: &StereoPair, left: &LabelField, right: &LabelField, params: &PostParams) -> PostResult {
    let (left_valid, right_valid) = lr_check(left, right, params.lr_threshold);
    let refine = |f: &LabelField, mask: &Grid<bool>| {
        let (filled, _) = fill_invalid(f, mask);
        weighted_median(&filled, pair.image(f.view()), mask, params.median_radius, params.gamma_w)
    };
    PostResult {
        left: refine(left, &left_valid),
        right: refine(right, &right_valid),
        left_valid,
        right_valid,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn field(view: View, w: usize, h: usize, f: impl FnMut(usize, usize) -> PlaneLabel) -> LabelField {
        LabelField::from_grid(view, Grid::from_fn(w, h, f))
    }

    #[test]
    fn consistent_constant_fields_are_valid() {
        let l = LabelField::new(View::Left, 20, 5, PlaneLabel::constant(3.0));
        let r = LabelField::new(View::Right, 20, 5, PlaneLabel::constant(3.0));
        let (ml, mr) = lr_check(&l, &r, 1.0);
        for y in 0..5 {
            for x in 0..20 {
                // left pixels x < 3 and right pixels x > 16 look outside the other image
                assert_eq!(*ml.get(x, y), x >= 3);
                assert_eq!(*mr.get(x, y), x < 17);
            }
        }
    }

    #[test]
    fn disagreement_invalidates() {
        let l = LabelField::new(View::Left, 20, 1, PlaneLabel::constant(5.0));
        let r = LabelField::new(View::Right, 20, 1, PlaneLabel::constant(9.0));
        let (ml, _) = lr_check(&l, &r, 1.0);
        assert!(ml.as_slice().iter().all(|&v| !v));
    }

    #[test]
    fn all_valid_fill_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = field(View::Left, 9, 7, |_, _| PlaneLabel::new(rng.gen(), rng.gen(), rng.gen()));
        let mask = Grid::new(9, 7, true);
        let (g, warn) = fill_invalid(&f, &mask);
        assert!(!warn);
        assert_eq!(g, f);
        assert_eq!(weighted_median(&g, &Grid::new(9, 7, [0.0; 3]), &mask, 3, 10.0), f);
    }

    #[test]
    fn fill_prefers_lower_disparity() {
        let a = PlaneLabel::constant(4.0);
        let b = PlaneLabel::constant(7.0);
        let f = field(View::Left, 5, 1, |x, _| if x < 2 { a } else if x == 2 { PlaneLabel::constant(50.0) } else { b });
        let mask = Grid::from_fn(5, 1, |x, _| x != 2);
        assert_eq!(fill_invalid(&f, &mask).0.get(2, 0), a);
        // swapped sides
        let f = field(View::Left, 5, 1, |x, _| if x < 2 { b } else { a });
        assert_eq!(fill_invalid(&f, &mask).0.get(2, 0), a);
    }

    #[test]
    fn fill_uses_extrapolated_disparity() {
        // left plane is lower at its own pixel but steeply rising
        let l = PlaneLabel::new(3.0, 0.0, 2.0 - 3.0 * 1.0);
        let r = PlaneLabel::constant(4.0);
        let f = field(View::Left, 5, 1, |x, _| if x <= 1 { l } else { r });
        let mask = Grid::from_fn(5, 1, |x, _| x != 2);
        assert_eq!(fill_invalid(&f, &mask).0.get(2, 0), r);
    }

    #[test]
    fn leading_run_takes_right_label() {
        let b = PlaneLabel::constant(6.0);
        let f = field(View::Left, 6, 1, |x, _| if x < 3 { PlaneLabel::constant(0.0) } else { b });
        let mask = Grid::from_fn(6, 1, |x, _| x >= 3);
        let g = fill_invalid(&f, &mask).0;
        assert!((0..3).all(|x| g.get(x, 0) == b));
    }

    #[test]
    fn empty_rows_copy_nearest_row() {
        let f = field(View::Left, 4, 4, |_, y| PlaneLabel::constant(y as f64));
        let mask = Grid::from_fn(4, 4, |_, y| y == 2);
        let (g, warn) = fill_invalid(&f, &mask);
        assert!(!warn);
        for y in 0..4 {
            for x in 0..4 {
                assert_eq!(g.get(x, y), PlaneLabel::constant(2.0));
            }
        }
    }

    #[test]
    fn no_valid_pixels_warns() {
        let f = LabelField::new(View::Left, 3, 3, PlaneLabel::constant(1.0));
        let (g, warn) = fill_invalid(&f, &Grid::new(3, 3, false));
        assert!(warn);
        assert_eq!(g, f);
    }

    #[test]
    fn filled_labels_come_from_valid_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = field(View::Left, 30, 8, |_, _| PlaneLabel::new(rng.gen_range(-0.1..0.1), 0.0, rng.gen_range(0.0..20.0)));
        let mask = Grid::from_fn(30, 8, |_, _| rng.gen_bool(0.3));
        let (g, _) = fill_invalid(&f, &mask);
        for y in 0..8 {
            let valid: Vec<_> = (0..30).filter(|&x| *mask.get(x, y)).map(|x| f.get(x, y)).collect();
            if valid.is_empty() {
                continue;
            }
            for x in 0..30 {
                assert!(valid.contains(&g.get(x, y)));
            }
        }
    }

    #[test]
    fn median_examples() {
        let s = [(1.0, 1.0), (2.0, 1.0), (100.0, 1.0)];
        assert_eq!(weighted_median_index(&s), Some(1));
        let scaled: Vec<_> = s.iter().map(|&(v, w)| (v, 8.0 * w)).collect();
        assert_eq!(weighted_median_index(&scaled), Some(1));
        assert_eq!(weighted_median_index(&[(5.0, 1.0), (1.0, 3.0)]), Some(1));
        assert_eq!(weighted_median_index(&[]), None);
    }

    #[test]
    fn median_is_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let n = rng.gen_range(1..30);
            let s: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen_range(0.0..10.0), rng.gen_range(0.01..1.0))).collect();
            let k = 2f64.powi(rng.gen_range(-8..8));
            let t: Vec<_> = s.iter().map(|&(v, w)| (v, k * w)).collect();
            assert_eq!(weighted_median_index(&s), weighted_median_index(&t));
        }
    }

    #[test]
    fn median_filters_outlier_label() {
        let good = PlaneLabel::constant(5.0);
        let f = field(View::Left, 7, 7, |x, y| if (x, y) == (3, 3) { PlaneLabel::constant(40.0) } else { good });
        let mask = Grid::from_fn(7, 7, |x, y| (x, y) != (3, 3));
        let img = Grid::new(7, 7, [100.0; 3]);
        let g = weighted_median(&f, &img, &mask, 2, 10.0);
        assert_eq!(g.get(3, 3), good);
        for (x, y) in mask.bounds().pixels() {
            if (x, y) != (3, 3) {
                assert_eq!(g.get(x, y), f.get(x, y));
            }
        }
    }
}
