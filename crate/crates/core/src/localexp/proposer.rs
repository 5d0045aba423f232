//! Candidate-label proposers for local expansions.

use rand::Rng;

use crate::image::Rect;
use crate::plane::{random_unit_vector, NormalDisparity, PlaneLabel, NZ_MIN};
use crate::stereo::LabelSource;

/// LO-RANSAC settings for the plane-fitting proposer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RansacParams {
    /// Max disparity residual (px) of an inlier.
    pub inlier_threshold: f64,
    pub hypotheses: usize,
    /// Least-squares refits on the inliers of the best hypothesis.
    pub refits: usize,
}

impl Default for RansacParams {
    fn default() -> Self {
        RansacParams {
            inlier_threshold: 1.0,
            hypotheses: 32,
            refits: 1,
        }
    }
}

/// Label of a uniformly drawn pixel of `cell`, and that pixel.
pub fn propose_propagation<L: LabelSource, R: Rng + ?Sized>(labels: &L, cell: &Rect, rng: &mut R) -> (PlaneLabel, (usize, usize)) {
    debug_assert!(!cell.is_empty());
    let x = rng.gen_range(cell.x0..cell.x1);
    let y = rng.gen_range(cell.y0..cell.y1);
    (labels.label(x, y), (x, y))
}

/// Least-squares plane `d = a·u + b·v + c` through `(u, v, d)` points;
/// `None` if the points are (nearly) collinear.
pub fn fit_plane(points: &[(f64, f64, f64)]) -> Option<PlaneLabel> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let (mut mu, mut mv, mut md) = (0.0, 0.0, 0.0);
    for &(u, v, d) in points {
        mu += u;
        mv += v;
        md += d;
    }
    mu /= n;
    mv /= n;
    md /= n;
    let (mut suu, mut suv, mut svv, mut sud, mut svd) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(u, v, d) in points {
        let (du, dv, dd) = (u - mu, v - mv, d - md);
        suu += du * du;
        suv += du * dv;
        svv += dv * dv;
        sud += du * dd;
        svd += dv * dd;
    }
    let det = suu * svv - suv * suv;
    if !(det > 1e-9 * (suu * svv).max(1e-300)) {
        return None;
    }
    let a = (sud * svv - svd * suv) / det;
    let b = (svd * suu - sud * suv) / det;
    let label = PlaneLabel::new(a, b, md - a * mu - b * mv);
    label.is_finite().then_some(label)
}

/// Plane fitted by LO-RANSAC to the current disparities of `cell`. Returns
/// `None` when the cell has fewer than three pixels or only degenerate
/// samples; callers fall back to propagation.
pub fn propose_ransac<L: LabelSource, R: Rng + ?Sized>(
    labels: &L,
    cell: &Rect,
    params: &RansacParams,
    rng: &mut R,
) -> Option<PlaneLabel> {
    let points: Vec<(f64, f64, f64)> = cell
        .pixels()
        .map(|(x, y)| (x as f64, y as f64, labels.label(x, y).disparity_at_px(x, y)))
        .collect();
    let n = points.len();
    if n < 3 {
        return None;
    }
    let residual = |l: &PlaneLabel, p: &(f64, f64, f64)| (l.disparity_at(p.0, p.1) - p.2).abs();
    let count = |l: &PlaneLabel| points.iter().filter(|p| residual(l, p) <= params.inlier_threshold).count();

    let mut best: Option<(PlaneLabel, usize)> = None;
    let mut drawn = 0;
    let max_draws = 10 * params.hypotheses.max(1);
    let mut attempts = 0;
    while drawn < params.hypotheses && attempts < max_draws {
        attempts += 1;
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        let k = rng.gen_range(0..n);
        if i == j || j == k || i == k {
            continue;
        }
        let Some(h) = fit_plane(&[points[i], points[j], points[k]]) else {
            continue;
        };
        drawn += 1;
        let c = count(&h);
        if best.is_none_or(|(_, bc)| c > bc) {
            best = Some((h, c));
        }
    }
    let (mut plane, mut support) = best?;

    for _ in 0..params.refits {
        let inliers: Vec<_> = points
            .iter()
            .copied()
            .filter(|p| residual(&plane, p) <= params.inlier_threshold)
            .collect();
        match fit_plane(&inliers) {
            Some(refit) => {
                let c = count(&refit);
                if c < support {
                    break;
                }
                plane = refit;
                support = c;
            }
            None => break,
        }
    }
    Some(plane)
}

/// Random perturbation of `label` around pixel `(u, v)`: the disparity there
/// moves by up to `r_d` (clamped to `[0, disp_max]`) and the normal by a
/// vector of length `r_n`.
pub fn perturb<R: Rng + ?Sized>(
    label: &PlaneLabel,
    (u, v): (f64, f64),
    r_d: f64,
    r_n: f64,
    disp_max: f64,
    rng: &mut R,
) -> PlaneLabel {
    let nd = label.to_normal_disparity(u, v);
    let dd = if r_d > 0.0 { rng.gen_range(-r_d..=r_d) } else { 0.0 };
    let d = (nd.d + dd).clamp(0.0, disp_max);

    let mut n = nd.n;
    if r_n > 0.0 {
        for _ in 0..64 {
            let delta = random_unit_vector(rng);
            let m = [n[0] + r_n * delta[0], n[1] + r_n * delta[1], n[2] + r_n * delta[2]];
            let len = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt();
            if len < 1e-12 {
                continue;
            }
            let sign = if m[2] < 0.0 { -1.0 } else { 1.0 };
            let m = [sign * m[0] / len, sign * m[1] / len, sign * m[2] / len];
            if m[2] >= NZ_MIN {
                n = m;
                break;
            }
        }
    }
    NormalDisparity { n, d }
        .to_plane(u, v)
        .unwrap_or(PlaneLabel::constant(d))
}
