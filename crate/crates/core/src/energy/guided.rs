//! Guided-filter support weights.
//!
//! The weight between a window center `p` and a support pixel `s` is
//!
//! ```text
//! w(p, s) = 1/|W'|² · Σ_{k : p, s ∈ W'_k} (1 + (I_p − μ_k)ᵀ (Σ_k + e·Id)⁻¹ (I_s − μ_k))
//! ```
//!
//! with colors scaled to `[0, 1]`, and `μ_k`, `Σ_k` the statistics of the
//! regression window `W'_k` clipped at the image border. `|W'|` is always the
//! nominal window area. Aggregating a cost map with these weights is the
//! guided filter with the map as the filtering input, which is how
//! [`aggregate`] evaluates it in time linear in the region area.

use crate::image::{ColorImage, Grid, Rect};

pub(crate) type Sym3 = [f64; 6];

/// Inverse of a symmetric 3×3 matrix stored as `[xx, xy, xz, yy, yz, zz]`.
pub(crate) fn sym3_inverse(m: &Sym3) -> Sym3 {
    let [a, b, c, d, e, f] = *m;
    let c00 = d * f - e * e;
    let c01 = c * e - b * f;
    let c02 = b * e - c * d;
    let c11 = a * f - c * c;
    let c12 = b * c - a * e;
    let c22 = a * d - b * b;
    let det = a * c00 + b * c01 + c * c02;
    let inv = 1.0 / det;
    [c00 * inv, c01 * inv, c02 * inv, c11 * inv, c12 * inv, c22 * inv]
}

#[inline]
pub(crate) fn sym3_mul(m: &Sym3, v: &[f64; 3]) -> [f64; 3] {
    [
        m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
        m[1] * v[0] + m[3] * v[1] + m[4] * v[2],
        m[2] * v[0] + m[4] * v[1] + m[5] * v[2],
    ]
}

#[inline]
fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn normalized(c: &[f64; 3]) -> [f64; 3] {
    [c[0] / 255.0, c[1] / 255.0, c[2] / 255.0]
}

/// Window `[c - r, c + r]` clipped to `[0, n)`.
#[inline]
fn span(c: usize, r: usize, n: usize) -> (usize, usize) {
    (c.saturating_sub(r), (c + r + 1).min(n))
}

/// Per-pixel regression-window statistics of the guidance image.
#[derive(Clone, Debug)]
pub struct GuidanceStats {
    radius: usize,
    /// Guidance colors scaled to `[0, 1]`.
    guide: Grid<[f64; 3]>,
    mean: Grid<[f64; 3]>,
    inv_cov: Grid<Sym3>,
    count: Grid<f64>,
}

impl GuidanceStats {
    /// Computes window means and regularized inverse covariances with
    /// summed-area tables.
    pub fn new(image: &ColorImage, radius: usize, e: f64) -> Self {
        let (w, h) = (image.width(), image.height());
        let guide = image.map(normalized);
        // 3 first moments + 6 second moments
        let table = SummedArea::<9>::build(&guide.bounds(), |x, y| {
            let c = guide[(x, y)];
            [
                c[0],
                c[1],
                c[2],
                c[0] * c[0],
                c[0] * c[1],
                c[0] * c[2],
                c[1] * c[1],
                c[1] * c[2],
                c[2] * c[2],
            ]
        });
        let mut mean = Grid::new(w, h, [0.0; 3]);
        let mut inv_cov = Grid::new(w, h, [0.0; 6]);
        let mut count = Grid::new(w, h, 0.0);
        for y in 0..h {
            let (ya, yb) = span(y, radius, h);
            for x in 0..w {
                let (xa, xb) = span(x, radius, w);
                let n = ((xb - xa) * (yb - ya)) as f64;
                let s = table.sum(&Rect::new(xa, ya, xb, yb));
                let mu = [s[0] / n, s[1] / n, s[2] / n];
                let cov = [
                    s[3] / n - mu[0] * mu[0] + e,
                    s[4] / n - mu[0] * mu[1],
                    s[5] / n - mu[0] * mu[2],
                    s[6] / n - mu[1] * mu[1] + e,
                    s[7] / n - mu[1] * mu[2],
                    s[8] / n - mu[2] * mu[2] + e,
                ];
                mean[(x, y)] = mu;
                inv_cov[(x, y)] = sym3_inverse(&cov);
                count[(x, y)] = n;
            }
        }
        GuidanceStats {
            radius,
            guide,
            mean,
            inv_cov,
            count,
        }
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Nominal regression window area `|W'|`.
    pub fn window_area(&self) -> f64 {
        let d = (2 * self.radius + 1) as f64;
        d * d
    }

    pub fn bounds(&self) -> Rect {
        self.guide.bounds()
    }
}

/// Summed-area table over a rectangle with `N` channels.
pub(crate) struct SummedArea<const N: usize> {
    rect: Rect,
    stride: usize,
    data: Vec<[f64; N]>,
}

impl<const N: usize> SummedArea<N> {
    pub(crate) fn build(rect: &Rect, mut value: impl FnMut(usize, usize) -> [f64; N]) -> Self {
        let stride = rect.width() + 1;
        let mut data = vec![[0.0; N]; stride * (rect.height() + 1)];
        for (j, y) in (rect.y0..rect.y1).enumerate() {
            let mut run = [0.0; N];
            for (i, x) in (rect.x0..rect.x1).enumerate() {
                let v = value(x, y);
                for c in 0..N {
                    run[c] += v[c];
                }
                let above = data[j * stride + i + 1];
                let cell = &mut data[(j + 1) * stride + i + 1];
                for c in 0..N {
                    cell[c] = above[c] + run[c];
                }
            }
        }
        SummedArea {
            rect: *rect,
            stride,
            data,
        }
    }

    /// Sum over `r`, which must lie inside the table's rectangle.
    #[inline]
    pub(crate) fn sum(&self, r: &Rect) -> [f64; N] {
        debug_assert!(self.rect.contains_rect(r));
        let (i0, i1) = (r.x0 - self.rect.x0, r.x1 - self.rect.x0);
        let (j0, j1) = (r.y0 - self.rect.y0, r.y1 - self.rect.y0);
        let a = &self.data[j0 * self.stride + i0];
        let b = &self.data[j0 * self.stride + i1];
        let c = &self.data[j1 * self.stride + i0];
        let d = &self.data[j1 * self.stride + i1];
        let mut out = [0.0; N];
        for k in 0..N {
            out[k] = d[k] - b[k] - c[k] + a[k];
        }
        out
    }
}

/// Aggregates the cost map `raw` (defined on `raw_rect`) with the guided
/// filter weights, producing one value per pixel of `region`.
///
/// `raw_rect` must contain `region` dilated by twice the regression radius
/// (clipped to the image).
pub(crate) fn aggregate(stats: &GuidanceStats, raw: &[f64], raw_rect: &Rect, region: &Rect) -> Vec<f64> {
    let bounds = stats.bounds();
    let r = stats.radius;
    let centers = region.dilate(r, &bounds);
    debug_assert!(raw_rect.contains_rect(&region.dilate(2 * r, &bounds)));

    // Σ ρ and Σ I·ρ over every regression window that touches `region`.
    let moments = SummedArea::<4>::build(raw_rect, |x, y| {
        let v = raw[raw_rect.offset(x, y)];
        let g = stats.guide[(x, y)];
        [v, g[0] * v, g[1] * v, g[2] * v]
    });

    // Per-window linear model, scaled by the clipped window size.
    let mut coeffs = Vec::with_capacity(centers.area());
    for (x, y) in centers.pixels() {
        let (xa, xb) = span(x, r, bounds.x1);
        let (ya, yb) = span(y, r, bounds.y1);
        let s = moments.sum(&Rect::new(xa, ya, xb, yb));
        let n = stats.count[(x, y)];
        let mu = &stats.mean[(x, y)];
        let mean_p = s[0] / n;
        let cov = [
            s[1] / n - mu[0] * mean_p,
            s[2] / n - mu[1] * mean_p,
            s[3] / n - mu[2] * mean_p,
        ];
        let a = sym3_mul(&stats.inv_cov[(x, y)], &cov);
        let b = mean_p - dot(&a, mu);
        coeffs.push([n * a[0], n * a[1], n * a[2], n * b]);
    }
    let window_sums = SummedArea::<4>::build(&centers, |x, y| coeffs[centers.offset(x, y)]);

    let norm = 1.0 / (stats.window_area() * stats.window_area());
    region
        .pixels()
        .map(|(x, y)| {
            let (xa, xb) = span(x, r, bounds.x1);
            let (ya, yb) = span(y, r, bounds.y1);
            let s = window_sums.sum(&Rect::new(xa, ya, xb, yb));
            let g = &stats.guide[(x, y)];
            norm * (s[0] * g[0] + s[1] * g[1] + s[2] * g[2] + s[3])
        })
        .collect()
}

/// Explicit weight map around one pixel.
#[derive(Clone, Debug)]
pub struct WeightMap {
    /// Support window `W_p` clipped to the image.
    pub rect: Rect,
    pub weights: Vec<f64>,
}

impl WeightMap {
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.weights[self.rect.offset(x, y)]
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Direct evaluation of every weight `w(p, s)`, `s ∈ W_p`. Window statistics
/// are recomputed from the pixels instead of taken from [`GuidanceStats`].
pub fn weights_naive(
    image: &ColorImage,
    e: f64,
    regression_radius: usize,
    window_radius: usize,
    (px, py): (usize, usize),
) -> WeightMap {
    let (w, h) = (image.width(), image.height());
    let rr = regression_radius;
    let guide = |x: usize, y: usize| normalized(image.get(x, y));
    let ip = guide(px, py);

    struct Window {
        rect: Rect,
        mean: [f64; 3],
        inv: Sym3,
    }
    let (kxa, kxb) = span(px, rr, w);
    let (kya, kyb) = span(py, rr, h);
    let mut windows = Vec::new();
    for ky in kya..kyb {
        for kx in kxa..kxb {
            let (xa, xb) = span(kx, rr, w);
            let (ya, yb) = span(ky, rr, h);
            let rect = Rect::new(xa, ya, xb, yb);
            let n = rect.area() as f64;
            let mut mean = [0.0; 3];
            for (x, y) in rect.pixels() {
                let c = guide(x, y);
                for i in 0..3 {
                    mean[i] += c[i] / n;
                }
            }
            let mut cov = [0.0; 6];
            for (x, y) in rect.pixels() {
                let c = guide(x, y);
                let d = [c[0] - mean[0], c[1] - mean[1], c[2] - mean[2]];
                cov[0] += d[0] * d[0] / n;
                cov[1] += d[0] * d[1] / n;
                cov[2] += d[0] * d[2] / n;
                cov[3] += d[1] * d[1] / n;
                cov[4] += d[1] * d[2] / n;
                cov[5] += d[2] * d[2] / n;
            }
            cov[0] += e;
            cov[3] += e;
            cov[5] += e;
            windows.push(Window {
                rect,
                mean,
                inv: sym3_inverse(&cov),
            });
        }
    }

    let (sxa, sxb) = span(px, window_radius, w);
    let (sya, syb) = span(py, window_radius, h);
    let rect = Rect::new(sxa, sya, sxb, syb);
    let area = ((2 * rr + 1) * (2 * rr + 1)) as f64;
    let norm = 1.0 / (area * area);
    let weights = rect
        .pixels()
        .map(|(sx, sy)| {
            let is = guide(sx, sy);
            let mut acc = 0.0;
            for win in windows.iter().filter(|win| win.rect.contains(sx, sy)) {
                let dp = [ip[0] - win.mean[0], ip[1] - win.mean[1], ip[2] - win.mean[2]];
                let ds = [is[0] - win.mean[0], is[1] - win.mean[1], is[2] - win.mean[2]];
                acc += 1.0 + dot(&dp, &sym3_mul(&win.inv, &ds));
            }
            norm * acc
        })
        .collect();
    WeightMap { rect, weights }
}
