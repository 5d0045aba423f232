//! Synthetic piecewise-planar stereo scenes with exact ground truth.
//!
//! A scene is a stack of textured world planes seen by a rectified camera
//! pair. Each plane covers a support region of the left image and carries
//! a texture painted in left-image coordinates, so both views sample the
//! same surface point at corresponding pixels. The nearest plane wins where
//! supports overlap.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::image::{ColorImage, GrayImage, Grid};
use crate::plane::{plane_from_world, PlaneLabel};
use crate::stereo::{LabelField, StereoPair, View};

/// Region of the left image covered by a plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Support {
    All,
    /// Half-open box `[x0, x1) × [y0, y1)`.
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
    Disc { cx: f64, cy: f64, r: f64 },
}

impl Support {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Support::All => true,
            Support::Rect { x0, y0, x1, y1 } => x >= x0 && x < x1 && y >= y0 && y < y1,
            Support::Disc { cx, cy, r } => (x - cx).powi(2) + (y - cy).powi(2) <= r * r,
        }
    }
}

/// Smooth aperiodic color texture: two octaves of lattice value noise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Texture {
    pub seed: u64,
    pub base: [f64; 3],
    /// Peak deviation from `base` per channel.
    pub amplitude: f64,
    /// Lattice spacing (px) of the coarse octave; the fine octave uses a
    /// third of it.
    pub scale: f64,
}

impl Texture {
    pub fn sample(&self, x: f64, y: f64) -> [f64; 3] {
        let mut out = self.base;
        for (c, o) in out.iter_mut().enumerate() {
            let coarse = value_noise(self.seed, c as u64, x / self.scale, y / self.scale);
            let fine = value_noise(self.seed ^ 0xabcd, c as u64, 3.0 * x / self.scale, 3.0 * y / self.scale);
            *o = (*o + self.amplitude * (0.6 * coarse + 0.4 * fine)).clamp(0.0, 255.0);
        }
        out
    }
}

fn hash(seed: u64, c: u64, ix: i64, iy: i64) -> f64 {
    let mut z = seed ^ c.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for v in [ix as u64, iy as u64] {
        z = (z ^ v).wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

/// Value noise in `[-1, 1]` with smoothstep interpolation.
fn value_noise(seed: u64, c: u64, x: f64, y: f64) -> f64 {
    let (fx, fy) = (x.floor(), y.floor());
    let (ix, iy) = (fx as i64, fy as i64);
    let s = |t: f64| t * t * (3.0 - 2.0 * t);
    let (tx, ty) = (s(x - fx), s(y - fy));
    let v00 = hash(seed, c, ix, iy);
    let v10 = hash(seed, c, ix + 1, iy);
    let v01 = hash(seed, c, ix, iy + 1);
    let v11 = hash(seed, c, ix + 1, iy + 1);
    let top = v00 + tx * (v10 - v00);
    let bottom = v01 + tx * (v11 - v01);
    top + ty * (bottom - top)
}

/// World plane `a'x + b'y + c'z = h'` with its left-image support and texture.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScenePlane {
    pub world: [f64; 4],
    pub support: Support,
    pub texture: Texture,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub disp_max: f64,
    pub baseline: f64,
    pub focal: f64,
    pub planes: Vec<ScenePlane>,
    /// Uniform intensity noise amplitude added to both images.
    pub noise: f64,
    pub seed: u64,
}

/// Rendered pair with ground truth for both views.
#[derive(Clone, Debug)]
pub struct SyntheticScene {
    pub left: ColorImage,
    pub right: ColorImage,
    pub disp_max: f64,
    pub gt_left: LabelField,
    pub gt_right: LabelField,
    /// Pixels whose surface point is visible in the other view.
    pub nonocc_left: Grid<bool>,
    pub nonocc_right: Grid<bool>,
}

impl SyntheticScene {
    pub fn pair(&self) -> Result<StereoPair> {
        StereoPair::new(self.left.clone(), self.right.clone(), self.disp_max)
    }

    pub fn gt_disparity(&self, view: View) -> GrayImage {
        match view {
            View::Left => self.gt_left.disparity_map(),
            View::Right => self.gt_right.disparity_map(),
        }
    }

    pub fn nonocc(&self, view: View) -> &Grid<bool> {
        match view {
            View::Left => &self.nonocc_left,
            View::Right => &self.nonocc_right,
        }
    }
}

impl SceneSpec {
    /// Disparity plane of each scene plane in left-image pixel coordinates
    /// (origin at the top-left pixel).
    pub fn left_labels(&self) -> Result<Vec<PlaneLabel>> {
        let (cu, cv) = ((self.width as f64 - 1.0) / 2.0, (self.height as f64 - 1.0) / 2.0);
        self.planes
            .iter()
            .map(|p| {
                let [a, b, c, h] = p.world;
                // image coordinates relative to the principal point
                let l = plane_from_world(a, b, c, h, self.baseline, self.focal)?;
                Ok(PlaneLabel::new(l.a, l.b, l.c - l.a * cu - l.b * cv))
            })
            .collect()
    }

    /// Visible plane and its left-image x at left pixel column `xl`.
    fn visible_left(&self, labels: &[PlaneLabel], xl: f64, y: f64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (k, (p, l)) in self.planes.iter().zip(labels).enumerate() {
            if p.support.contains(xl, y) {
                let d = l.disparity_at(xl, y);
                if best.is_none_or(|(_, bd)| d > bd) {
                    best = Some((k, d));
                }
            }
        }
        best.map(|(k, _)| k)
    }

    /// Visible plane and the left-image x of the surface point seen at right
    /// pixel column `xr`.
    fn visible_right(&self, labels: &[PlaneLabel], xr: f64, y: f64) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for (k, (p, l)) in self.planes.iter().zip(labels).enumerate() {
            // xl - d(xl) = xr
            let xl = (xr + l.b * y + l.c) / (1.0 - l.a);
            if p.support.contains(xl, y) {
                let d = l.disparity_at(xl, y);
                if best.is_none_or(|(_, _, bd)| d > bd) {
                    best = Some((k, xl, d));
                }
            }
        }
        best.map(|(k, xl, _)| (k, xl))
    }

    pub fn render(&self) -> Result<SyntheticScene> {
        let labels = self.left_labels()?;
        for l in &labels {
            debug_assert!(l.a < 1.0, "plane folds over in the right view");
        }
        let (w, h) = (self.width, self.height);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut noisy = |c: [f64; 3]| {
            if self.noise > 0.0 {
                c.map(|v| (v + rng.gen_range(-self.noise..=self.noise)).clamp(0.0, 255.0))
            } else {
                c
            }
        };

        let fill = PlaneLabel::constant(0.0);
        let mut left = Grid::new(w, h, [0.0; 3]);
        let mut gt_left = Grid::new(w, h, fill);
        let mut nonocc_left = Grid::new(w, h, false);
        for y in 0..h {
            for x in 0..w {
                let (xf, yf) = (x as f64, y as f64);
                let Some(k) = self.visible_left(&labels, xf, yf) else {
                    continue;
                };
                *left.get_mut(x, y) = noisy(self.planes[k].texture.sample(xf, yf));
                *gt_left.get_mut(x, y) = labels[k];
                let xr = xf - labels[k].disparity_at(xf, yf);
                *nonocc_left.get_mut(x, y) =
                    xr >= 0.0 && xr <= (w - 1) as f64 && self.visible_right(&labels, xr, yf).is_some_and(|(j, _)| j == k);
            }
        }

        let mut right = Grid::new(w, h, [0.0; 3]);
        let mut gt_right = Grid::new(w, h, fill);
        let mut nonocc_right = Grid::new(w, h, false);
        for y in 0..h {
            for x in 0..w {
                let (xf, yf) = (x as f64, y as f64);
                let Some((k, xl)) = self.visible_right(&labels, xf, yf) else {
                    continue;
                };
                *right.get_mut(x, y) = noisy(self.planes[k].texture.sample(xl, yf));
                let l = labels[k];
                // same surface expressed in right-image coordinates
                let s = 1.0 / (1.0 - l.a);
                *gt_right.get_mut(x, y) = PlaneLabel::new(l.a * s, l.b * s, l.c * s);
                *nonocc_right.get_mut(x, y) =
                    xl >= 0.0 && xl <= (w - 1) as f64 && self.visible_left(&labels, xl, yf) == Some(k);
            }
        }

        Ok(SyntheticScene {
            left,
            right,
            disp_max: self.disp_max,
            gt_left: LabelField::from_grid(View::Left, gt_left),
            gt_right: LabelField::from_grid(View::Right, gt_right),
            nonocc_left,
            nonocc_right,
        })
    }
}

/// Slanted textured background, a slanted box and a near disc, each with
/// its own dominant color, plus uniform noise of ±8 levels. Disparities stay
/// within roughly `[2, 20]` for images up to 200 px wide.
pub fn three_plane_scene(width: usize, height: usize, seed: u64) -> SceneSpec {
    let (w, h) = (width as f64, height as f64);
    let tex = |k: u64, base: [f64; 3]| Texture {
        seed: seed.wrapping_mul(31).wrapping_add(k),
        base,
        amplitude: 60.0,
        scale: 4.0,
    };
    SceneSpec {
        width,
        height,
        disp_max: 24.0,
        baseline: 1.0,
        focal: 100.0,
        planes: vec![
            ScenePlane {
                world: [0.5, 0.25, 1.0, 16.0],
                support: Support::All,
                texture: tex(0, [70.0, 90.0, 160.0]),
            },
            ScenePlane {
                world: [-0.4, 0.25, 1.0, 8.0],
                support: Support::Rect {
                    x0: 0.12 * w,
                    y0: 0.15 * h,
                    x1: 0.55 * w,
                    y1: 0.8 * h,
                },
                texture: tex(1, [190.0, 80.0, 60.0]),
            },
            ScenePlane {
                world: [0.15, -0.2, 1.0, 5.5],
                support: Support::Disc {
                    cx: 0.72 * w,
                    cy: 0.5 * h,
                    r: 0.22 * h.min(w),
                },
                texture: tex(2, [80.0, 170.0, 90.0]),
            },
        ],
        noise: 8.0,
        seed,
    }
}

/// Scene dominated by one large slanted plane with faint texture, in front
/// of a strongly textured background strip.
pub fn weak_texture_scene(width: usize, height: usize, seed: u64) -> SceneSpec {
    let (w, h) = (width as f64, height as f64);
    SceneSpec {
        width,
        height,
        disp_max: 24.0,
        baseline: 1.0,
        focal: 100.0,
        planes: vec![
            ScenePlane {
                world: [0.5, 0.2, 1.0, 14.0],
                support: Support::All,
                texture: Texture {
                    seed: seed.wrapping_mul(31),
                    base: [100.0, 110.0, 120.0],
                    amplitude: 70.0,
                    scale: 4.0,
                },
            },
            ScenePlane {
                world: [0.5, 0.3, 1.0, 7.0],
                support: Support::Rect {
                    x0: 0.2 * w,
                    y0: 0.1 * h,
                    x1: 0.9 * w,
                    y1: 0.9 * h,
                },
                texture: Texture {
                    seed: seed.wrapping_mul(31).wrapping_add(1),
                    base: [160.0, 150.0, 140.0],
                    amplitude: 1.5,
                    scale: 12.0,
                },
            },
        ],
        noise: 0.0,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disparities_are_in_range() {
        for spec in [three_plane_scene(96, 72, 1), three_plane_scene(200, 150, 2), weak_texture_scene(96, 72, 3)] {
            let s = spec.render().unwrap();
            for view in [View::Left, View::Right] {
                for &d in s.gt_disparity(view).as_slice() {
                    assert!(d > 1.0 && d < spec.disp_max - 1.0, "{d}");
                }
            }
        }
    }

    #[test]
    fn non_occluded_pixels_correspond() {
        let spec = three_plane_scene(96, 72, 4);
        let s = spec.render().unwrap();
        let (dl, dr) = (s.gt_disparity(View::Left), s.gt_disparity(View::Right));
        let mut checked = 0;
        for y in 0..72 {
            for x in 0..96 {
                if !*s.nonocc_left.get(x, y) {
                    continue;
                }
                let d = *dl.get(x, y);
                let xr = x as f64 - d;
                // right-view disparity at the matching point agrees
                let (x0, t) = (xr.floor() as usize, xr - xr.floor());
                if x0 + 1 < 96 && *s.nonocc_right.get(x0, y) && s.gt_right.get(x0, y) == s.gt_right.get(x0 + 1, y) {
                    let dri = (1.0 - t) * dr.get(x0, y) + t * dr.get(x0 + 1, y);
                    assert!((dri - d).abs() < 1e-6, "({x}, {y}): {d} vs {dri}");
                    checked += 1;
                }
            }
        }
        assert!(checked > 96 * 72 / 2);
    }

    #[test]
    fn colors_agree_at_integer_correspondences() {
        // fronto-parallel single plane at integer disparity
        let spec = SceneSpec {
            width: 40,
            height: 10,
            disp_max: 24.0,
            baseline: 1.0,
            focal: 100.0,
            planes: vec![ScenePlane {
                world: [0.0, 0.0, 1.0, 20.0],
                support: Support::All,
                texture: three_plane_scene(40, 10, 0).planes[0].texture,
            }],
            noise: 0.0,
            seed: 0,
        };
        let s = spec.render().unwrap();
        for y in 0..10 {
            for x in 5..40 {
                assert_eq!(s.left.get(x, y), s.right.get(x - 5, y));
            }
        }
        assert!((0..5).all(|x| !*s.nonocc_left.get(x, 0)));
        assert!((5..40).all(|x| *s.nonocc_left.get(x, 0)));
    }

    #[test]
    fn occlusions_exist_and_are_minor() {
        let s = three_plane_scene(96, 72, 5).render().unwrap();
        let frac = s.nonocc_left.as_slice().iter().filter(|&&v| v).count() as f64 / (96.0 * 72.0);
        assert!(frac > 0.7 && frac < 0.99, "{frac}");
    }

    #[test]
    fn texture_is_deterministic_and_varied() {
        let t = three_plane_scene(10, 10, 6).planes[0].texture;
        assert_eq!(t.sample(3.3, 4.4), t.sample(3.3, 4.4));
        let vals: Vec<f64> = (0..50).map(|i| t.sample(i as f64, 0.0)[0]).collect();
        let spread = vals.iter().cloned().fold(f64::MIN, f64::max) - vals.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread > 40.0, "{spread}");
    }
}
