//! Disparity-plane labels and their normal/disparity parameterization.

use rand::Rng;

use crate::error::{Error, Result};

/// Smallest allowed |n_z| for a plane normal. Normals closer to the image
/// plane describe planes with unbounded slope.
pub const NZ_MIN: f64 = 1e-4;

/// Disparity plane `d(u, v) = a·u + b·v + c`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct PlaneLabel {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl PlaneLabel {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        PlaneLabel { a, b, c }
    }

    /// Fronto-parallel plane of constant disparity.
    pub const fn constant(d: f64) -> Self {
        PlaneLabel { a: 0.0, b: 0.0, c: d }
    }

    #[inline]
    pub fn disparity_at(&self, u: f64, v: f64) -> f64 {
        self.a * u + self.b * v + self.c
    }

    #[inline]
    pub fn disparity_at_px(&self, x: usize, y: usize) -> f64 {
        self.disparity_at(x as f64, y as f64)
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite()
    }

    /// Normal/disparity form at the reference pixel `(u, v)`.
    pub fn to_normal_disparity(&self, u: f64, v: f64) -> NormalDisparity {
        let norm = (self.a * self.a + self.b * self.b + 1.0).sqrt();
        NormalDisparity {
            n: [-self.a / norm, -self.b / norm, 1.0 / norm],
            d: self.disparity_at(u, v),
        }
    }
}

/// A plane written as a unit normal plus the disparity at a reference pixel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalDisparity {
    pub n: [f64; 3],
    pub d: f64,
}

impl NormalDisparity {
    /// Converts back to plane coefficients so that the plane passes through
    /// disparity `d` at `(u, v)`.
    pub fn to_plane(&self, u: f64, v: f64) -> Result<PlaneLabel> {
        let [nx, ny, nz] = self.n;
        if nz.abs() < NZ_MIN || !nz.is_finite() {
            return Err(Error::DegenerateNormal(nz.abs()));
        }
        Ok(PlaneLabel {
            a: -nx / nz,
            b: -ny / nz,
            c: (nx * u + ny * v + nz * self.d) / nz,
        })
    }
}

/// Disparity plane induced by the world plane `a'x + b'y + c'z = h'` for a
/// rectified pair with baseline `baseline` and focal length `focal`.
pub fn plane_from_world(
    ap: f64,
    bp: f64,
    cp: f64,
    hp: f64,
    baseline: f64,
    focal: f64,
) -> Result<PlaneLabel> {
    if hp == 0.0 {
        return Err(Error::DegeneratePlane);
    }
    let s = baseline / hp;
    Ok(PlaneLabel {
        a: s * ap,
        b: s * bp,
        c: s * focal * cp,
    })
}

/// Unit vector drawn uniformly from the sphere.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v = [
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0f64),
        ];
        let n2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        if n2 <= 1e-12 || n2 > 1.0 {
            continue;
        }
        let len = n2.sqrt();
        return [v[0] / len, v[1] / len, v[2] / len];
    }
}

/// Unit normal drawn uniformly from the sphere, conditioned on
/// `|n_z| >= NZ_MIN` and flipped so that `n_z > 0`.
pub fn random_normal<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let n = random_unit_vector(rng);
        if n[2].abs() < NZ_MIN {
            continue;
        }
        return if n[2] < 0.0 { [-n[0], -n[1], -n[2]] } else { n };
    }
}

/// Random label at pixel `(u, v)`: uniform disparity in `[0, disp_max]` and a
/// uniformly random normal.
pub fn random_plane<R: Rng + ?Sized>(rng: &mut R, u: f64, v: f64, disp_max: f64) -> PlaneLabel {
    let d = rng.gen_range(0.0..=disp_max);
    let n = random_normal(rng);
    NormalDisparity { n, d }
        .to_plane(u, v)
        .expect("normal is bounded away from the image plane")
}
