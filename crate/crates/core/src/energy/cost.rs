//! Per-pixel raw matching costs.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::params::MatchParams;
use crate::stereo::{StereoPair, View};

/// Raw dissimilarity of a reference-view pixel matched at a given disparity.
///
/// Implementations must be bounded by [`MatchingCost::ceiling`] from above
/// and by zero from below.
pub trait MatchingCost: Send + Sync {
    fn cost(&self, x: usize, y: usize, disparity: f64) -> f64;

    fn ceiling(&self) -> f64;
}

/// Truncated color + gradient dissimilarity with linear interpolation in the
/// other view.
pub struct PhotoConsistency {
    pair: Arc<StereoPair>,
    view: View,
    alpha: f64,
    tau_col: f64,
    tau_grad: f64,
}

impl PhotoConsistency {
    pub fn new(pair: Arc<StereoPair>, view: View, params: &MatchParams) -> Self {
        PhotoConsistency {
            pair,
            view,
            alpha: params.alpha,
            tau_col: params.tau_col,
            tau_grad: params.tau_grad,
        }
    }
}

impl MatchingCost for PhotoConsistency {
    fn cost(&self, x: usize, y: usize, disparity: f64) -> f64 {
        let w = self.pair.width();
        let xs = x as f64 + self.view.warp_sign() * disparity;
        if !(xs >= 0.0 && xs <= (w - 1) as f64) {
            return self.ceiling();
        }
        let reference = self.pair.image(self.view);
        let other = self.pair.image(self.view.other());
        let g_ref = self.pair.gradient(self.view);
        let g_other = self.pair.gradient(self.view.other());

        let x0 = (xs.floor() as usize).min(w - 1);
        let x1 = (x0 + 1).min(w - 1);
        let t = xs - x0 as f64;
        let c0 = other.get(x0, y);
        let c1 = other.get(x1, y);
        let c = reference.get(x, y);
        let mut col = 0.0;
        for ch in 0..3 {
            let v = c0[ch] + t * (c1[ch] - c0[ch]);
            col += (c[ch] - v).abs();
        }
        let g = g_other[(x0, y)] + t * (g_other[(x1, y)] - g_other[(x0, y)]);
        let grad = (g_ref[(x, y)] - g).abs();
        (1.0 - self.alpha) * col.min(self.tau_col) + self.alpha * grad.min(self.tau_grad)
    }

    fn ceiling(&self) -> f64 {
        (1.0 - self.alpha) * self.tau_col + self.alpha * self.tau_grad
    }
}

/// Precomputed cost volume sampled at integer disparities, interpolated
/// linearly in between. Disparities outside `[0, ndisp - 1]` score the
/// volume's maximum.
#[derive(Clone, Debug, PartialEq)]
pub struct CostVolume {
    width: usize,
    height: usize,
    ndisp: usize,
    /// Disparity-major: `data[(d * height + y) * width + x]`.
    data: Vec<f32>,
    max: f64,
}

impl CostVolume {
    pub fn new(width: usize, height: usize, ndisp: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height * ndisp {
            return Err(Error::CostVolume(format!(
                "expected {} values, got {}",
                width * height * ndisp,
                data.len()
            )));
        }
        if ndisp == 0 {
            return Err(Error::CostVolume("ndisp must be positive".into()));
        }
        if data.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::CostVolume("costs must be finite and non-negative".into()));
        }
        let max = data.iter().fold(0.0f32, |m, v| m.max(*v)) as f64;
        Ok(CostVolume {
            width,
            height,
            ndisp,
            data,
            max,
        })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.ndisp)
    }

    #[inline]
    fn at(&self, x: usize, y: usize, d: usize) -> f64 {
        self.data[(d * self.height + y) * self.width + x] as f64
    }

    /// Reads the flat binary layout: width, height, ndisp as little-endian
    /// `u32`, followed by `ndisp` planes of little-endian `f32`.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut r = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
        let mut header = [0u8; 12];
        r.read_exact(&mut header)
            .map_err(|_| Error::CostVolume("truncated header".into()))?;
        let word = |i: usize| u32::from_le_bytes(header[4 * i..4 * i + 4].try_into().unwrap()) as usize;
        let (width, height, ndisp) = (word(0), word(1), word(2));
        let n = width
            .checked_mul(height)
            .and_then(|v| v.checked_mul(ndisp))
            .ok_or_else(|| Error::CostVolume("dimensions overflow".into()))?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
        if bytes.len() != 4 * n {
            return Err(Error::CostVolume(format!(
                "payload has {} bytes, expected {}",
                bytes.len(),
                4 * n
            )));
        }
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        CostVolume::new(width, height, ndisp, data)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
        let mut emit = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(path, e));
        for v in [self.width, self.height, self.ndisp] {
            emit(&(v as u32).to_le_bytes())?;
        }
        for v in &self.data {
            emit(&v.to_le_bytes())?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

impl MatchingCost for CostVolume {
    fn cost(&self, x: usize, y: usize, disparity: f64) -> f64 {
        let top = (self.ndisp - 1) as f64;
        if !(disparity >= 0.0 && disparity <= top) {
            return self.max;
        }
        let d0 = disparity.floor() as usize;
        let d1 = (d0 + 1).min(self.ndisp - 1);
        let t = disparity - d0 as f64;
        let c0 = self.at(x, y, d0);
        c0 + t * (self.at(x, y, d1) - c0)
    }

    fn ceiling(&self) -> f64 {
        self.max
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Grid;

    fn pair(w: usize, h: usize, f: impl Fn(usize, usize) -> f64, g: impl Fn(usize, usize) -> f64) -> Arc<StereoPair> {
        let l = Grid::from_fn(w, h, |x, y| [f(x, y); 3]);
        let r = Grid::from_fn(w, h, |x, y| [g(x, y); 3]);
        Arc::new(StereoPair::new(l, r, 8.0).unwrap())
    }

    #[test]
    fn identical_images_zero_disparity() {
        let p = pair(12, 5, |x, y| ((x * 37 + y * 11) % 255) as f64, |x, y| ((x * 37 + y * 11) % 255) as f64);
        let c = PhotoConsistency::new(p, View::Left, &MatchParams::default());
        for y in 0..5 {
            for x in 0..12 {
                assert_eq!(c.cost(x, y, 0.0), 0.0);
            }
        }
    }

    #[test]
    fn mismatch_saturates_at_ceiling() {
        // step edge against flat gray: both terms truncate at x = 4
        let p = pair(12, 3, |x, _| if x >= 5 { 255.0 } else { 0.0 }, |_, _| 128.0);
        let c = PhotoConsistency::new(p, View::Left, &MatchParams::default());
        assert!((c.cost(4, 1, 0.0) - 2.8).abs() < 1e-12);
        assert!((c.ceiling() - 2.8).abs() < 1e-12);
    }

    #[test]
    fn out_of_image_is_ceiling() {
        let p = pair(10, 2, |x, _| x as f64, |x, _| x as f64);
        let left = PhotoConsistency::new(p.clone(), View::Left, &MatchParams::default());
        assert_eq!(left.cost(2, 0, 3.0), left.ceiling());
        assert!(left.cost(2, 0, 2.0) < left.ceiling());
        let right = PhotoConsistency::new(p, View::Right, &MatchParams::default());
        assert_eq!(right.cost(8, 0, 2.0), right.ceiling());
    }

    #[test]
    fn right_view_adds_disparity() {
        // right(x) = left(x + 3): a right pixel's match sits 3 px to the right
        let tex = |x: usize| ((x * 53) % 200) as f64;
        let p = pair(20, 1, move |x, _| tex(x), move |x, _| tex(x + 3));
        let c = PhotoConsistency::new(p, View::Right, &MatchParams::default());
        for x in 1..15 {
            assert!(c.cost(x, 0, 3.0) < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn cost_volume_interpolates_and_round_trips() {
        let (w, h, n) = (3, 2, 4);
        let data: Vec<f32> = (0..w * h * n).map(|i| i as f32 * 0.5).collect();
        let vol = CostVolume::new(w, h, n, data).unwrap();
        // (x=1, y=1): d=0 -> index 4, d=1 -> index 10
        assert_eq!(vol.cost(1, 1, 0.0), 2.0);
        assert_eq!(vol.cost(1, 1, 0.5), 3.5);
        assert_eq!(vol.cost(1, 1, -0.1), vol.ceiling());
        assert_eq!(vol.cost(1, 1, 3.5), vol.ceiling());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vol.bin");
        vol.write(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[0..4], &3u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &4u32.to_le_bytes());
        assert_eq!(bytes.len(), 12 + 4 * w * h * n);
        assert_eq!(CostVolume::read(&path).unwrap(), vol);

        std::fs::write(&path, &bytes[..bytes.len() - 2]).unwrap();
        assert!(matches!(CostVolume::read(&path), Err(Error::CostVolume(_))));
    }
}
