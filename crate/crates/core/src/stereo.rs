//! Stereo pair, view selection and per-pixel label fields.

use crate::error::{Error, Result};
use crate::image::{gradient_x, ColorImage, GrayImage, Grid, Rect};
use crate::plane::PlaneLabel;

/// Which image of the rectified pair a quantity refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum View {
    Left,
    Right,
}

impl View {
    pub fn other(self) -> View {
        match self {
            View::Left => View::Right,
            View::Right => View::Left,
        }
    }

    /// Sign applied to a disparity when warping into the other view.
    #[inline]
    pub fn warp_sign(self) -> f64 {
        match self {
            View::Left => -1.0,
            View::Right => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            View::Left => "left",
            View::Right => "right",
        }
    }
}

/// Rectified color pair with precomputed horizontal gradients. Colors are in
/// `[0, 255]`.
#[derive(Clone, Debug)]
pub struct StereoPair {
    left: ColorImage,
    right: ColorImage,
    grad_left: GrayImage,
    grad_right: GrayImage,
    disp_max: f64,
}

impl StereoPair {
    pub fn new(left: ColorImage, right: ColorImage, disp_max: f64) -> Result<Self> {
        if !left.same_dims(&right) {
            return Err(Error::DimensionMismatch(format!(
                "left is {}x{}, right is {}x{}",
                left.width(),
                left.height(),
                right.width(),
                right.height()
            )));
        }
        if left.is_empty() {
            return Err(Error::InvalidParameter("empty images".into()));
        }
        if !(disp_max > 0.0) || !disp_max.is_finite() {
            return Err(Error::InvalidParameter(format!("disp_max must be positive, got {disp_max}")));
        }
        let grad_left = gradient_x(&left);
        let grad_right = gradient_x(&right);
        Ok(StereoPair {
            left,
            right,
            grad_left,
            grad_right,
            disp_max,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.left.width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.left.height()
    }

    #[inline]
    pub fn disp_max(&self) -> f64 {
        self.disp_max
    }

    pub fn bounds(&self) -> Rect {
        self.left.bounds()
    }

    pub fn left(&self) -> &ColorImage {
        &self.left
    }

    pub fn right(&self) -> &ColorImage {
        &self.right
    }

    /// Reference image of `view` (the image the labels live on).
    pub fn image(&self, view: View) -> &ColorImage {
        match view {
            View::Left => &self.left,
            View::Right => &self.right,
        }
    }

    pub fn gradient(&self, view: View) -> &GrayImage {
        match view {
            View::Left => &self.grad_left,
            View::Right => &self.grad_right,
        }
    }
}

/// Read access to plane labels by absolute pixel coordinate.
pub trait LabelSource {
    fn label(&self, x: usize, y: usize) -> PlaneLabel;
}

/// Per-pixel plane assignment for one view.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelField {
    view: View,
    labels: Grid<PlaneLabel>,
}

impl LabelField {
    pub fn new(view: View, width: usize, height: usize, fill: PlaneLabel) -> Self {
        LabelField {
            view,
            labels: Grid::new(width, height, fill),
        }
    }

    pub fn from_grid(view: View, labels: Grid<PlaneLabel>) -> Self {
        LabelField { view, labels }
    }

    #[inline]
    pub fn view(&self) -> View {
        self.view
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.labels.width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.labels.height()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> PlaneLabel {
        *self.labels.get(x, y)
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, label: PlaneLabel) {
        *self.labels.get_mut(x, y) = label;
    }

    pub fn grid(&self) -> &Grid<PlaneLabel> {
        &self.labels
    }

    /// Disparity of every pixel under its own label.
    pub fn disparity_map(&self) -> GrayImage {
        Grid::from_fn(self.width(), self.height(), |x, y| self.get(x, y).disparity_at_px(x, y))
    }

    /// Copies the labels inside `rect` into a standalone patch.
    pub fn patch(&self, rect: Rect) -> LabelPatch {
        let labels = rect.pixels().map(|(x, y)| self.get(x, y)).collect();
        LabelPatch { rect, labels }
    }

    pub fn write_patch(&mut self, patch: &LabelPatch) {
        for (i, (x, y)) in patch.rect.pixels().enumerate() {
            self.set(x, y, patch.labels[i]);
        }
    }
}

impl LabelSource for LabelField {
    #[inline]
    fn label(&self, x: usize, y: usize) -> PlaneLabel {
        self.get(x, y)
    }
}

/// Rectangular copy of a label field, addressed by absolute coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelPatch {
    rect: Rect,
    labels: Vec<PlaneLabel>,
}

impl LabelPatch {
    pub fn rect(&self) -> Rect {
        self.rect
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> PlaneLabel {
        self.labels[self.rect.offset(x, y)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, label: PlaneLabel) {
        let i = self.rect.offset(x, y);
        self.labels[i] = label;
    }
}

impl LabelSource for LabelPatch {
    #[inline]
    fn label(&self, x: usize, y: usize) -> PlaneLabel {
        self.get(x, y)
    }
}
