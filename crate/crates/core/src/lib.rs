//! Stereo matching with continuous disparity-plane labels.
//!
//! Each pixel carries a plane `d = a·u + b·v + c`. The labeling minimizes a
//! pairwise MRF energy (guided-filter slanted-window data term plus a
//! truncated plane-curvature smoothness term) with local α-expansions on
//! multi-level grids, each solved exactly by min-cut.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod energy;
pub mod error;
pub mod graphcut;
pub mod image;
pub mod io;
pub mod localexp;
pub mod metrics;
pub mod params;
pub mod plane;
pub mod postproc;
pub mod run;
pub mod stereo;
pub mod synthetic;

pub use error::{Error, Result};
pub use image::{ColorImage, GrayImage, Grid, Rect};
pub use params::{MatchParams, Neighborhood, SmoothParams};
pub use plane::{NormalDisparity, PlaneLabel};
pub use stereo::{LabelField, StereoPair, View};
