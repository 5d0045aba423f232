//! End-to-end run on one stereo pair: optimize both views, post-process,
//! and write disparity maps, the energy trace and metrics.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::config::Settings;
use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::image::{GrayImage, Grid};
use crate::io::{colorize, read_color, read_mask, read_pfm, write_color, write_pfm};
use crate::localexp::{optimize_monitored, OptimizerState};
use crate::metrics::{bad_rate, BAD_THRESHOLDS};
use crate::postproc::postprocess;
use crate::stereo::{LabelField, StereoPair, View};

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub left: PathBuf,
    pub right: PathBuf,
    /// Left-view ground truth disparity (PFM, `inf` = unknown).
    pub gt: Option<PathBuf>,
    /// Left-view non-occlusion mask; value 255 marks evaluated pixels.
    pub nonocc: Option<PathBuf>,
    pub out: PathBuf,
    pub disp_max: f64,
    pub settings: Settings,
}

/// Ground truth for the left view.
#[derive(Clone, Debug)]
pub struct GroundTruth {
    pub disparity: GrayImage,
    pub nonocc: Option<Grid<bool>>,
}

impl GroundTruth {
    /// Bad-pixel rate of `est` over the non-occluded pixels (all known
    /// pixels when no mask is given).
    pub fn bad_nonocc(&self, est: &GrayImage, threshold: f64) -> Result<f64> {
        bad_rate(est, &self.disparity, self.nonocc.as_ref(), threshold)
    }

    pub fn bad_all(&self, est: &GrayImage, threshold: f64) -> Result<f64> {
        bad_rate(est, &self.disparity, None, threshold)
    }
}

/// Results of [`estimate`].
#[derive(Clone, Debug)]
pub struct Estimate {
    pub left: OptimizerState,
    pub right: OptimizerState,
    /// Post-processed fields, when enabled.
    pub post: Option<(LabelField, LabelField)>,
}

impl Estimate {
    /// Final labeling of a view.
    pub fn field(&self, view: View) -> &LabelField {
        match (&self.post, view) {
            (Some((l, _)), View::Left) => l,
            (Some((_, r)), View::Right) => r,
            (None, View::Left) => &self.left.f,
            (None, View::Right) => &self.right.f,
        }
    }
}

/// Optimizes both views and optionally post-processes them. The left-view
/// trace records the bad-2.0 rate when ground truth is given.
pub fn estimate(pair: Arc<StereoPair>, settings: &Settings, gt: Option<&GroundTruth>) -> Result<Estimate> {
    settings.validate()?;
    let model = |view| EnergyModel::new(pair.clone(), settings.matching, settings.smooth, view);
    let (ml, mr) = (model(View::Left)?, model(View::Right)?);
    let left = optimize_monitored(&ml, &settings.optimizer, None, |f| {
        gt.and_then(|g| g.bad_nonocc(&f.disparity_map(), 2.0).ok())
    })?;
    let right = optimize_monitored(&mr, &settings.optimizer, None, |_| None)?;
    let post = settings.postprocess.then(|| {
        let r = postprocess(&pair, &left.f, &right.f, &settings.post);
        (r.left, r.right)
    });
    Ok(Estimate { left, right, post })
}

fn trace_csv(est: &Estimate) -> String {
    let mut out = String::from("outer_iter,level,group,seconds,energy_left,energy_right,bad20_nonocc\n");
    for (l, r) in est.left.trace.iter().zip(&est.right.trace) {
        let bad = l.error.map_or(String::new(), |e| format!("{e:.4}"));
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{:.6},{:.6},{}",
            l.outer_iter,
            l.level,
            l.group,
            l.seconds + r.seconds,
            l.energy,
            r.energy,
            bad
        );
    }
    out
}

fn metrics_text(est: &Estimate, gt: &GroundTruth) -> Result<String> {
    let mut out = String::new();
    let fin = est.field(View::Left).disparity_map();
    let raw = est.left.f.disparity_map();
    for t in BAD_THRESHOLDS {
        let _ = writeln!(out, "bad{t:.1}_nonocc={:.4}", gt.bad_nonocc(&fin, t)?);
    }
    for t in BAD_THRESHOLDS {
        let _ = writeln!(out, "bad{t:.1}_all={:.4}", gt.bad_all(&fin, t)?);
    }
    let _ = writeln!(out, "bad2.0_nonocc_before_post={:.4}", gt.bad_nonocc(&raw, 2.0)?);
    let last = |s: &OptimizerState| s.trace.last().map_or(f64::NAN, |r| r.energy);
    let secs = |s: &OptimizerState| s.trace.last().map_or(0.0, |r| r.seconds);
    let _ = writeln!(out, "energy_left={:.6}", last(&est.left));
    let _ = writeln!(out, "energy_right={:.6}", last(&est.right));
    let _ = writeln!(out, "seconds={:.3}", secs(&est.left) + secs(&est.right));
    Ok(out)
}

fn load_gt(cfg: &RunConfig, width: usize, height: usize) -> Result<Option<GroundTruth>> {
    let Some(path) = &cfg.gt else {
        return Ok(None);
    };
    let disparity = read_pfm(path)?;
    let nonocc = cfg.nonocc.as_deref().map(read_mask).transpose()?;
    let dims_ok = disparity.width() == width
        && disparity.height() == height
        && nonocc.as_ref().is_none_or(|m| m.same_dims(&disparity));
    if !dims_ok {
        return Err(Error::DimensionMismatch("ground truth and mask must match the input images".into()));
    }
    Ok(Some(GroundTruth { disparity, nonocc }))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Runs the whole pipeline and writes `disp_{left,right}.{pfm,png}`,
/// `trace.csv` and, with ground truth, `metrics.txt` into `cfg.out`.
pub fn run(cfg: &RunConfig) -> Result<Estimate> {
    let left = read_color(&cfg.left)?;
    let right = read_color(&cfg.right)?;
    if cfg.nonocc.is_some() && cfg.gt.is_none() {
        return Err(Error::InvalidParameter("a non-occlusion mask needs ground truth".into()));
    }
    let pair = Arc::new(StereoPair::new(left, right, cfg.disp_max)?);
    let gt = load_gt(cfg, pair.width(), pair.height())?;
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;

    let est = estimate(pair.clone(), &cfg.settings, gt.as_ref())?;
    for view in [View::Left, View::Right] {
        let disp = est.field(view).disparity_map();
        write_pfm(&disp, &cfg.out.join(format!("disp_{}.pfm", view.name())))?;
        write_color(&colorize(&disp, cfg.disp_max, None), &cfg.out.join(format!("disp_{}.png", view.name())))?;
    }
    write_text(&cfg.out.join("trace.csv"), &trace_csv(&est))?;
    if let Some(gt) = &gt {
        write_text(&cfg.out.join("metrics.txt"), &metrics_text(&est, gt)?)?;
    }
    Ok(est)
}
