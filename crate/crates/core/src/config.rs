//! Plain-text `key = value` parameter files.
//!
//! Lines starting with `#` are comments. Unknown keys are errors. Per-level
//! settings take one value per grid level, separated by spaces or commas;
//! cell sizes accept a `%` suffix meaning a percentage of the image width.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::localexp::{CellSize, LevelSchedule, OptimizerConfig};
use crate::params::{MatchParams, Neighborhood, SmoothParams};
use crate::postproc::PostParams;

/// Every tunable of a run except file paths and the disparity range.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub matching: MatchParams,
    pub smooth: SmoothParams,
    pub optimizer: OptimizerConfig,
    pub postprocess: bool,
    pub post: PostParams,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            matching: MatchParams::default(),
            smooth: SmoothParams::default(),
            optimizer: OptimizerConfig::default(),
            postprocess: true,
            post: PostParams::default(),
        }
    }
}

fn join<T>(items: impl IntoIterator<Item = T>, f: impl Fn(T) -> String) -> String {
    items.into_iter().map(f).collect::<Vec<_>>().join(" ")
}

fn cell_str(c: &CellSize) -> String {
    match c {
        CellSize::Pixels(s) => s.to_string(),
        CellSize::PercentOfWidth(p) => format!("{p}%"),
    }
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut s = Settings::default();
        s.apply_text(&text)?;
        Ok(s)
    }

    /// Applies every assignment in `text` on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Config { line: n + 1, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got {line:?}")))?;
            self.set(key.trim(), value.trim()).map_err(err)?;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        self.matching.validate()?;
        self.smooth.validate()?;
        self.optimizer.validate()?;
        if self.post.median_radius == 0 || !(self.post.gamma_w > 0.0) || !(self.post.lr_threshold >= 0.0) {
            return Err(Error::InvalidParameter("invalid post-processing parameters".into()));
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("{key}: cannot parse {v:?}"))
        }
        fn list<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<Vec<T>, String> {
            v.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| num(key, t))
                .collect()
        }
        fn boolean(key: &str, v: &str) -> std::result::Result<bool, String> {
            match v {
                "true" | "yes" | "on" | "1" => Ok(true),
                "false" | "no" | "off" | "0" => Ok(false),
                _ => Err(format!("{key}: expected true or false, got {v:?}")),
            }
        }
        let levels = &mut self.optimizer.levels;
        let per_level = |key: &str, v: &str, levels: &mut Vec<LevelSchedule>, set: fn(&mut LevelSchedule, usize)| {
            let vals: Vec<usize> = list(key, v)?;
            if vals.len() != levels.len() {
                return Err(format!("{key}: expected {} values (one per level), got {}", levels.len(), vals.len()));
            }
            for (l, v) in levels.iter_mut().zip(vals) {
                set(l, v);
            }
            Ok(())
        };

        let m = &mut self.matching;
        let s = &mut self.smooth;
        match key {
            "e" => m.e = num(key, value)?,
            "tau_col" => m.tau_col = num(key, value)?,
            "tau_grad" => m.tau_grad = num(key, value)?,
            "alpha" => m.alpha = num(key, value)?,
            "window_radius" => {
                let r: usize = num(key, value)?;
                m.window_radius = r;
                m.regression_radius = r / 2;
            }
            "lambda" => s.lambda = num(key, value)?,
            "tau_dis" => s.tau_dis = num(key, value)?,
            "eps" => s.eps = num(key, value)?,
            "gamma" => s.gamma = num(key, value)?,
            "neighborhood" => {
                s.neighborhood = match value {
                    "4" => Neighborhood::Four,
                    "8" => Neighborhood::Eight,
                    _ => return Err(format!("neighborhood: expected 4 or 8, got {value:?}")),
                }
            }
            "cells" => {
                let cells = value
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|t| !t.is_empty())
                    .map(|t| match t.strip_suffix('%') {
                        Some(p) => num(key, p).map(CellSize::PercentOfWidth),
                        None => num(key, t).map(CellSize::Pixels),
                    })
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                if cells.is_empty() {
                    return Err("cells: at least one level is required".into());
                }
                // new levels copy the schedule of the last existing one
                let template = *levels.last().expect("config always has a level");
                levels.resize(cells.len(), template);
                for (l, c) in levels.iter_mut().zip(cells) {
                    l.cell = c;
                }
            }
            "k_prop" => per_level(key, value, levels, |l, v| l.k_prop = v)?,
            "k_rans" => per_level(key, value, levels, |l, v| l.k_rans = v)?,
            "k_rand" => per_level(key, value, levels, |l, v| l.k_rand = v)?,
            "ransac" => {
                if boolean(key, value)? {
                    for l in levels.iter_mut() {
                        l.k_rans = l.k_rans.max(1);
                    }
                } else {
                    for l in levels.iter_mut() {
                        l.k_rans = 0;
                    }
                }
            }
            "outer_iterations" => self.optimizer.outer_iterations = num(key, value)?,
            "early_stop" => {
                self.optimizer.early_stop = match value {
                    "none" | "off" => None,
                    v => Some(num(key, v)?),
                }
            }
            "r_d" => {
                self.optimizer.r_d = match value {
                    "auto" => None,
                    v => Some(num(key, v)?),
                }
            }
            "r_n" => self.optimizer.r_n = num(key, value)?,
            "seed" => self.optimizer.seed = num(key, value)?,
            "workers" => self.optimizer.workers = num(key, value)?,
            "ransac_threshold" => self.optimizer.ransac.inlier_threshold = num(key, value)?,
            "ransac_hypotheses" => self.optimizer.ransac.hypotheses = num(key, value)?,
            "ransac_refits" => self.optimizer.ransac.refits = num(key, value)?,
            "postprocess" => self.postprocess = boolean(key, value)?,
            "lr_threshold" => self.post.lr_threshold = num(key, value)?,
            "median_radius" => self.post.median_radius = num(key, value)?,
            "gamma_w" => self.post.gamma_w = num(key, value)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Documented config file that reproduces these settings.
    pub fn to_config_string(&self) -> String {
        let m = &self.matching;
        let s = &self.smooth;
        let o = &self.optimizer;
        let p = &self.post;
        let mut out = String::new();
        let mut put = |comment: &str, line: String| {
            for c in comment.lines() {
                let _ = writeln!(out, "# {c}");
            }
            let _ = writeln!(out, "{line}\n");
        };
        put(
            "Data term\nmatching window is (2r+1)^2; the guided-filter regression window uses r/2",
            format!("window_radius = {}", m.window_radius),
        );
        put("guided-filter regularization added to the color covariance (colors scaled to [0,1])", format!("e = {}", m.e));
        put("truncation of the color and gradient dissimilarities", format!("tau_col = {}\ntau_grad = {}", m.tau_col, m.tau_grad));
        put("weight of the gradient dissimilarity", format!("alpha = {}", m.alpha));
        put("Smoothness term\nweight of the smoothness term", format!("lambda = {}", s.lambda));
        put("truncation of the plane-curvature penalty", format!("tau_dis = {}", s.tau_dis));
        put("lower bound and color bandwidth of the contrast weight", format!("eps = {}\ngamma = {}", s.eps, s.gamma));
        put("4 or 8", format!("neighborhood = {}", if s.neighborhood == Neighborhood::Four { 4 } else { 8 }));
        put(
            "Optimizer\ncell size per grid level in pixels, or percent of image width with a % suffix",
            format!("cells = {}", join(&o.levels, |l| cell_str(&l.cell))),
        );
        put(
            "per-level counts of propagation, RANSAC and perturbation proposals",
            format!(
                "k_prop = {}\nk_rans = {}\nk_rand = {}",
                join(&o.levels, |l| l.k_prop.to_string()),
                join(&o.levels, |l| l.k_rans.to_string()),
                join(&o.levels, |l| l.k_rand.to_string())
            ),
        );
        put("shortcut: true sets every k_rans to at least 1, false sets them to 0", format!("ransac = {}", o.levels.iter().any(|l| l.k_rans > 0)));
        put("passes over all grid levels", format!("outer_iterations = {}", o.outer_iterations));
        put(
            "stop when one pass lowers the energy by less than this fraction (none = never)",
            format!("early_stop = {}", o.early_stop.map_or("none".to_string(), |v| v.to_string())),
        );
        put(
            "initial perturbation radii of disparity (auto = half the disparity range) and normal",
            format!("r_d = {}\nr_n = {}", o.r_d.map_or("auto".to_string(), |v| v.to_string()), o.r_n),
        );
        put("random seed and worker threads; results do not depend on the worker count", format!("seed = {}\nworkers = {}", o.seed, o.workers));
        put(
            "RANSAC inlier threshold (px), hypotheses per fit and least-squares refits",
            format!(
                "ransac_threshold = {}\nransac_hypotheses = {}\nransac_refits = {}",
                o.ransac.inlier_threshold, o.ransac.hypotheses, o.ransac.refits
            ),
        );
        put("Post-processing\nconsistency check, fill and weighted median", format!("postprocess = {}", self.postprocess));
        put("max left-right disagreement (px)", format!("lr_threshold = {}", p.lr_threshold));
        put("weighted median window radius and color bandwidth", format!("median_radius = {}\ngamma_w = {}", p.median_radius, p.gamma_w));
        out
    }
}
