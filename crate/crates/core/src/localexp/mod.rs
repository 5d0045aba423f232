//! Local expansion moves.
//!
//! The image is tiled by square cells at several scales. For each cell a
//! candidate plane is proposed from the labels of the cell, and every pixel
//! of the surrounding 3×3 block of cells may switch to it through one
//! binary graph cut. Cells four apart in both axes never touch each other's
//! blocks, so the 16 groups of such cells are solved concurrently on a
//! worker pool. Each unit works on its own copy of the labels it reads and
//! draws from its own random stream, which makes the result independent of
//! the number of workers.

mod grid;
mod proposer;

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::graphcut::{build_subproblem, solve_binary};
use crate::image::{Grid, Rect};
use crate::plane::{random_plane, PlaneLabel};
use crate::stereo::{LabelField, LabelPatch, View};

pub use grid::{build_grids, group_index, ExpansionUnit, GridLevel, GROUP_COUNT};
pub use proposer::{fit_plane, perturb, propose_propagation, propose_ransac, RansacParams};

/// Cell size of one grid level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CellSize {
    Pixels(usize),
    /// Percentage of the image width, rounded, at least one pixel.
    PercentOfWidth(f64),
}

impl CellSize {
    pub fn resolve(&self, width: usize) -> usize {
        match *self {
            CellSize::Pixels(s) => s,
            CellSize::PercentOfWidth(p) => ((p / 100.0 * width as f64).round() as usize).max(1),
        }
    }
}

/// Proposal counts of one grid level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelSchedule {
    pub cell: CellSize,
    pub k_prop: usize,
    pub k_rans: usize,
    pub k_rand: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub levels: Vec<LevelSchedule>,
    pub outer_iterations: usize,
    /// Stop once an outer iteration lowers the energy by less than this
    /// relative amount.
    pub early_stop: Option<f64>,
    /// Initial disparity perturbation radius; `None` means `disp_max / 2`.
    pub r_d: Option<f64>,
    /// Initial normal perturbation radius.
    pub r_n: f64,
    pub seed: u64,
    pub workers: usize,
    pub ransac: RansacParams,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let level = |s, k_prop, k_rand| LevelSchedule {
            cell: CellSize::Pixels(s),
            k_prop,
            k_rans: 0,
            k_rand,
        };
        OptimizerConfig {
            levels: vec![level(5, 1, 7), level(15, 2, 0), level(25, 2, 0)],
            outer_iterations: 10,
            early_stop: None,
            r_d: None,
            r_n: 1.0,
            seed: 0,
            workers: 1,
            ransac: RansacParams::default(),
        }
    }
}

impl OptimizerConfig {
    /// Sets `k_rans` to 1 on every level when enabled and 0 otherwise.
    pub fn with_ransac(mut self, enabled: bool) -> Self {
        for l in &mut self.levels {
            l.k_rans = enabled as usize;
        }
        self
    }

    pub fn with_cell_sizes(mut self, sizes: &[usize]) -> Self {
        for (l, &s) in self.levels.iter_mut().zip(sizes) {
            l.cell = CellSize::Pixels(s);
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.levels.is_empty() {
            return bad("at least one grid level is required");
        }
        for l in &self.levels {
            match l.cell {
                CellSize::Pixels(0) => return bad("cell size must be at least 1"),
                CellSize::PercentOfWidth(p) if !(p > 0.0) => return bad("cell percentage must be positive"),
                _ => {}
            }
        }
        if self.workers == 0 {
            return bad("worker count must be at least 1");
        }
        if !(self.r_n >= 0.0) || self.r_d.is_some_and(|r| !(r >= 0.0)) {
            return bad("perturbation radii must be non-negative");
        }
        if !(self.ransac.inlier_threshold > 0.0) {
            return bad("RANSAC inlier threshold must be positive");
        }
        Ok(())
    }

    pub fn grids(&self, width: usize, height: usize) -> Vec<GridLevel> {
        self.levels
            .iter()
            .map(|l| GridLevel::new(width, height, l.cell.resolve(width)))
            .collect()
    }
}

/// Energy after one group of expansions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRecord {
    pub outer_iter: usize,
    pub level: usize,
    pub group: usize,
    /// Optimization time since start, monitor callbacks excluded.
    pub seconds: f64,
    pub group_seconds: f64,
    pub energy: f64,
    /// Value reported by the monitor, e.g. a bad-pixel rate.
    pub error: Option<f64>,
}

/// Current labeling with its cached unary potentials.
#[derive(Clone, Debug)]
pub struct OptimizerState {
    pub f: LabelField,
    /// Unary potential of `f` at every pixel.
    pub costs: Grid<f64>,
    pub r_d: f64,
    pub r_n: f64,
    pub trace: Vec<TraceRecord>,
}

impl OptimizerState {
    pub fn new(model: &EnergyModel, f: LabelField) -> Result<Self> {
        model.check_field(&f)?;
        let costs = model.unary_costs(&f);
        Ok(OptimizerState {
            f,
            costs,
            r_d: model.disp_max() / 2.0,
            r_n: 1.0,
            trace: Vec::new(),
        })
    }

    /// Energy from the cached unaries plus a fresh smoothness sum.
    pub fn energy(&self, model: &EnergyModel) -> f64 {
        self.costs.as_slice().iter().sum::<f64>() + model.smoothness_energy(&self.f)
    }

    /// One α-expansion of `alpha` over the unit's region.
    pub fn local_alpha_expansion(&mut self, model: &EnergyModel, unit: &ExpansionUnit, alpha: &PlaneLabel) -> Result<bool> {
        let mut ws = UnitWorkspace::extract(self, model, unit);
        let changed = ws.expand(model, alpha)?;
        ws.store(self);
        Ok(changed)
    }

    /// All proposals of one level's schedule for one unit.
    pub fn iterative_expansion(
        &mut self,
        model: &EnergyModel,
        unit: &ExpansionUnit,
        schedule: &LevelSchedule,
        ransac: &RansacParams,
        rng: &mut ChaCha8Rng,
    ) -> Result<()> {
        let mut ws = UnitWorkspace::extract(self, model, unit);
        ws.iterate(model, schedule, ransac, self.r_d, self.r_n, rng)?;
        ws.store(self);
        Ok(())
    }
}

/// Private copy of everything one unit reads and writes.
struct UnitWorkspace {
    center: Rect,
    region: Rect,
    /// Labels over the region grown by one pixel.
    labels: LabelPatch,
    /// Cached unaries over the region, row-major.
    costs: Vec<f64>,
}

impl UnitWorkspace {
    fn extract(state: &OptimizerState, model: &EnergyModel, unit: &ExpansionUnit) -> Self {
        let region = unit.region;
        UnitWorkspace {
            center: unit.center,
            region,
            labels: state.f.patch(region.dilate(1, &model.bounds())),
            costs: region.pixels().map(|(x, y)| *state.costs.get(x, y)).collect(),
        }
    }

    fn store(&self, state: &mut OptimizerState) {
        for (i, (x, y)) in self.region.pixels().enumerate() {
            state.f.set(x, y, self.labels.get(x, y));
            *state.costs.get_mut(x, y) = self.costs[i];
        }
    }

    fn expand(&mut self, model: &EnergyModel, alpha: &PlaneLabel) -> Result<bool> {
        let region = self.region;
        if region.pixels().all(|(x, y)| self.labels.get(x, y) == *alpha) {
            return Ok(false);
        }
        let data = model.region_data_costs(alpha, region);
        let sub = build_subproblem(model, &self.labels, region, alpha, &data, &self.costs)?;
        let switch = solve_binary(&sub)?;
        let mut changed = false;
        for (i, &(x, y)) in sub.pixels.iter().enumerate() {
            if switch[i] {
                self.labels.set(x, y, *alpha);
                self.costs[i] = model.unary_from(alpha, x, y, data.at(x, y));
                changed = true;
            }
        }
        Ok(changed)
    }

    fn iterate(
        &mut self,
        model: &EnergyModel,
        schedule: &LevelSchedule,
        ransac: &RansacParams,
        r_d: f64,
        r_n: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<()> {
        for _ in 0..schedule.k_prop {
            let (alpha, _) = propose_propagation(&self.labels, &self.center, rng);
            self.expand(model, &alpha)?;
        }
        for _ in 0..schedule.k_rans {
            let alpha = match propose_ransac(&self.labels, &self.center, ransac, rng) {
                Some(alpha) => alpha,
                None => propose_propagation(&self.labels, &self.center, rng).0,
            };
            self.expand(model, &alpha)?;
        }
        let (mut r_d, mut r_n) = (r_d, r_n);
        for _ in 0..schedule.k_rand {
            let (label, (x, y)) = propose_propagation(&self.labels, &self.center, rng);
            let alpha = perturb(&label, (x as f64, y as f64), r_d, r_n, model.disp_max(), rng);
            self.expand(model, &alpha)?;
            r_d /= 2.0;
            r_n /= 2.0;
        }
        Ok(())
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of an independent stream for a tuple of indices.
fn stream_seed(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix(seed), |h, &p| splitmix(h ^ p))
}

/// Label field with an independent random plane at every pixel.
pub fn random_init(width: usize, height: usize, view: View, disp_max: f64, seed: u64) -> LabelField {
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, &[view as u64, u64::MAX]));
    LabelField::from_grid(
        view,
        Grid::from_fn(width, height, |x, y| random_plane(&mut rng, x as f64, y as f64, disp_max)),
    )
}

/// Optimizes from a random initial labeling.
pub fn optimize(model: &EnergyModel, cfg: &OptimizerConfig) -> Result<OptimizerState> {
    optimize_monitored(model, cfg, None, |_| None)
}

/// Optimizes from `init` (random when `None`), calling `monitor` after every
/// group; its return value is stored in the trace.
pub fn optimize_monitored(
    model: &EnergyModel,
    cfg: &OptimizerConfig,
    init: Option<LabelField>,
    mut monitor: impl FnMut(&LabelField) -> Option<f64>,
) -> Result<OptimizerState> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    let (w, h) = (model.width(), model.height());
    let f = match init {
        Some(f) => f,
        None => random_init(w, h, model.view(), model.disp_max(), cfg.seed),
    };
    let mut state = pool.install(|| OptimizerState::new(model, f))?;
    state.r_d = cfg.r_d.unwrap_or(model.disp_max() / 2.0);
    state.r_n = cfg.r_n;
    let grids = cfg.grids(w, h);

    let mut elapsed = Duration::ZERO;
    let mut last_energy = pool.install(|| state.energy(model));
    for outer in 0..cfg.outer_iterations {
        let start_energy = last_energy;
        for (li, (grid, schedule)) in grids.iter().zip(&cfg.levels).enumerate() {
            for k in 0..GROUP_COUNT {
                // empty groups still get a trace record
                let units = grid.group(k);
                let t0 = Instant::now();
                let (r_d, r_n) = (state.r_d, state.r_n);
                let done: Vec<Result<UnitWorkspace>> = pool.install(|| {
                    units
                        .par_iter()
                        .map(|unit| {
                            let mut ws = UnitWorkspace::extract(&state, model, unit);
                            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(
                                cfg.seed,
                                &[model.view() as u64, li as u64, unit.i as u64, unit.j as u64, outer as u64],
                            ));
                            ws.iterate(model, schedule, &cfg.ransac, r_d, r_n, &mut rng)?;
                            Ok(ws)
                        })
                        .collect()
                });
                for ws in done {
                    ws?.store(&mut state);
                }
                last_energy = pool.install(|| state.energy(model));
                let dt = t0.elapsed();
                elapsed += dt;
                let error = monitor(&state.f);
                state.trace.push(TraceRecord {
                    outer_iter: outer,
                    level: li,
                    group: k,
                    seconds: elapsed.as_secs_f64(),
                    group_seconds: dt.as_secs_f64(),
                    energy: last_energy,
                    error,
                });
            }
        }
        log::debug!(
            "{} view: outer iteration {} energy {:.4}",
            model.view().name(),
            outer + 1,
            last_energy
        );
        state.r_d /= 2.0;
        state.r_n /= 2.0;
        if let Some(tol) = cfg.early_stop {
            if start_energy - last_energy < tol * start_energy.abs() {
                break;
            }
        }
    }
    Ok(state)
}
