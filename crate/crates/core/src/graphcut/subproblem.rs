use crate::energy::{CostSlice, EnergyModel};
use crate::error::{Error, Result};
use crate::image::Rect;
use crate::plane::PlaneLabel;
use crate::stereo::LabelSource;

use super::maxflow::{FlowNetwork, Side};

/// Pairwise table between nodes `i` and `j`, indexed `[x_i][x_j]` with
/// 0 = keep, 1 = switch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairTable {
    pub i: usize,
    pub j: usize,
    pub theta: [[f64; 2]; 2],
}

impl PairTable {
    /// `θ(0,1) + θ(1,0) − θ(0,0) − θ(1,1)`; non-negative when submodular.
    #[inline]
    pub fn submodularity_margin(&self) -> f64 {
        self.theta[0][1] + self.theta[1][0] - self.theta[0][0] - self.theta[1][1]
    }

    fn tolerance(&self) -> f64 {
        let t = &self.theta;
        1e-9 * (1.0 + t[0][0].abs() + t[0][1].abs() + t[1][0].abs() + t[1][1].abs())
    }
}

/// Keep-or-switch labeling problem on the pixels of one expansion region.
#[derive(Clone, Debug, Default)]
pub struct BinarySubproblem {
    /// Pixels in row-major order; node `i` is `pixels[i]`.
    pub pixels: Vec<(usize, usize)>,
    /// `[keep, switch]` unary potentials, boundary terms included.
    pub unary: Vec<[f64; 2]>,
    pub pairs: Vec<PairTable>,
}

impl BinarySubproblem {
    pub fn len(&self) -> usize {
        self.unary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unary.is_empty()
    }

    /// Energy of an assignment (`true` = switch).
    pub fn energy(&self, assignment: &[bool]) -> f64 {
        let mut e: f64 = self
            .unary
            .iter()
            .zip(assignment)
            .map(|(u, &x)| u[x as usize])
            .sum();
        for p in &self.pairs {
            e += p.theta[assignment[p.i] as usize][assignment[p.j] as usize];
        }
        e
    }

    /// Checks every pairwise table; returns the first violation.
    pub fn check_submodular(&self) -> Result<()> {
        for p in &self.pairs {
            let margin = p.submodularity_margin();
            if margin < -p.tolerance() {
                return Err(Error::NotSubmodular {
                    i: p.i,
                    j: p.j,
                    excess: -margin,
                });
            }
        }
        Ok(())
    }
}

/// Builds the expansion subproblem of `alpha` over `region`.
///
/// `keep_unary` holds the unary potential of each pixel's current label in
/// row-major region order. Neighbor pairs with one end outside the region
/// are folded into the inner pixel's unary; pairs entirely outside are
/// constant and dropped.
pub fn build_subproblem<L: LabelSource>(
    model: &EnergyModel,
    labels: &L,
    region: Rect,
    alpha: &PlaneLabel,
    data_costs: &CostSlice,
    keep_unary: &[f64],
) -> Result<BinarySubproblem> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    debug_assert_eq!(data_costs.region, region);
    debug_assert_eq!(keep_unary.len(), region.area());

    let pixels: Vec<(usize, usize)> = region.pixels().collect();
    let mut unary: Vec<[f64; 2]> = pixels
        .iter()
        .zip(keep_unary)
        .map(|(&(x, y), &keep)| [keep, model.unary_from(alpha, x, y, data_costs.at(x, y))])
        .collect();
    let mut pairs = Vec::with_capacity(4 * pixels.len());

    for (x, y) in region.dilate(1, &model.bounds()).pixels() {
        let p_in = region.contains(x, y);
        let fp = labels.label(x, y);
        for (dir, (qx, qy)) in model.forward_neighbors(x, y) {
            let q_in = region.contains(qx, qy);
            if !p_in && !q_in {
                continue;
            }
            let fq = labels.label(qx, qy);
            let psi = |a: &PlaneLabel, b: &PlaneLabel| model.weighted_pair((x, y), dir, (qx, qy), a, b);
            match (p_in, q_in) {
                (true, true) => {
                    let i = region.offset(x, y);
                    let j = region.offset(qx, qy);
                    let table = PairTable {
                        i,
                        j,
                        theta: [[psi(&fp, &fq), psi(&fp, alpha)], [psi(alpha, &fq), 0.0]],
                    };
                    debug_assert!(table.submodularity_margin() >= -table.tolerance());
                    pairs.push(table);
                }
                (true, false) => {
                    let u = &mut unary[region.offset(x, y)];
                    u[0] += psi(&fp, &fq);
                    u[1] += psi(alpha, &fq);
                }
                (false, true) => {
                    let u = &mut unary[region.offset(qx, qy)];
                    u[0] += psi(&fp, &fq);
                    u[1] += psi(&fp, alpha);
                }
                (false, false) => unreachable!(),
            }
        }
    }

    Ok(BinarySubproblem { pixels, unary, pairs })
}

/// Globally minimizes a submodular binary problem by min-cut. The returned
/// assignment (`true` = switch) never has higher energy than all-keep.
pub fn solve_binary(sub: &BinarySubproblem) -> Result<Vec<bool>> {
    sub.check_submodular()?;
    let n = sub.len();
    let mut net = FlowNetwork::new(n);
    // x_i = 1 (switch) <=> node i ends on the sink side.
    for (i, u) in sub.unary.iter().enumerate() {
        // unaries may be negative; only their difference matters
        let m = u[0].min(u[1]);
        net.add_tedge(i, u[1] - m, u[0] - m);
    }
    for p in &sub.pairs {
        let [[a, b], [c, d]] = p.theta;
        // θ = A + (C − A)·x_i + (D − C)·x_j + (B + C − A − D)·(1 − x_i)·x_j
        add_linear(&mut net, p.i, c - a);
        add_linear(&mut net, p.j, d - c);
        let w = (b + c - a - d).max(0.0);
        if w > 0.0 {
            net.add_edge(p.i, p.j, w, 0.0);
        }
    }
    net.max_flow();
    let assignment: Vec<bool> = (0..n).map(|i| net.side(i) == Side::Sink).collect();

    let keep = vec![false; n];
    if sub.energy(&assignment) > sub.energy(&keep) {
        return Ok(keep);
    }
    Ok(assignment)
}

/// Adds `coef · x_i` up to a constant.
#[inline]
fn add_linear(net: &mut FlowNetwork, i: usize, coef: f64) {
    if coef > 0.0 {
        net.add_tedge(i, coef, 0.0);
    } else if coef < 0.0 {
        net.add_tedge(i, 0.0, -coef);
    }
}
