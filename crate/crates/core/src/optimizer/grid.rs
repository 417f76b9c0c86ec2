//! Exhaustive search over x–z plane observables on a uniform angle grid.
//!
//! Central slots only ever enter a score through `|⟨O_z⟩|` for their own
//! source and input, so their best grid angle is found independently for
//! every choice of the external pair. Each source then reduces to a Pareto
//! frontier of achievable `(|⟨O_0⟩|, |⟨O_1⟩|)` values, and the network
//! score is maximized over combinations of frontier points.

use rayon::prelude::*;

use super::Objective;
use crate::error::{Error, Result};
use crate::linalg::RealMatrix3;
use crate::networks::TopologyKind;
use crate::states::SourceEnsemble;

/// Largest number of elementary evaluations a grid search may perform.
pub const GRID_BUDGET: u128 = 100_000_000;

/// The x–z block of a correlation matrix: `[[xx, xz], [zx, zz]]`.
type Block = [[f64; 2]; 2];

fn xz_block(m: &RealMatrix3) -> Block {
    [[m.0[0][0], m.0[0][2]], [m.0[2][0], m.0[2][2]]]
}

fn transpose(b: &Block) -> Block {
    [[b[0][0], b[1][0]], [b[0][1], b[1][1]]]
}

fn grid_vectors(resolution: usize) -> Vec<[f64; 2]> {
    (0..resolution)
        .map(|k| {
            let (s, c) = (std::f64::consts::TAU * k as f64 / resolution as f64).sin_cos();
            [s, c]
        })
        .collect()
}

/// Row vector `aᵀ M` for an x–z vector `a`.
fn left(a: [f64; 2], m: &Block) -> [f64; 2] {
    [a[0] * m[0][0] + a[1] * m[1][0], a[0] * m[0][1] + a[1] * m[1][1]]
}

/// For every external pair `(a₀, a₁)`: the best `(a₀+a₁)ᵀ M b` and
/// `(a₀−a₁)ᵀ M b` over grid vectors `b`, as absolute values or signed.
fn pair_maxima(m: &Block, grid: &[[f64; 2]], signed: bool) -> Vec<[f64; 2]> {
    let res = grid.len();
    (0..res * res)
        .into_par_iter()
        .map(|idx| {
            let (a0, a1) = (grid[idx / res], grid[idx % res]);
            let sum = left([a0[0] + a1[0], a0[1] + a1[1]], m);
            let diff = left([a0[0] - a1[0], a0[1] - a1[1]], m);
            let mut best = [f64::NEG_INFINITY; 2];
            for b in grid {
                let o = [sum[0] * b[0] + sum[1] * b[1], diff[0] * b[0] + diff[1] * b[1]];
                for z in 0..2 {
                    let v = if signed { o[z] } else { o[z].abs() };
                    best[z] = best[z].max(v);
                }
            }
            best
        })
        .collect()
}

/// Points not dominated in both coordinates, sorted by the first coordinate descending.
fn pareto_frontier(mut points: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    points.sort_by(|p, q| q[0].total_cmp(&p[0]).then(q[1].total_cmp(&p[1])));
    let mut out: Vec<[f64; 2]> = Vec::new();
    for p in points {
        if out.last().is_none_or(|last| p[1] > last[1]) {
            out.push(p);
        }
    }
    out
}

/// `max |aᵀ M b|` over grid vectors.
fn plain_maximum(m: &Block, grid: &[[f64; 2]]) -> f64 {
    grid.par_iter()
        .map(|a| {
            let r = left(*a, m);
            grid.iter().map(|b| (r[0] * b[0] + r[1] * b[1]).abs()).fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

fn check_budget(evaluations: u128) -> Result<()> {
    if evaluations > GRID_BUDGET {
        return Err(Error::BudgetExceeded { evaluations, budget: GRID_BUDGET });
    }
    Ok(())
}

/// Largest score over strategies whose vectors lie in the x–z plane of each
/// source's canonical frame at angles `2πk/resolution`.
///
/// Grids whose resolutions divide one another are nested, so the value is
/// nondecreasing along such a sequence.
pub fn grid_oracle(
    objective: Objective,
    ensemble: &SourceEnsemble,
    resolution: usize,
) -> Result<f64> {
    let topology = objective.topology();
    if ensemble.len() != topology.n() {
        return Err(Error::ShapeMismatch(format!("{} sources for a {topology}", ensemble.len())));
    }
    if resolution == 0 {
        return Err(Error::InvalidConfig("grid resolution must be positive".into()));
    }
    let n = topology.n();
    let res = resolution as u128;
    let blocks: Vec<Block> = ensemble
        .frames()
        .iter()
        .zip(ensemble.correlation_matrices())
        .map(|(f, t)| xz_block(&(*f.ra.matrix() * t * f.rb.matrix().transpose())))
        .collect();
    let grid = grid_vectors(resolution);

    let ends = match topology.kind() {
        TopologyKind::Star => n as u128,
        TopologyKind::Chain => 2,
    };
    let middles = n as u128 - ends.min(n as u128);
    check_budget(2 * res * res * res * ends + res * res * middles)?;

    if objective == Objective::Chsh {
        return Ok(pair_maxima(&blocks[0], &grid, true)
            .into_iter()
            .map(|[u, w]| u + w)
            .fold(f64::NEG_INFINITY, f64::max));
    }

    match topology.kind() {
        TopologyKind::Star => {
            let frontiers: Vec<Vec<[f64; 2]>> =
                blocks.iter().map(|m| pareto_frontier(pair_maxima(m, &grid, false))).collect();
            let combos: u128 = frontiers.iter().map(|f| f.len() as u128).product();
            check_budget(2 * res * res * res * ends + combos)?;
            let inv = 1.0 / n as f64;
            let mut best = 0.0f64;
            let mut idx = vec![0usize; n];
            loop {
                let (mut p0, mut p1) = (1.0, 1.0);
                for (f, &i) in frontiers.iter().zip(&idx) {
                    p0 *= f[i][0];
                    p1 *= f[i][1];
                }
                best = best.max(0.5 * (p0.powf(inv) + p1.powf(inv)));
                // Odometer increment over the frontier product.
                let mut k = 0;
                while k < n {
                    idx[k] += 1;
                    if idx[k] < frontiers[k].len() {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == n {
                    break;
                }
            }
            Ok(best)
        }
        TopologyKind::Chain => {
            let first = pareto_frontier(pair_maxima(&blocks[0], &grid, false));
            let last = pareto_frontier(pair_maxima(&transpose(&blocks[n - 1]), &grid, false));
            check_budget(
                2 * res * res * res * ends
                    + res * res * middles
                    + (first.len() * last.len()) as u128,
            )?;
            let middle: f64 = blocks[1..n - 1].iter().map(|m| plain_maximum(m, &grid)).product();
            let mut best = 0.0f64;
            for f in &first {
                for l in &last {
                    best = best.max((f[0] * l[0]).sqrt() + (f[1] * l[1]).sqrt());
                }
            }
            Ok(0.5 * middle.sqrt() * best)
        }
    }
}
