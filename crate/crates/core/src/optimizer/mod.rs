//! Variational maximization of network scores over local qubit observables:
//! multi-start Nelder–Mead over Bloch angles, and an exhaustive x–z plane
//! grid search as a lower-bound certificate.

mod grid;
pub mod nelder_mead;

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use grid::{grid_oracle, GRID_BUDGET};

use crate::error::{Error, Result};
use crate::linalg::RealMatrix3;
use crate::networks::{
    chsh_from_vectors, chsh_score, correlation_table, factored_score, network_score, Side,
    SlotVectors, Topology, TopologyKind,
};
use crate::observables::{
    chsh_strategy, mub_chain_external, mub_star_external, theorem1_star_strategy,
    theorem2_chain_strategy, BlochVector, ChshVariant, DichotomicObservable, NetworkStrategy,
    SourceSlots,
};
use crate::states::SourceEnsemble;

/// What is being maximized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Signed CHSH value of a single source.
    Chsh,
    /// Star or chain score of the given topology.
    Network(Topology),
}

impl Objective {
    fn topology(&self) -> Topology {
        match self {
            Objective::Chsh => Topology::star(1).expect("n = 1"),
            Objective::Network(t) => *t,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Restriction {
    #[default]
    Free,
    /// Central slots fixed to σ_z (input 0) and σ_x (input 1) in each
    /// source's canonical frame.
    MubCentral,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    /// Simplex size at which a run stops.
    pub tolerance: f64,
    pub seed: u64,
    pub restriction: Restriction,
    /// Use the closed-form strategy as restart 0.
    pub warm_start: bool,
    pub record_trace: bool,
    /// Re-evaluate the best strategy through the full correlation table.
    pub validate: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_iterations: 2000,
            tolerance: 1e-9,
            seed: 0,
            restriction: Restriction::Free,
            warm_start: true,
            record_trace: false,
            validate: false,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iterations == 0 {
            return Err(Error::InvalidConfig(
                "restarts and max_iterations must be positive".into(),
            ));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "tolerance {} must be positive",
                self.tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub restart: usize,
    pub iteration: usize,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizationResult {
    pub best_score: f64,
    pub best_strategy: NetworkStrategy,
    pub best_restart: usize,
    pub restart_scores: Vec<f64>,
    pub iterations: Vec<usize>,
    pub trace: Vec<TraceRow>,
}

impl OptimizationResult {
    /// Best score among restarts other than the warm start.
    pub fn best_cold_score(&self, warm_start: bool) -> Option<f64> {
        let skip = usize::from(warm_start);
        self.restart_scores.iter().skip(skip).copied().reduce(f64::max)
    }

    pub fn write_trace_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for row in &self.trace {
            out.serialize(row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Maximizes the star or chain score of `topology` on `ensemble`.
pub fn optimize(
    topology: Topology,
    ensemble: &SourceEnsemble,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    run(Objective::Network(topology), ensemble, config)
}

/// Maximizes the CHSH value of a single source.
pub fn optimize_chsh(
    ensemble: &SourceEnsemble,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    run(Objective::Chsh, ensemble, config)
}

/// Which slots are optimized, plus the fixed vectors of the others.
struct Problem {
    objective: Objective,
    topology: Topology,
    /// Correlation matrices in the frame the search works in.
    ts: Vec<RealMatrix3>,
    /// `[source][side]`: `None` if free, else the fixed vectors per input.
    fixed: Vec<[Option<[[f64; 3]; 2]>; 2]>,
    /// Rotations taking search-frame vectors to the lab frame, per source and side.
    to_lab: Vec<[RealMatrix3; 2]>,
    dim: usize,
}

impl Problem {
    fn new(
        objective: Objective,
        ensemble: &SourceEnsemble,
        restriction: Restriction,
    ) -> Result<Self> {
        let topology = objective.topology();
        if ensemble.len() != topology.n() {
            return Err(Error::ShapeMismatch(format!(
                "{} sources for a {topology}",
                ensemble.len()
            )));
        }
        let n = topology.n();
        let lab = ensemble.correlation_matrices();
        let (ts, to_lab, fixed) = match restriction {
            Restriction::Free => (lab, vec![[RealMatrix3::IDENTITY; 2]; n], vec![[None, None]; n]),
            Restriction::MubCentral => {
                let frames = ensemble.frames();
                let ts = frames
                    .iter()
                    .zip(&lab)
                    .map(|(f, t)| *f.ra.matrix() * *t * f.rb.matrix().transpose())
                    .collect();
                let to_lab = frames
                    .iter()
                    .map(|f| [f.ra.matrix().transpose(), f.rb.matrix().transpose()])
                    .collect();
                let zx = [BlochVector::Z.components(), BlochVector::X.components()];
                let fixed = (0..n)
                    .map(|i| [Side::A, Side::B].map(|s| topology.is_central(i, s).then_some(zx)))
                    .collect();
                (ts, to_lab, fixed)
            }
        };
        let free_slots = fixed.iter().flatten().filter(|f| f.is_none()).count();
        Ok(Self { objective, topology, ts, fixed, to_lab, dim: 4 * free_slots })
    }

    fn vectors(&self, params: &[f64]) -> SlotVectors {
        let mut k = 0;
        self.fixed
            .iter()
            .map(|sides| {
                sides.map(|f| {
                    f.unwrap_or_else(|| {
                        let v = [0, 1].map(|j| {
                            BlochVector::from_angles(params[k + 2 * j], params[k + 2 * j + 1])
                                .components()
                        });
                        k += 4;
                        v
                    })
                })
            })
            .collect()
    }

    fn score(&self, params: &[f64]) -> f64 {
        let v = self.vectors(params);
        match self.objective {
            Objective::Chsh => chsh_from_vectors(&self.ts[0], &v[0]),
            Objective::Network(t) => factored_score(&self.ts, &v, t.kind()),
        }
    }

    /// Angles of the free slots of a search-frame vector assignment.
    fn encode(&self, v: &SlotVectors) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim);
        for (sides, fixed) in v.iter().zip(&self.fixed) {
            for s in 0..2 {
                if fixed[s].is_none() {
                    for input in sides[s] {
                        let (theta, phi) = BlochVector::normalized(input)
                            .map(|b| b.to_angles())
                            .unwrap_or((0.0, 0.0));
                        out.extend([theta, phi]);
                    }
                }
            }
        }
        out
    }

    fn strategy(&self, params: &[f64]) -> NetworkStrategy {
        let v = self.vectors(params);
        let slots = v
            .iter()
            .zip(&self.to_lab)
            .map(|(sides, rot)| {
                let [a, b] = [0, 1].map(|s| {
                    let [v0, v1] = sides[s].map(|x| {
                        BlochVector::normalized(rot[s].mul_vec(x)).expect("rotated unit vector")
                    });
                    DichotomicObservable::new(v0, v1)
                });
                SourceSlots { a_side: a, b_side: b }
            })
            .collect();
        NetworkStrategy::new(self.topology, slots).expect("shape")
    }

    /// Closed-form strategy expressed in the search frame.
    fn warm_start(&self, ensemble: &SourceEnsemble, restriction: Restriction) -> Result<Vec<f64>> {
        let lab = |s: NetworkStrategy| s.vectors();
        let v = match (restriction, self.objective) {
            (Restriction::Free, Objective::Chsh) => {
                lab(chsh_strategy(ensemble, ChshVariant::MubOnA)
                    .unwrap_or_else(|_| NetworkStrategy::all_z(self.topology)))
            }
            (Restriction::Free, Objective::Network(t)) => match t.kind() {
                TopologyKind::Star => lab(theorem1_star_strategy(ensemble).strategy),
                TopologyKind::Chain => lab(theorem2_chain_strategy(ensemble)?.strategy),
            },
            (Restriction::MubCentral, _) => {
                let triples = ensemble.triples();
                let external = |f: fn(&[_], u8) -> Result<BlochVector>| {
                    [0u8, 1].map(|x| f(&triples, x).unwrap_or(BlochVector::Z).components())
                };
                let ext = match self.topology.kind() {
                    TopologyKind::Star => external(mub_star_external),
                    TopologyKind::Chain => external(mub_chain_external),
                };
                self.fixed.iter().map(|f| f.map(|slot| slot.unwrap_or(ext))).collect()
            }
        };
        Ok(self.encode(&v))
    }
}

fn random_angles(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..dim / 2)
        .flat_map(|_| {
            let theta = rng.random_range(-1.0f64..=1.0).acos();
            let phi = rng.random_range(0.0..std::f64::consts::TAU);
            [theta, phi]
        })
        .collect()
}

struct RestartOutcome {
    score: f64,
    params: Vec<f64>,
    iterations: usize,
    trace: Vec<TraceRow>,
}

fn run(
    objective: Objective,
    ensemble: &SourceEnsemble,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    config.validate()?;
    let problem = Problem::new(objective, ensemble, config.restriction)?;
    let warm = if config.warm_start {
        Some(problem.warm_start(ensemble, config.restriction)?)
    } else {
        None
    };
    let settings = nelder_mead::Settings {
        step: 0.5,
        max_iterations: config.max_iterations,
        x_tol: config.tolerance,
        f_tol: 1e-15,
    };

    let outcomes: Vec<RestartOutcome> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let x0 = match (&warm, r) {
                (Some(w), 0) => w.clone(),
                _ => {
                    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                    rng.set_stream(r as u64);
                    random_angles(problem.dim, &mut rng)
                }
            };
            let mut trace = Vec::new();
            let m = nelder_mead::minimize(
                |x| -problem.score(x),
                &x0,
                settings,
                |iteration, v| {
                    if config.record_trace {
                        trace.push(TraceRow { restart: r, iteration, score: -v });
                    }
                },
            );
            RestartOutcome { score: -m.value, params: m.x, iterations: m.iterations, trace }
        })
        .collect();

    // Highest score wins; ties go to the lowest restart index.
    let best_restart = (0..outcomes.len())
        .reduce(|a, b| if outcomes[b].score > outcomes[a].score { b } else { a })
        .expect("at least one restart");
    let best_strategy = problem.strategy(&outcomes[best_restart].params);
    let lab_ts = ensemble.correlation_matrices();
    let best_score = match objective {
        Objective::Chsh => chsh_from_vectors(&lab_ts[0], &best_strategy.vectors()[0]),
        Objective::Network(t) => factored_score(&lab_ts, &best_strategy.vectors(), t.kind()),
    };
    if config.validate {
        let table = correlation_table(ensemble, &best_strategy)?;
        let direct = match objective {
            Objective::Chsh => chsh_score(&table)?,
            Objective::Network(_) => network_score(&table)?,
        };
        if (direct - best_score).abs() > 1e-10 {
            return Err(Error::InvalidConfig(format!(
                "factored score {best_score} disagrees with table score {direct}"
            )));
        }
    }
    Ok(OptimizationResult {
        best_score,
        best_strategy,
        best_restart,
        restart_scores: outcomes.iter().map(|o| o.score).collect(),
        iterations: outcomes.iter().map(|o| o.iterations).collect(),
        trace: outcomes.into_iter().flat_map(|o| o.trace).collect(),
    })
}
