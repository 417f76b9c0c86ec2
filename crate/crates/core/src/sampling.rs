//! Finite-shot simulation of network measurements.
//!
//! Each source's parity outcome is ±1 with `P(+) = tr(Π₊ρ)`, where `Π₊`
//! projects onto the +1 eigenspace of `A⊗B`. Sources are independent, so
//! the network parity is +1 with probability `(1 + ∏(2pᵢ − 1))/2` and the
//! number of +1 shots at an input point is binomial.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigh, kron};
use crate::networks::{input_bit, network_score, CorrelationTable, Side, Topology};
use crate::observables::{observable, BlochVector, NetworkStrategy};
use crate::states::{SourceEnsemble, TwoQubitState};

/// Number of bootstrap resamples behind a score's standard error.
pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// Probabilities this close to 0 or 1 are treated as exact.
const CERTAIN_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub shots: u64,
}

impl ShotEstimate {
    /// Mean and standard error of `plus` outcomes of +1 among `shots` ±1 outcomes.
    fn from_counts(plus: u64, shots: u64) -> Self {
        let n = shots as f64;
        let mean = (2.0 * plus as f64 - n) / n;
        let var = if shots > 1 { (1.0 - mean * mean).max(0.0) * n / (n - 1.0) } else { 0.0 };
        Self { mean, std_error: (var / n).sqrt(), shots }
    }
}

/// `P(+1)` for the parity of `α·σ ⊗ β·σ` on `rho`.
pub fn plus_probability(rho: &TwoQubitState, a: &BlochVector, b: &BlochVector) -> Result<f64> {
    let eig = eigh(&kron(&observable(a), &observable(b)))?;
    let (projector, count) = eig.projector(1.0, 1e-9);
    if count != 2 {
        return Err(Error::Degenerate(format!(
            "product observable has {count} eigenvalues at +1, expected 2"
        )));
    }
    let p = crate::linalg::expectation(&projector, rho.matrix())?;
    Ok(snap(p))
}

fn snap(p: f64) -> f64 {
    if p < CERTAIN_TOL {
        0.0
    } else if p > 1.0 - CERTAIN_TOL {
        1.0
    } else {
        p
    }
}

fn binomial(shots: u64, p: f64, rng: &mut ChaCha8Rng) -> u64 {
    Binomial::new(shots, p).expect("p in [0, 1]").sample(rng)
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Estimates `⟨α·σ ⊗ β·σ⟩_ρ` from `shots` simulated parity outcomes.
pub fn sample_pair(
    rho: &TwoQubitState,
    a: &BlochVector,
    b: &BlochVector,
    shots: u64,
    seed: u64,
) -> Result<ShotEstimate> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let p = plus_probability(rho, a, b)?;
    let plus = binomial(shots, p, &mut rng_for(seed, 0));
    Ok(ShotEstimate::from_counts(plus, shots))
}

/// Score estimate together with the estimated table it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreEstimate {
    /// Star or chain score of the estimated table; `std_error` is the
    /// bootstrap standard deviation.
    pub score: ShotEstimate,
    pub table: CorrelationTable,
}

/// Samples every input point of the network with `shots` shots and
/// evaluates the topology's score on the estimated table.
///
/// Input point `i` draws from stream `i` of a generator seeded by `seed`;
/// bootstrap resample `r` draws from stream `table_len + r`.
pub fn estimate_scores(
    topology: Topology,
    ensemble: &SourceEnsemble,
    strategy: &NetworkStrategy,
    shots: u64,
    seed: u64,
) -> Result<ScoreEstimate> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    if strategy.topology() != topology || ensemble.len() != topology.n() {
        return Err(Error::ShapeMismatch(format!(
            "strategy for a {}, {} sources, topology {topology}",
            strategy.topology(),
            ensemble.len()
        )));
    }
    let len = topology.table_len();
    let points: Vec<ShotEstimate> = (0..len)
        .into_par_iter()
        .map(|index| {
            let mut bias = 1.0;
            for (i, rho) in ensemble.states().iter().enumerate() {
                let s = strategy.source(i);
                let a = s.a_side.select(input_bit(index, topology.party_of(i, Side::A)));
                let b = s.b_side.select(input_bit(index, topology.party_of(i, Side::B)));
                bias *= 2.0 * plus_probability(rho, a, b)? - 1.0;
            }
            let p = snap(0.5 * (1.0 + bias));
            let plus = binomial(shots, p, &mut rng_for(seed, index as u64));
            Ok(ShotEstimate::from_counts(plus, shots))
        })
        .collect::<Result<_>>()?;

    let means: Vec<f64> = points.iter().map(|p| p.mean).collect();
    let table = CorrelationTable::new(topology, means.clone())?
        .with_std_errors(points.iter().map(|p| p.std_error).collect())?;
    let score = network_score(&table)?;

    let resampled: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_for(seed, (len + r) as u64);
            let values = means
                .iter()
                .map(|m| {
                    let plus = binomial(shots, snap(0.5 * (1.0 + m)), &mut rng);
                    ShotEstimate::from_counts(plus, shots).mean
                })
                .collect();
            network_score(&CorrelationTable::new(topology, values)?)
        })
        .collect::<Result<_>>()?;
    let avg = resampled.iter().sum::<f64>() / resampled.len() as f64;
    let var =
        resampled.iter().map(|s| (s - avg).powi(2)).sum::<f64>() / (resampled.len() - 1) as f64;

    Ok(ScoreEstimate { score: ShotEstimate { mean: score, std_error: var.sqrt(), shots }, table })
}
