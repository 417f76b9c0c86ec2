//! Closed-form maxima of the CHSH, star and chain scores over local qubit
//! observables, their MUB-restricted counterparts, and the conditions under
//! which the two coincide. Everything here consumes singular triples only.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::networks::{star_terms, Topology, TopologyKind};
use crate::observables::{
    mub_chain_strategy, mub_star_strategy, theorem1_star_strategy, theorem2_chain_strategy,
    SlotRecord, WitnessStrategy,
};
use crate::states::{SingularTriple, SourceEnsemble};

/// Tolerance for the equality conditions.
pub const FLAG_TOL: f64 = 1e-10;

/// Tolerance for recognizing a classical `(1, 0, 0)` triple.
const CLASSICAL_TOL: f64 = 1e-9;

/// `2√(τ₀² + τ₁²)`
pub fn max_chsh(tau: &SingularTriple) -> f64 {
    2.0 * tau.chsh_weight().sqrt()
}

/// `½ ∏ᵢ S★_CHSH(τᵢ)^{1/n}`
pub fn star_upper_bound(triples: &[SingularTriple]) -> f64 {
    let inv = 1.0 / triples.len() as f64;
    0.5 * triples.iter().map(|t| max_chsh(t).powf(inv)).product::<f64>()
}

/// Star maximum over local qubit observables, with the strategy attaining it.
pub fn max_star_local(ensemble: &SourceEnsemble) -> (f64, WitnessStrategy) {
    (star_upper_bound(&ensemble.triples()), theorem1_star_strategy(ensemble))
}

/// `√(∏τ_{i,0}^{2/n} + ∏τ_{i,1}^{2/n})`
pub fn max_star_mub(triples: &[SingularTriple]) -> f64 {
    let inv = 2.0 / triples.len() as f64;
    let p0: f64 = triples.iter().map(|t| t.tau0.powf(inv)).product();
    let p1: f64 = triples.iter().map(|t| t.tau1.powf(inv)).product();
    (p0 + p1).sqrt()
}

/// Lowest star score that no ensemble with a classical source can reach:
/// `2^{(n−1)/2n}`.
pub fn full_nonlocality_threshold(n: usize) -> f64 {
    2f64.powf((n as f64 - 1.0) / (2.0 * n as f64))
}

fn require_chain(triples: &[SingularTriple]) -> Result<usize> {
    if triples.len() < 2 {
        return Err(Error::InvalidConfig("a chain needs at least two sources".into()));
    }
    Ok(triples.len())
}

/// `S★_2star(ρ₁⊗ρₙ) ∏_{middle} √τ_{i,0}`
pub fn chain_upper_bound(triples: &[SingularTriple]) -> Result<f64> {
    let n = require_chain(triples)?;
    let ends = star_upper_bound(&[triples[0], triples[n - 1]]);
    Ok(ends * triples[1..n - 1].iter().map(|t| t.tau0.sqrt()).product::<f64>())
}

/// Chain maximum over local qubit observables, with the strategy attaining it.
pub fn max_chain_local(ensemble: &SourceEnsemble) -> Result<(f64, WitnessStrategy)> {
    let value = chain_upper_bound(&ensemble.triples())?;
    Ok((value, theorem2_chain_strategy(ensemble)?))
}

/// `√(∏τ_{i,0} + ∏τ_{i,1})`
pub fn max_chain_mub(triples: &[SingularTriple]) -> Result<f64> {
    require_chain(triples)?;
    let p0: f64 = triples.iter().map(|t| t.tau0).product();
    let p1: f64 = triples.iter().map(|t| t.tau1).product();
    Ok((p0 + p1).sqrt())
}

/// Sufficient conditions for a per-source product of CHSH terms to reach
/// the geometric-mean bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lemma1Flags {
    /// Each source has `⟨O_0⟩ = ⟨O_1⟩`.
    pub condition1: bool,
    /// For each `z`, all sources share `⟨O_z⟩`.
    pub condition2: bool,
    /// Some source has `⟨O_0⟩ = ⟨O_1⟩ = 0`.
    pub condition3: bool,
}

impl Lemma1Flags {
    pub fn any(&self) -> bool {
        self.condition1 || self.condition2 || self.condition3
    }
}

/// Evaluates the three conditions on per-source `[⟨O_0⟩, ⟨O_1⟩]` values.
pub fn lemma1_conditions(correlators: &[[f64; 2]]) -> Lemma1Flags {
    let eq = |a: f64, b: f64| (a - b).abs() <= FLAG_TOL;
    let first = correlators.first().copied().unwrap_or([0.0; 2]);
    Lemma1Flags {
        condition1: correlators.iter().all(|c| eq(c[0], c[1])),
        condition2: correlators.iter().all(|c| eq(c[0], first[0]) && eq(c[1], first[1])),
        condition3: correlators.iter().any(|c| eq(c[0], 0.0) && eq(c[1], 0.0)),
    }
}

/// Triple-level conditions for the star maximum to equal its MUB-restricted value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corollary1Flags {
    /// `τ_{i,0} = τ_{i,1}` for every source.
    pub condition1: bool,
    /// All sources share `τ₀` and share `τ₁`.
    pub condition2: bool,
    /// Some source has `τ₀ = τ₁ = 0`.
    pub condition3: bool,
}

impl Corollary1Flags {
    pub fn any(&self) -> bool {
        self.condition1 || self.condition2 || self.condition3
    }
}

pub fn corollary1_flags(triples: &[SingularTriple]) -> Corollary1Flags {
    let pairs: Vec<[f64; 2]> = triples.iter().map(|t| [t.tau0, t.tau1]).collect();
    let l = lemma1_conditions(&pairs);
    Corollary1Flags { condition1: l.condition1, condition2: l.condition2, condition3: l.condition3 }
}

pub fn corollary1_equality(triples: &[SingularTriple]) -> bool {
    corollary1_flags(triples).any()
}

/// Necessary and sufficient star equality: the vectors `(τ_{i,0}, τ_{i,1})`
/// are pairwise parallel, or some source has both zero.
pub fn star_equality_exact(triples: &[SingularTriple]) -> bool {
    let zero = triples.iter().any(|t| t.tau0.abs() <= FLAG_TOL && t.tau1.abs() <= FLAG_TOL);
    let parallel = triples
        .iter()
        .all(|a| triples.iter().all(|b| (a.tau0 * b.tau1 - a.tau1 * b.tau0).abs() <= FLAG_TOL));
    zero || parallel
}

/// Star maximum when the first `k` sources are classical, and the bound on
/// the MUB-restricted maximum in that case.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Corollary2 {
    /// `S★_{(n−k)-star}(rest)^{(n−k)/n}`
    pub s_star: f64,
    pub s_mub_bound: f64,
}

pub fn corollary2_values(k: usize, triples: &[SingularTriple]) -> Result<Corollary2> {
    let n = triples.len();
    if k == 0 || k > n {
        return Err(Error::InvalidConfig(format!("need 1 ≤ k ≤ n = {n}, got k = {k}")));
    }
    if let Some(i) = triples[..k].iter().position(|t| !is_classical(t)) {
        return Err(Error::InvalidConfig(format!("source {i} is not classical: {:?}", triples[i])));
    }
    let rest = &triples[k..];
    let s_star = if rest.is_empty() {
        1.0
    } else {
        star_upper_bound(rest).powf(rest.len() as f64 / n as f64)
    };
    Ok(Corollary2 { s_star, s_mub_bound: 1.0 })
}

fn is_classical(t: &SingularTriple) -> bool {
    (t.tau0 - 1.0).abs() <= CLASSICAL_TOL
        && t.tau1.abs() <= CLASSICAL_TOL
        && t.tau2.abs() <= CLASSICAL_TOL
}

/// Conditions for the chain maximum to equal its MUB-restricted value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corollary3Flags {
    /// `τ_{i,0} = τ_{i,1}` for every middle source.
    pub middle_balanced: bool,
    /// The end sources satisfy the 2-star equality.
    pub ends_equal: bool,
}

impl Corollary3Flags {
    pub fn holds(&self) -> bool {
        self.middle_balanced && self.ends_equal
    }
}

pub fn corollary3_flags(triples: &[SingularTriple]) -> Result<Corollary3Flags> {
    let n = require_chain(triples)?;
    let ends = [triples[0], triples[n - 1]];
    Ok(Corollary3Flags {
        middle_balanced: triples[1..n - 1].iter().all(|t| (t.tau0 - t.tau1).abs() <= FLAG_TOL),
        ends_equal: (star_upper_bound(&ends) - max_star_mub(&ends)).abs() <= FLAG_TOL,
    })
}

pub fn corollary3_equality(triples: &[SingularTriple]) -> Result<bool> {
    Ok(corollary3_flags(triples)?.holds())
}

/// Necessary and sufficient chain equality, including the degenerate cases
/// where either maximum vanishes or both end sources have `τ₁ = 0`.
pub fn chain_equality_exact(triples: &[SingularTriple]) -> Result<bool> {
    let n = require_chain(triples)?;
    let (first, last) = (triples[0], triples[n - 1]);
    let middle = &triples[1..n - 1];
    let p0: f64 = middle.iter().map(|t| t.tau0).product();
    let vanishes = p0 <= FLAG_TOL
        || first.chsh_weight() <= FLAG_TOL * FLAG_TOL
        || last.chsh_weight() <= FLAG_TOL * FLAG_TOL;
    let parallel = (first.tau0 * last.tau1 - first.tau1 * last.tau0).abs() <= FLAG_TOL;
    let ends_unbiased = first.tau1 <= FLAG_TOL && last.tau1 <= FLAG_TOL;
    let balanced = middle.iter().all(|t| (t.tau0 - t.tau1).abs() <= FLAG_TOL);
    Ok(vanishes || (parallel && (balanced || ends_unbiased)))
}

/// Closed-form summary of one ensemble in one topology.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub topology: Topology,
    pub triples: Vec<SingularTriple>,
    pub s_local_max: f64,
    pub s_mub_max: f64,
    pub upper_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub chsh_max: Option<f64>,
    pub equality_flags: BTreeMap<String, bool>,
    pub local_strategy: Vec<SlotRecord>,
    pub mub_strategy: Vec<SlotRecord>,
    /// Some source had `τ₀ = τ₁ = 0` and a witness slot fell back to σ_z.
    pub degenerate: bool,
}

impl ScoreReport {
    pub fn new(topology: Topology, ensemble: &SourceEnsemble) -> Result<Self> {
        if topology.n() != ensemble.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} sources for a {topology}",
                ensemble.len()
            )));
        }
        match topology.kind() {
            TopologyKind::Star => Ok(Self::star(ensemble)),
            TopologyKind::Chain => Self::chain(ensemble),
        }
    }

    pub fn star(ensemble: &SourceEnsemble) -> Self {
        let triples = ensemble.triples();
        let (s_local, local) = max_star_local(ensemble);
        let mub = mub_star_strategy(ensemble);
        let terms = star_terms(&ensemble.correlation_matrices(), &local.strategy.vectors());
        let lemma = lemma1_conditions(&terms);
        let cor = corollary1_flags(&triples);
        let flags = BTreeMap::from([
            ("lemma1_condition1".to_string(), lemma.condition1),
            ("lemma1_condition2".to_string(), lemma.condition2),
            ("lemma1_condition3".to_string(), lemma.condition3),
            ("corollary1_condition1".to_string(), cor.condition1),
            ("corollary1_condition2".to_string(), cor.condition2),
            ("corollary1_condition3".to_string(), cor.condition3),
            ("corollary1".to_string(), cor.any()),
            ("exact_equality".to_string(), star_equality_exact(&triples)),
        ]);
        Self {
            topology: local.strategy.topology(),
            s_local_max: s_local,
            s_mub_max: max_star_mub(&triples),
            upper_bound: star_upper_bound(&triples),
            chsh_max: (triples.len() == 1).then(|| max_chsh(&triples[0])),
            equality_flags: flags,
            local_strategy: local.strategy.to_records(),
            mub_strategy: mub.strategy.to_records(),
            degenerate: local.degenerate || mub.degenerate,
            triples,
        }
    }

    pub fn chain(ensemble: &SourceEnsemble) -> Result<Self> {
        let triples = ensemble.triples();
        let (s_local, local) = max_chain_local(ensemble)?;
        let mub = mub_chain_strategy(ensemble)?;
        let cor = corollary3_flags(&triples)?;
        let flags = BTreeMap::from([
            ("corollary3_middle_balanced".to_string(), cor.middle_balanced),
            ("corollary3_ends_equal".to_string(), cor.ends_equal),
            ("corollary3".to_string(), cor.holds()),
            ("exact_equality".to_string(), chain_equality_exact(&triples)?),
        ]);
        Ok(Self {
            topology: local.strategy.topology(),
            s_local_max: s_local,
            s_mub_max: max_chain_mub(&triples)?,
            upper_bound: chain_upper_bound(&triples)?,
            chsh_max: None,
            equality_flags: flags,
            local_strategy: local.strategy.to_records(),
            mub_strategy: mub.strategy.to_records(),
            degenerate: local.degenerate || mub.degenerate,
            triples,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
