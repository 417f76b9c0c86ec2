//! Qubit observables `α⃗·σ⃗`, network strategies, and the named optimal
//! observable families for CHSH, star and chain networks.
//!
//! The named constructors build vectors in each source's canonical frame
//! (correlation matrix `diag(τ₁, τ₂, τ₀)`) and rotate them back to the lab
//! frame with the source's SVD factors, so they are optimal for any state,
//! not only Bell-diagonal ones.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{pauli, ComplexMatrix, Rotation3};
use crate::networks::{Side, Topology, TopologyKind};
use crate::states::{SingularTriple, SourceEnsemble};

const UNIT_TOL: f64 = 1e-12;

/// Unit vector on the Bloch sphere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct BlochVector([f64; 3]);

impl BlochVector {
    pub const X: Self = Self([1.0, 0.0, 0.0]);
    pub const Y: Self = Self([0.0, 1.0, 0.0]);
    pub const Z: Self = Self([0.0, 0.0, 1.0]);

    pub fn new(v: [f64; 3]) -> Result<Self> {
        let norm = norm3(v);
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::NonUnitVector { norm });
        }
        Ok(Self(v))
    }

    /// Scales a nonzero vector onto the sphere.
    pub fn normalized(v: [f64; 3]) -> Result<Self> {
        let norm = norm3(v);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NonUnitVector { norm });
        }
        Ok(Self(v.map(|c| c / norm)))
    }

    /// Polar angle `theta` from +z, azimuth `phi` from +x.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self([st * cp, st * sp, ct])
    }

    /// Inverse of [`from_angles`](Self::from_angles), with `theta ∈ [0, π]`
    /// and `phi ∈ [0, 2π)`.
    pub fn to_angles(&self) -> (f64, f64) {
        let [x, y, z] = self.0;
        let theta = z.clamp(-1.0, 1.0).acos();
        let mut phi = y.atan2(x);
        if phi < 0.0 {
            phi += std::f64::consts::TAU;
        }
        (theta, phi)
    }

    pub fn components(&self) -> [f64; 3] {
        self.0
    }

    pub fn rotated(&self, r: &Rotation3) -> Self {
        Self(r.apply(self.0))
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.0.iter().zip(other.0).map(|(a, b)| a * b).sum()
    }
}

impl<'de> Deserialize<'de> for BlochVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = <[f64; 3]>::deserialize(d)?;
        BlochVector::new(v).map_err(serde::de::Error::custom)
    }
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// `α⃗·σ⃗`: Hermitian, traceless, eigenvalues ±1.
pub fn observable(alpha: &BlochVector) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(2);
    for (axis, &c) in alpha.0.iter().enumerate() {
        m = &m + &pauli(axis).scale_real(c);
    }
    m
}

/// A ±1-valued qubit measurement chosen by one input bit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DichotomicObservable {
    pub on_input_0: BlochVector,
    pub on_input_1: BlochVector,
}

impl DichotomicObservable {
    pub fn new(on_input_0: BlochVector, on_input_1: BlochVector) -> Self {
        Self { on_input_0, on_input_1 }
    }

    pub fn constant(v: BlochVector) -> Self {
        Self::new(v, v)
    }

    /// σ_z on input 0, σ_x on input 1.
    pub fn mub_zx() -> Self {
        Self::new(BlochVector::Z, BlochVector::X)
    }

    pub fn select(&self, bit: u8) -> &BlochVector {
        if bit == 0 {
            &self.on_input_0
        } else {
            &self.on_input_1
        }
    }

    pub fn rotated(&self, r: &Rotation3) -> Self {
        Self::new(self.on_input_0.rotated(r), self.on_input_1.rotated(r))
    }
}

/// Observables for the two qubits of one source.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceSlots {
    pub a_side: DichotomicObservable,
    pub b_side: DichotomicObservable,
}

impl SourceSlots {
    pub fn side(&self, side: Side) -> &DichotomicObservable {
        match side {
            Side::A => &self.a_side,
            Side::B => &self.b_side,
        }
    }
}

/// An observable for every qubit slot of a star or chain network.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkStrategy {
    topology: Topology,
    slots: Vec<SourceSlots>,
}

/// One entry of the strategy JSON list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub party: usize,
    pub source: usize,
    pub input0: BlochVector,
    pub input1: BlochVector,
}

impl NetworkStrategy {
    pub fn new(topology: Topology, slots: Vec<SourceSlots>) -> Result<Self> {
        if slots.len() != topology.n() {
            return Err(Error::ShapeMismatch(format!(
                "{} source slots for a {} network",
                slots.len(),
                topology
            )));
        }
        Ok(Self { topology, slots })
    }

    /// Every slot measures σ_z regardless of input.
    pub fn all_z(topology: Topology) -> Self {
        let z = DichotomicObservable::constant(BlochVector::Z);
        Self { topology, slots: vec![SourceSlots { a_side: z, b_side: z }; topology.n()] }
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn slots(&self) -> &[SourceSlots] {
        &self.slots
    }

    pub fn source(&self, i: usize) -> &SourceSlots {
        &self.slots[i]
    }

    pub fn to_records(&self) -> Vec<SlotRecord> {
        let mut out = Vec::with_capacity(2 * self.slots.len());
        for (source, s) in self.slots.iter().enumerate() {
            for side in [Side::A, Side::B] {
                let obs = s.side(side);
                out.push(SlotRecord {
                    party: self.topology.party_of(source, side),
                    source,
                    input0: obs.on_input_0,
                    input1: obs.on_input_1,
                });
            }
        }
        out
    }

    /// Rebuilds a strategy from slot records; every (party, source) slot of
    /// the topology must appear exactly once.
    pub fn from_records(topology: Topology, records: &[SlotRecord]) -> Result<Self> {
        let n = topology.n();
        let mut found: Vec<[Option<DichotomicObservable>; 2]> = vec![[None, None]; n];
        for r in records {
            if r.source >= n {
                return Err(Error::ShapeMismatch(format!("source {} out of range", r.source)));
            }
            let side = topology.side_of(r.source, r.party).ok_or_else(|| {
                Error::ShapeMismatch(format!(
                    "party {} does not hold a qubit of source {}",
                    r.party, r.source
                ))
            })?;
            let cell = &mut found[r.source][side as usize];
            if cell.is_some() {
                return Err(Error::ShapeMismatch(format!(
                    "duplicate slot (party {}, source {})",
                    r.party, r.source
                )));
            }
            *cell = Some(DichotomicObservable::new(r.input0, r.input1));
        }
        let slots = found
            .into_iter()
            .enumerate()
            .map(|(i, [a, b])| match (a, b) {
                (Some(a_side), Some(b_side)) => Ok(SourceSlots { a_side, b_side }),
                _ => Err(Error::ShapeMismatch(format!("missing slot for source {i}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(topology, slots)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_records()).expect("records serialize")
    }

    pub fn from_json(topology: Topology, s: &str) -> Result<Self> {
        let records: Vec<SlotRecord> = serde_json::from_str(s)?;
        Self::from_records(topology, &records)
    }

    pub fn load(topology: Topology, path: &Path) -> Result<Self> {
        Self::from_json(topology, &std::fs::read_to_string(path)?)
    }
}

/// Which party measures in mutually unbiased bases in a CHSH-optimal pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChshVariant {
    /// A ∈ {σ_z, σ_x}; B tilted by the triple.
    MubOnA,
    /// B ∈ {σ_z, σ_x}; A tilted by the triple.
    MubOnB,
}

/// `(τ₀ ẑ + (−1)^bit τ₁ x̂)/√(τ₀² + τ₁²)`
fn tilted(tau0: f64, tau1: f64, bit: u8) -> Result<BlochVector> {
    if tau0 == 0.0 && tau1 == 0.0 {
        return Err(Error::Degenerate("τ₀ = τ₁ = 0".into()));
    }
    let sign = if bit == 0 { 1.0 } else { -1.0 };
    BlochVector::normalized([sign * tau1, 0.0, tau0])
}

fn tilted_pair(tau0: f64, tau1: f64) -> Result<DichotomicObservable> {
    Ok(DichotomicObservable::new(tilted(tau0, tau1, 0)?, tilted(tau0, tau1, 1)?))
}

/// CHSH-optimal observables in the canonical frame of a state with triple
/// `tau`. Returns `(A, B)`.
pub fn chsh_optimal_pair(
    tau: &SingularTriple,
    variant: ChshVariant,
) -> Result<(DichotomicObservable, DichotomicObservable)> {
    let tilt = tilted_pair(tau.tau0, tau.tau1)?;
    Ok(match variant {
        ChshVariant::MubOnA => (DichotomicObservable::mub_zx(), tilt),
        ChshVariant::MubOnB => (tilt, DichotomicObservable::mub_zx()),
    })
}

/// External observable maximizing the star score when the central party is
/// frozen to σ_z/σ_x: weights are geometric means of τ₀ and τ₁.
pub fn mub_star_external(triples: &[SingularTriple], x: u8) -> Result<BlochVector> {
    let n = triples.len() as f64;
    let w0 = triples.iter().map(|t| t.tau0).product::<f64>().powf(1.0 / n);
    let w1 = triples.iter().map(|t| t.tau1).product::<f64>().powf(1.0 / n);
    tilted(w0, w1, x)
}

/// Central MUB observable of the star: σ_z on every qubit for `z = 0`, σ_x for `z = 1`.
pub fn mub_central_star(n: usize, z: u8) -> Vec<BlochVector> {
    vec![if z == 0 { BlochVector::Z } else { BlochVector::X }; n]
}

/// External observable maximizing the chain score when central parties are
/// frozen to σ_z⊗σ_z / σ_x⊗σ_x: weights `∏√τ_{i,0}` and `∏√τ_{i,1}`.
pub fn mub_chain_external(triples: &[SingularTriple], x: u8) -> Result<BlochVector> {
    let w0 = triples.iter().map(|t| t.tau0.sqrt()).product::<f64>();
    let w1 = triples.iter().map(|t| t.tau1.sqrt()).product::<f64>();
    tilted(w0, w1, x)
}

/// Central MUB pair of a chain party: (σ_z, σ_z) for `z = 0`, (σ_x, σ_x) for `z = 1`.
pub fn mub_chain_central(z: u8) -> (BlochVector, BlochVector) {
    let v = if z == 0 { BlochVector::Z } else { BlochVector::X };
    (v, v)
}

/// A named strategy together with a flag raised when some source had
/// `τ₀ = τ₁ = 0` and σ_z was substituted.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessStrategy {
    pub strategy: NetworkStrategy,
    pub degenerate: bool,
}

/// Canonical-frame slots rotated into each source's lab frame.
fn to_lab(ensemble: &SourceEnsemble, canonical: Vec<SourceSlots>) -> Vec<SourceSlots> {
    ensemble
        .frames()
        .iter()
        .zip(canonical)
        .map(|(f, s)| SourceSlots {
            a_side: s.a_side.rotated(&f.ra.transpose()),
            b_side: s.b_side.rotated(&f.rb.transpose()),
        })
        .collect()
}

fn or_z(r: Result<DichotomicObservable>, degenerate: &mut bool) -> DichotomicObservable {
    r.unwrap_or_else(|_| {
        *degenerate = true;
        DichotomicObservable::constant(BlochVector::Z)
    })
}

/// Per-source CHSH-optimal pairs (MUB on the external A side): the star
/// strategy attaining the geometric-mean bound.
pub fn theorem1_star_strategy(ensemble: &SourceEnsemble) -> WitnessStrategy {
    let topology = Topology::star(ensemble.len()).expect("ensemble is nonempty");
    let mut degenerate = false;
    let canonical = ensemble
        .triples()
        .iter()
        .map(|t| SourceSlots {
            a_side: DichotomicObservable::mub_zx(),
            b_side: or_z(tilted_pair(t.tau0, t.tau1), &mut degenerate),
        })
        .collect();
    let strategy = NetworkStrategy::new(topology, to_lab(ensemble, canonical)).expect("shape");
    WitnessStrategy { strategy, degenerate }
}

/// Star strategy with the central party frozen to σ_z / σ_x and the
/// external parties on the geometric-mean tilted vector.
pub fn mub_star_strategy(ensemble: &SourceEnsemble) -> WitnessStrategy {
    let topology = Topology::star(ensemble.len()).expect("ensemble is nonempty");
    let triples = ensemble.triples();
    let mut degenerate = false;
    let external = or_z(
        mub_star_external(&triples, 0)
            .and_then(|v0| Ok(DichotomicObservable::new(v0, mub_star_external(&triples, 1)?))),
        &mut degenerate,
    );
    let canonical = triples
        .iter()
        .map(|_| SourceSlots { a_side: external, b_side: DichotomicObservable::mub_zx() })
        .collect();
    let strategy = NetworkStrategy::new(topology, to_lab(ensemble, canonical)).expect("shape");
    WitnessStrategy { strategy, degenerate }
}

/// Chain strategy attaining the tight chain bound: CHSH-optimal ends and
/// σ_z⊗σ_z on every middle source.
pub fn theorem2_chain_strategy(ensemble: &SourceEnsemble) -> Result<WitnessStrategy> {
    let topology = Topology::chain(ensemble.len())?;
    let triples = ensemble.triples();
    let n = triples.len();
    let mut degenerate = false;
    let z = DichotomicObservable::constant(BlochVector::Z);
    let canonical = triples
        .iter()
        .enumerate()
        .map(|(i, t)| {
            if i == 0 {
                SourceSlots {
                    a_side: DichotomicObservable::mub_zx(),
                    b_side: or_z(tilted_pair(t.tau0, t.tau1), &mut degenerate),
                }
            } else if i == n - 1 {
                SourceSlots {
                    a_side: or_z(tilted_pair(t.tau0, t.tau1), &mut degenerate),
                    b_side: DichotomicObservable::mub_zx(),
                }
            } else {
                SourceSlots { a_side: z, b_side: z }
            }
        })
        .collect();
    let strategy = NetworkStrategy::new(topology, to_lab(ensemble, canonical))?;
    Ok(WitnessStrategy { strategy, degenerate })
}

/// Chain strategy with central parties frozen to σ_z⊗σ_z / σ_x⊗σ_x.
pub fn mub_chain_strategy(ensemble: &SourceEnsemble) -> Result<WitnessStrategy> {
    let topology = Topology::chain(ensemble.len())?;
    let triples = ensemble.triples();
    let n = triples.len();
    let mut degenerate = false;
    let external = or_z(
        mub_chain_external(&triples, 0)
            .and_then(|v0| Ok(DichotomicObservable::new(v0, mub_chain_external(&triples, 1)?))),
        &mut degenerate,
    );
    let central = DichotomicObservable::mub_zx();
    let canonical = (0..n)
        .map(|i| SourceSlots {
            a_side: if i == 0 { external } else { central },
            b_side: if i == n - 1 { external } else { central },
        })
        .collect();
    let strategy = NetworkStrategy::new(topology, to_lab(ensemble, canonical))?;
    Ok(WitnessStrategy { strategy, degenerate })
}

/// Single-source CHSH strategy (a 1-star) from [`chsh_optimal_pair`].
pub fn chsh_strategy(ensemble: &SourceEnsemble, variant: ChshVariant) -> Result<NetworkStrategy> {
    if ensemble.len() != 1 {
        return Err(Error::ShapeMismatch("CHSH needs exactly one source".into()));
    }
    let tau = ensemble.triples()[0];
    let (a_side, b_side) = chsh_optimal_pair(&tau, variant)?;
    NetworkStrategy::new(Topology::star(1)?, to_lab(ensemble, vec![SourceSlots { a_side, b_side }]))
}

impl Topology {
    /// The side (A or B) of `source` held by `party`, if any.
    pub fn side_of(&self, source: usize, party: usize) -> Option<Side> {
        [Side::A, Side::B].into_iter().find(|&s| self.party_of(source, s) == party)
    }

    pub fn is_central(&self, source: usize, side: Side) -> bool {
        let party = self.party_of(source, side);
        match self.kind() {
            TopologyKind::Star => party == self.n(),
            TopologyKind::Chain => party != 0 && party != self.n(),
        }
    }
}
