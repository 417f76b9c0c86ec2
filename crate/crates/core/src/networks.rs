//! Star and chain topologies, network correlators and the CHSH, star and
//! chain score functionals.
//!
//! Input bit `j` of a table index belongs to party `j`. In a star the
//! external parties are `0..n` and the central party is `n`; in a chain
//! the ends are parties `0` and `n`.

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{expectation, kron, ComplexMatrix, RealMatrix3, C_ONE};
use crate::observables::{observable, BlochVector, NetworkStrategy};
use crate::states::{SourceEnsemble, TwoQubitState};

/// Largest source count accepted by [`direct_correlator`].
pub const DIRECT_LIMIT: usize = 4;

/// Tolerance on table entries leaving [−1, 1].
const RANGE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    Star,
    Chain,
}

/// Which qubit of a source: `A` is emitted towards the lower-indexed party.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    A = 0,
    B = 1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Topology {
    kind: TopologyKind,
    n: usize,
}

impl Topology {
    pub fn new(kind: TopologyKind, n: usize) -> Result<Self> {
        match kind {
            TopologyKind::Star => Self::star(n),
            TopologyKind::Chain => Self::chain(n),
        }
    }

    pub fn star(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("a star needs at least one source".into()));
        }
        Ok(Self { kind: TopologyKind::Star, n })
    }

    pub fn chain(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidConfig("a chain needs at least two sources".into()));
        }
        Ok(Self { kind: TopologyKind::Chain, n })
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    /// Number of sources.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn parties(&self) -> usize {
        self.n + 1
    }

    /// Number of entries in a complete correlation table.
    pub fn table_len(&self) -> usize {
        1 << self.parties()
    }

    pub fn party_of(&self, source: usize, side: Side) -> usize {
        match (self.kind, side) {
            (_, Side::A) => source,
            (TopologyKind::Star, Side::B) => self.n,
            (TopologyKind::Chain, Side::B) => source + 1,
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TopologyKind::Star => write!(f, "{}-star", self.n),
            TopologyKind::Chain => write!(f, "{}-chain", self.n),
        }
    }
}

/// Bit of party `party` in table index `index`.
pub fn input_bit(index: usize, party: usize) -> u8 {
    ((index >> party) & 1) as u8
}

/// `"0110"`-style label, party 0 first.
pub fn input_label(index: usize, parties: usize) -> String {
    (0..parties).map(|p| if input_bit(index, p) == 1 { '1' } else { '0' }).collect()
}

fn parse_label(label: &str, parties: usize) -> Result<usize> {
    if label.len() != parties {
        return Err(Error::IncompleteTable(format!(
            "input label {label:?} should have {parties} bits"
        )));
    }
    label.chars().enumerate().try_fold(0usize, |acc, (p, c)| match c {
        '0' => Ok(acc),
        '1' => Ok(acc | (1 << p)),
        _ => Err(Error::IncompleteTable(format!("bad input label {label:?}"))),
    })
}

/// Expected output parity for every joint input of a network.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationTable {
    topology: Topology,
    values: Vec<f64>,
    std_errors: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct TableRow {
    input_bits: String,
    value: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    std_error: Option<String>,
}

impl CorrelationTable {
    pub fn new(topology: Topology, values: Vec<f64>) -> Result<Self> {
        if values.len() != topology.table_len() {
            return Err(Error::IncompleteTable(format!(
                "{} entries, {} expected for a {}",
                values.len(),
                topology.table_len(),
                topology
            )));
        }
        if let Some(v) = values.iter().find(|v| v.abs().is_nan() || v.abs() > 1.0 + RANGE_TOL) {
            return Err(Error::OutOfRange { name: "correlator", value: *v });
        }
        Ok(Self { topology, values, std_errors: None })
    }

    /// Table of sample means with their standard errors.
    pub fn with_std_errors(mut self, std_errors: Vec<f64>) -> Result<Self> {
        if std_errors.len() != self.values.len() {
            return Err(Error::ShapeMismatch("one std_error per entry".into()));
        }
        self.std_errors = Some(std_errors);
        Ok(self)
    }

    pub fn zeros(topology: Topology) -> Self {
        Self { topology, values: vec![0.0; topology.table_len()], std_errors: None }
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn std_errors(&self) -> Option<&[f64]> {
        self.std_errors.as_deref()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let parties = self.topology.parties();
        for (i, v) in self.values.iter().enumerate() {
            out.serialize(TableRow {
                input_bits: input_label(i, parties),
                value: format!("{v:.16e}"),
                std_error: self.std_errors.as_ref().map(|e| format!("{:.16e}", e[i])),
            })?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(topology: Topology, r: R) -> Result<Self> {
        let mut values = vec![f64::NAN; topology.table_len()];
        let mut errors = vec![f64::NAN; topology.table_len()];
        let mut has_errors = false;
        let mut reader = csv::Reader::from_reader(r);
        for row in reader.deserialize::<TableRow>() {
            let row = row?;
            let idx = parse_label(&row.input_bits, topology.parties())?;
            values[idx] = parse_float(&row.value)?;
            if let Some(e) = row.std_error {
                errors[idx] = parse_float(&e)?;
                has_errors = true;
            }
        }
        if let Some(i) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::IncompleteTable(format!(
                "missing input {}",
                input_label(i, topology.parties())
            )));
        }
        let table = Self::new(topology, values)?;
        if has_errors {
            table.with_std_errors(errors)
        } else {
            Ok(table)
        }
    }
}

fn parse_float(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::IncompleteTable(format!("not a number: {s:?}")))
}

/// `⟨α·σ ⊗ β·σ⟩_ρ` via a 4×4 trace.
pub fn pair_correlator(rho: &TwoQubitState, a: &BlochVector, b: &BlochVector) -> Result<f64> {
    expectation(&kron(&observable(a), &observable(b)), rho.matrix())
}

fn check_shape(ensemble: &SourceEnsemble, strategy: &NetworkStrategy) -> Result<()> {
    if ensemble.len() != strategy.topology().n() {
        return Err(Error::ShapeMismatch(format!(
            "{} sources for a {}",
            ensemble.len(),
            strategy.topology()
        )));
    }
    Ok(())
}

/// Observables selected for source `i` at table index `index`.
fn selected(strategy: &NetworkStrategy, i: usize, index: usize) -> (&BlochVector, &BlochVector) {
    let t = strategy.topology();
    let s = strategy.source(i);
    (
        s.a_side.select(input_bit(index, t.party_of(i, Side::A))),
        s.b_side.select(input_bit(index, t.party_of(i, Side::B))),
    )
}

fn check_index(strategy: &NetworkStrategy, index: usize) -> Result<()> {
    if index >= strategy.topology().table_len() {
        return Err(Error::ShapeMismatch(format!("input index {index} out of range")));
    }
    Ok(())
}

/// Product over sources of pair correlators.
pub fn network_correlator(
    ensemble: &SourceEnsemble,
    strategy: &NetworkStrategy,
    index: usize,
) -> Result<f64> {
    check_shape(ensemble, strategy)?;
    check_index(strategy, index)?;
    ensemble.states().iter().enumerate().try_fold(1.0, |acc, (i, rho)| {
        let (a, b) = selected(strategy, i, index);
        Ok(acc * pair_correlator(rho, a, b)?)
    })
}

/// One trace over the full `4ⁿ`-dimensional network state.
pub fn direct_correlator(
    ensemble: &SourceEnsemble,
    strategy: &NetworkStrategy,
    index: usize,
) -> Result<f64> {
    check_shape(ensemble, strategy)?;
    check_index(strategy, index)?;
    if ensemble.len() > DIRECT_LIMIT {
        return Err(Error::TooLarge { n: ensemble.len(), limit: DIRECT_LIMIT });
    }
    let mut state = ComplexMatrix::from_fn(1, |_, _| C_ONE);
    let mut obs = ComplexMatrix::from_fn(1, |_, _| C_ONE);
    for (i, rho) in ensemble.states().iter().enumerate() {
        let (a, b) = selected(strategy, i, index);
        state = kron(&state, rho.matrix());
        obs = kron(&obs, &kron(&observable(a), &observable(b)));
    }
    expectation(&obs, &state)
}

/// Full table from [`network_correlator`].
pub fn correlation_table(
    ensemble: &SourceEnsemble,
    strategy: &NetworkStrategy,
) -> Result<CorrelationTable> {
    let t = strategy.topology();
    let values = (0..t.table_len())
        .map(|i| network_correlator(ensemble, strategy, i))
        .collect::<Result<Vec<_>>>()?;
    CorrelationTable::new(t, values)
}

/// Full table from [`direct_correlator`].
pub fn direct_correlation_table(
    ensemble: &SourceEnsemble,
    strategy: &NetworkStrategy,
) -> Result<CorrelationTable> {
    let t = strategy.topology();
    let values = (0..t.table_len())
        .map(|i| direct_correlator(ensemble, strategy, i))
        .collect::<Result<Vec<_>>>()?;
    CorrelationTable::new(t, values)
}

fn sign(bit: usize) -> f64 {
    if bit & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `Σ_{x,y} (−1)^{xy} ⟨A_x ⊗ B_y⟩` on a single-source table.
pub fn chsh_score(table: &CorrelationTable) -> Result<f64> {
    if table.topology().n() != 1 {
        return Err(Error::IncompleteTable("CHSH needs a single-source table".into()));
    }
    Ok((0..4).map(|i| sign((i & 1) * (i >> 1)) * table.get(i)).sum())
}

fn require(table: &CorrelationTable, kind: TopologyKind) -> Result<usize> {
    if table.topology().kind() != kind {
        return Err(Error::IncompleteTable(format!(
            "expected a {kind:?} table, got a {}",
            table.topology()
        )));
    }
    Ok(table.topology().n())
}

/// `2⁻ⁿ Σ_x (−1)^{z·parity(x)} ⟨O_{x,z}⟩` over the external inputs.
pub fn star_i(table: &CorrelationTable, z: u8) -> Result<f64> {
    let n = require(table, TopologyKind::Star)?;
    let zbit = usize::from(z & 1) << n;
    let sum: f64 = (0..1usize << n)
        .map(|x| sign(usize::from(z) * x.count_ones() as usize) * table.get(x | zbit))
        .sum();
    Ok(sum / (1u64 << n) as f64)
}

/// `Σ_z |I_z|^{1/n}`.
pub fn star_score(table: &CorrelationTable) -> Result<f64> {
    let n = require(table, TopologyKind::Star)?;
    Ok(star_i(table, 0)?.abs().powf(1.0 / n as f64) + star_i(table, 1)?.abs().powf(1.0 / n as f64))
}

/// `¼ Σ_{x,y} (−1)^{z(x+y)} ⟨O_{x,z,…,z,y}⟩`.
pub fn chain_j(table: &CorrelationTable, z: u8) -> Result<f64> {
    let n = require(table, TopologyKind::Chain)?;
    let middle = if z & 1 == 1 { ((1usize << n) - 1) & !1 } else { 0 };
    let mut sum = 0.0;
    for x in 0..2usize {
        for y in 0..2usize {
            let idx = x | middle | (y << n);
            sum += sign(usize::from(z) * (x + y)) * table.get(idx);
        }
    }
    Ok(sum / 4.0)
}

/// `Σ_z |J_z|^{1/2}`.
pub fn chain_score(table: &CorrelationTable) -> Result<f64> {
    Ok(chain_j(table, 0)?.abs().sqrt() + chain_j(table, 1)?.abs().sqrt())
}

/// Star or chain score, whichever the table's topology calls for.
pub fn network_score(table: &CorrelationTable) -> Result<f64> {
    match table.topology().kind() {
        TopologyKind::Star => star_score(table),
        TopologyKind::Chain => chain_score(table),
    }
}

/// Lab-frame Bloch components indexed `[source][side][input]`.
pub type SlotVectors = Vec<[[[f64; 3]; 2]; 2]>;

impl NetworkStrategy {
    pub fn vectors(&self) -> SlotVectors {
        self.slots()
            .iter()
            .map(|s| {
                [s.a_side, s.b_side].map(|o| [o.on_input_0.components(), o.on_input_1.components()])
            })
            .collect()
    }
}

/// Per-source `⟨O_z⟩ = Σ_x (−1)^{xz} ⟨A_x B_z⟩` with the external side
/// summed. `external` selects which side carries the summed input.
fn summed_pair(t: &RealMatrix3, v: &[[[f64; 3]; 2]; 2], external: Side, z: usize) -> f64 {
    let s = sign(z);
    match external {
        Side::A => t.bilinear(v[0][0], v[1][z]) + s * t.bilinear(v[0][1], v[1][z]),
        Side::B => t.bilinear(v[0][z], v[1][0]) + s * t.bilinear(v[0][z], v[1][1]),
    }
}

/// Per-source terms `[⟨O_0⟩, ⟨O_1⟩]` of the factored star score.
pub fn star_terms(ts: &[RealMatrix3], v: &SlotVectors) -> Vec<[f64; 2]> {
    ts.iter()
        .zip(v)
        .map(|(t, s)| [summed_pair(t, s, Side::A, 0), summed_pair(t, s, Side::A, 1)])
        .collect()
}

/// `½ Σ_z |∏ᵢ ⟨Oⁱ_z⟩|^{1/n}`.
pub fn star_score_from_terms(terms: &[[f64; 2]]) -> f64 {
    let inv = 1.0 / terms.len() as f64;
    let p0: f64 = terms.iter().map(|t| t[0]).product();
    let p1: f64 = terms.iter().map(|t| t[1]).product();
    0.5 * (p0.abs().powf(inv) + p1.abs().powf(inv))
}

/// Factored chain terms: `(first, middle, last)` where `first[z]` and
/// `last[z]` are the summed end correlators and `middle[i][z]` the plain
/// `⟨A_z B_z⟩` of each interior source.
pub fn chain_terms(ts: &[RealMatrix3], v: &SlotVectors) -> ([f64; 2], Vec<[f64; 2]>, [f64; 2]) {
    let n = ts.len();
    let first = [0, 1].map(|z| summed_pair(&ts[0], &v[0], Side::A, z));
    let last = [0, 1].map(|z| summed_pair(&ts[n - 1], &v[n - 1], Side::B, z));
    let middle =
        (1..n - 1).map(|i| [0, 1].map(|z| ts[i].bilinear(v[i][0][z], v[i][1][z]))).collect();
    (first, middle, last)
}

/// `Σ_z √|¼ first_z · ∏ middle_z · last_z|`.
pub fn chain_score_from_terms(first: [f64; 2], middle: &[[f64; 2]], last: [f64; 2]) -> f64 {
    (0..2)
        .map(|z| {
            let m: f64 = middle.iter().map(|t| t[z]).product();
            (0.25 * first[z] * m * last[z]).abs().sqrt()
        })
        .sum()
}

/// Factored single-source CHSH value `⟨O_0⟩ + ⟨O_1⟩`.
pub fn chsh_from_vectors(t: &RealMatrix3, v: &[[[f64; 3]; 2]; 2]) -> f64 {
    summed_pair(t, v, Side::A, 0) + summed_pair(t, v, Side::A, 1)
}

/// Star or chain score through the factored product form.
pub fn factored_score(ts: &[RealMatrix3], v: &SlotVectors, kind: TopologyKind) -> f64 {
    match kind {
        TopologyKind::Star => star_score_from_terms(&star_terms(ts, v)),
        TopologyKind::Chain => {
            let (f, m, l) = chain_terms(ts, v);
            chain_score_from_terms(f, &m, l)
        }
    }
}

/// Score of a strategy on an ensemble through the factored form.
pub fn strategy_score(ensemble: &SourceEnsemble, strategy: &NetworkStrategy) -> Result<f64> {
    check_shape(ensemble, strategy)?;
    Ok(factored_score(
        &ensemble.correlation_matrices(),
        &strategy.vectors(),
        strategy.topology().kind(),
    ))
}
