//! Two-qubit sources: density matrices, correlation matrices and their
//! canonical diagonal form, and the noise families used in the sweeps.
//!
//! Basis order for every 4x4 matrix is |00⟩, |01⟩, |10⟩, |11⟩.

use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    eigh, expectation, kron, pauli, signed_svd3, so3_to_su2, ComplexMatrix, RealMatrix3,
    SignedSvd3, RUNTIME_TOL,
};

/// Eigenvalue floor for constructed Bell-diagonal states.
pub const PSD_TOL: f64 = 1e-12;

/// A validated two-qubit density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoQubitState {
    matrix: ComplexMatrix,
}

/// Singular values of a correlation matrix, `τ₀ ≥ τ₁ ≥ |τ₂|`, with the sign
/// of the determinant carried by `τ₂`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularTriple {
    pub tau0: f64,
    pub tau1: f64,
    pub tau2: f64,
}

impl SingularTriple {
    pub const fn new(tau0: f64, tau1: f64, tau2: f64) -> Self {
        Self { tau0, tau1, tau2 }
    }

    /// The Bell state triple (1, 1, −1).
    pub const BELL: Self = Self::new(1.0, 1.0, -1.0);

    /// The classical coin-flip triple (1, 0, 0).
    pub const CLASSICAL: Self = Self::new(1.0, 0.0, 0.0);

    /// `τ₀² + τ₁²`
    pub fn chsh_weight(&self) -> f64 {
        self.tau0 * self.tau0 + self.tau1 * self.tau1
    }

    /// `1 ≥ τ₀ ≥ τ₁ ≥ |τ₂| ≥ 0` up to `tol`.
    pub fn is_ordered(&self, tol: f64) -> bool {
        1.0 + tol >= self.tau0 && self.tau0 + tol >= self.tau1 && self.tau1 + tol >= self.tau2.abs()
    }
}

#[derive(Serialize, Deserialize)]
struct StateJson {
    re: [[f64; 4]; 4],
    im: [[f64; 4]; 4],
}

impl TwoQubitState {
    /// Validates Hermiticity, unit trace and positivity (eigenvalues ≥ −1e-10).
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if matrix.dim() != 4 {
            return Err(Error::DimensionMismatch { expected: 4, actual: matrix.dim() });
        }
        let dev = matrix.hermitian_deviation();
        if dev > RUNTIME_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {dev:.3e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > RUNTIME_TOL || tr.im.abs() > RUNTIME_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let eig = eigh(&matrix)?;
        if let Some((k, &lambda)) = eig.values.iter().enumerate().find(|(_, &l)| l < -RUNTIME_TOL) {
            return Err(Error::InvalidState(format!(
                "eigenvalue {k} is {lambda:.3e} (not positive semidefinite)"
            )));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigh(&self.matrix).expect("validated state is Hermitian").values
    }

    /// Entry (k, ℓ) is `tr(σ_k ⊗ σ_ℓ ρ)`.
    pub fn correlation_matrix(&self) -> RealMatrix3 {
        let mut t = RealMatrix3::ZERO;
        for k in 0..3 {
            for l in 0..3 {
                let obs = kron(&pauli(k), &pauli(l));
                t.0[k][l] = expectation(&obs, &self.matrix).expect("Pauli products are Hermitian");
            }
        }
        t
    }

    /// Signed SVD of the correlation matrix.
    pub fn canonical_frame(&self) -> SignedSvd3 {
        signed_svd3(&self.correlation_matrix())
    }

    pub fn singular_triple(&self) -> SingularTriple {
        self.canonical_frame().tau
    }

    /// Rotates the state by local unitaries so its correlation matrix is
    /// `diag(τ₁, τ₂, τ₀)`.
    pub fn canonical_form(&self) -> CanonicalForm {
        let frame = self.canonical_frame();
        let va = so3_to_su2(&frame.ra).expect("svd factors are proper");
        let vb = so3_to_su2(&frame.rb).expect("svd factors are proper");
        let local = kron(&va, &vb);
        let rotated = self.matrix.conjugate_by(&local);
        // Re-Hermitize the rounding residue of the conjugation.
        let rotated =
            ComplexMatrix::from_fn(4, |i, j| 0.5 * (rotated[(i, j)] + rotated[(j, i)].conj()));
        CanonicalForm { state: Self { matrix: rotated }, va, vb, frame }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("state serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

impl Serialize for TwoQubitState {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut j = StateJson { re: [[0.0; 4]; 4], im: [[0.0; 4]; 4] };
        for r in 0..4 {
            for c in 0..4 {
                j.re[r][c] = self.matrix[(r, c)].re;
                j.im[r][c] = self.matrix[(r, c)].im;
            }
        }
        j.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TwoQubitState {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let j = StateJson::deserialize(deserializer)?;
        let m = ComplexMatrix::from_fn(4, |r, c| Complex64::new(j.re[r][c], j.im[r][c]));
        TwoQubitState::new(m).map_err(serde::de::Error::custom)
    }
}

/// Output of [`TwoQubitState::canonical_form`]: `state = (va⊗vb) ρ (va⊗vb)†`.
#[derive(Clone, Debug)]
pub struct CanonicalForm {
    pub state: TwoQubitState,
    pub va: ComplexMatrix,
    pub vb: ComplexMatrix,
    pub frame: SignedSvd3,
}

/// The sources of a network, in source order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<TwoQubitState>", try_from = "Vec<TwoQubitState>")]
pub struct SourceEnsemble(Vec<TwoQubitState>);

impl TryFrom<Vec<TwoQubitState>> for SourceEnsemble {
    type Error = Error;

    fn try_from(states: Vec<TwoQubitState>) -> Result<Self> {
        Self::new(states)
    }
}

impl From<SourceEnsemble> for Vec<TwoQubitState> {
    fn from(e: SourceEnsemble) -> Self {
        e.0
    }
}

impl SourceEnsemble {
    pub fn new(states: Vec<TwoQubitState>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::ShapeMismatch("ensemble must contain at least one source".into()));
        }
        Ok(Self(states))
    }

    pub fn uniform(state: TwoQubitState, n: usize) -> Result<Self> {
        Self::new(vec![state; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn states(&self) -> &[TwoQubitState] {
        &self.0
    }

    pub fn triples(&self) -> Vec<SingularTriple> {
        self.0.iter().map(TwoQubitState::singular_triple).collect()
    }

    pub fn frames(&self) -> Vec<SignedSvd3> {
        self.0.iter().map(TwoQubitState::canonical_frame).collect()
    }

    pub fn correlation_matrices(&self) -> Vec<RealMatrix3> {
        self.0.iter().map(TwoQubitState::correlation_matrix).collect()
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// `ρ = ¼(I⊗I + t_x σx⊗σx + t_y σy⊗σy + t_z σz⊗σz)`.
///
/// Fails if any of the four Bell-basis eigenvalues is below −1e-12.
pub fn bell_diagonal(t: [f64; 3]) -> Result<TwoQubitState> {
    let [tx, ty, tz] = t;
    // Eigenvalues on |Φ⁺⟩, |Φ⁻⟩, |Ψ⁺⟩, |Ψ⁻⟩.
    let eigenvalues = [
        0.25 * (1.0 + tx - ty + tz),
        0.25 * (1.0 - tx + ty + tz),
        0.25 * (1.0 + tx + ty - tz),
        0.25 * (1.0 - tx - ty - tz),
    ];
    if let Some((index, &eigenvalue)) = eigenvalues.iter().enumerate().find(|(_, &l)| l < -PSD_TOL)
    {
        return Err(Error::UnphysicalTriple { index, eigenvalue });
    }
    let mut m = ComplexMatrix::identity(4);
    for (axis, &coef) in t.iter().enumerate() {
        if coef != 0.0 {
            m = &m + &kron(&pauli(axis), &pauli(axis)).scale_real(coef);
        }
    }
    TwoQubitState::new(m.scale_real(0.25))
}

/// |Φ⁺⟩⟨Φ⁺| with |Φ⁺⟩ = (|00⟩ + |11⟩)/√2.
pub fn bell_phi_plus() -> TwoQubitState {
    let mut m = ComplexMatrix::zeros(4);
    for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
        m[(i, j)] = Complex64::new(0.5, 0.0);
    }
    TwoQubitState::new(m).expect("Bell state is valid")
}

/// `v |Φ⁺⟩⟨Φ⁺| + (1 − v) I/4`
pub fn werner(v: f64) -> Result<TwoQubitState> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::OutOfRange { name: "visibility", value: v });
    }
    let m = &bell_phi_plus().matrix.scale_real(v)
        + &ComplexMatrix::identity(4).scale_real(0.25 * (1.0 - v));
    TwoQubitState::new(m)
}

/// Colored noise keeping `τ₀ = 1` and damping `τ₁ = t1`:
/// the Bell-diagonal state with correlations `(t1, −t1, 1)`.
pub fn colored(t1: f64) -> Result<TwoQubitState> {
    if !(0.0..=1.0).contains(&t1) {
        return Err(Error::OutOfRange { name: "t1", value: t1 });
    }
    bell_diagonal([t1, -t1, 1.0])
}

/// Bell-diagonal state with triple `(τ₀, τ₁, −τ₁)`, i.e. correlations
/// `(τ₁, −τ₁, τ₀)`. Physical whenever `0 ≤ τ₁ ≤ τ₀ ≤ 1`.
pub fn biased(tau0: f64, tau1: f64) -> Result<TwoQubitState> {
    if !(0.0..=1.0).contains(&tau0) {
        return Err(Error::OutOfRange { name: "tau0", value: tau0 });
    }
    if !(0.0..=tau0).contains(&tau1) {
        return Err(Error::OutOfRange { name: "tau1", value: tau1 });
    }
    bell_diagonal([tau1, -tau1, tau0])
}

/// The shared coin flip ½(|00⟩⟨00| + |11⟩⟨11|), correlations `diag(0, 0, 1)`.
pub fn classical_gamma() -> TwoQubitState {
    bell_diagonal([0.0, 0.0, 1.0]).expect("coin flip is valid")
}

/// Hilbert–Schmidt random mixed state `G G† / tr(G G†)` from seeded complex
/// Gaussian entries.
pub fn random_state(seed: u64) -> TwoQubitState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = ComplexMatrix::from_fn(4, |_, _| {
        Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
    });
    let w = &g * &g.adjoint();
    let tr = w.trace().re;
    let m = w.scale_real(1.0 / tr);
    let m = ComplexMatrix::from_fn(4, |i, j| 0.5 * (m[(i, j)] + m[(j, i)].conj()));
    TwoQubitState::new(m).expect("G G† is a valid state")
}

/// Random state diagonal in the computational basis (a classical source).
pub fn random_classical_state(seed: u64) -> TwoQubitState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let unit = Uniform::new(0.0f64, 1.0).expect("valid range");
    let p: Vec<f64> = (0..4).map(|_| -unit.sample(&mut rng).ln()).collect();
    let total: f64 = p.iter().sum();
    let diag: Vec<f64> = p.iter().map(|v| v / total).collect();
    TwoQubitState::new(ComplexMatrix::from_real_diag(&diag)).expect("probability vector")
}

pub fn random_ensemble(n: usize, seed: u64) -> SourceEnsemble {
    let states =
        (0..n as u64).map(|i| random_state(seed.wrapping_mul(1_000_003).wrapping_add(i))).collect();
    SourceEnsemble::new(states).expect("n >= 1")
}

pub fn random_classical_ensemble(n: usize, seed: u64) -> SourceEnsemble {
    let states = (0..n as u64)
        .map(|i| random_classical_state(seed.wrapping_mul(1_000_003).wrapping_add(i)))
        .collect();
    SourceEnsemble::new(states).expect("n >= 1")
}
