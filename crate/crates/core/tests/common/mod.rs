//! Reference computations shared by the integration tests. Nothing here
//! calls the library's SVD, correlation readout or closed forms.

#![allow(dead_code)]

use nlocal::networks::Topology;
use nlocal::observables::{BlochVector, DichotomicObservable, NetworkStrategy, SourceSlots};
use nlocal::states::TwoQubitState;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type M2 = [[Complex64; 2]; 2];

fn pauli(k: usize) -> M2 {
    let (o, z, i) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0));
    match k {
        0 => [[z, o], [o, z]],
        1 => [[z, -i], [i, z]],
        _ => [[o, z], [z, -o]],
    }
}

/// `tr((σ_k ⊗ σ_l) ρ)` summed entry by entry.
pub fn pauli_correlations(rho: &TwoQubitState) -> [[f64; 3]; 3] {
    let m = rho.matrix();
    let mut t = [[0.0; 3]; 3];
    for (k, row) in t.iter_mut().enumerate() {
        for (l, out) in row.iter_mut().enumerate() {
            let (a, b) = (pauli(k), pauli(l));
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..4 {
                for c in 0..4 {
                    acc += a[r / 2][c / 2] * b[r % 2][c % 2] * m[(c, r)];
                }
            }
            *out = acc.re;
        }
    }
    t
}

/// Singular values of a 3×3 matrix by one-sided Jacobi: rotate column pairs
/// until they are orthogonal, then read off the column norms. Descending.
pub fn one_sided_jacobi(m: [[f64; 3]; 3]) -> [f64; 3] {
    let mut a = m;
    for _ in 0..100 {
        let mut off = 0.0f64;
        for p in 0..2 {
            for q in p + 1..3 {
                let col = |j: usize, a: &[[f64; 3]; 3]| [a[0][j], a[1][j], a[2][j]];
                let (cp, cq) = (col(p, &a), col(q, &a));
                let alpha: f64 = cp.iter().map(|x| x * x).sum();
                let beta: f64 = cq.iter().map(|x| x * x).sum();
                let gamma: f64 = cp.iter().zip(&cq).map(|(x, y)| x * y).sum();
                if gamma == 0.0 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt().max(f64::MIN_POSITIVE));
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for row in a.iter_mut() {
                    let (x, y) = (row[p], row[q]);
                    row[p] = c * x - s * y;
                    row[q] = s * x + c * y;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut s: [f64; 3] =
        std::array::from_fn(|j| (0..3).map(|i| a[i][j] * a[i][j]).sum::<f64>().sqrt());
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Singular values of the state's correlation matrix, descending.
pub fn singular_values(rho: &TwoQubitState) -> [f64; 3] {
    one_sided_jacobi(pauli_correlations(rho))
}

pub fn top_two(states: &[TwoQubitState]) -> Vec<(f64, f64)> {
    states
        .iter()
        .map(|s| {
            let v = singular_values(s);
            (v[0], v[1])
        })
        .collect()
}

pub fn chsh_max(rho: &TwoQubitState) -> f64 {
    let v = singular_values(rho);
    2.0 * (v[0] * v[0] + v[1] * v[1]).sqrt()
}

pub fn star_max(states: &[TwoQubitState]) -> f64 {
    let n = states.len() as f64;
    0.5 * states.iter().map(|s| chsh_max(s).powf(1.0 / n)).product::<f64>()
}

pub fn star_mub_max(states: &[TwoQubitState]) -> f64 {
    let n = states.len() as f64;
    let t = top_two(states);
    let p0: f64 = t.iter().map(|(a, _)| a.powf(2.0 / n)).product();
    let p1: f64 = t.iter().map(|(_, b)| b.powf(2.0 / n)).product();
    (p0 + p1).sqrt()
}

pub fn chain_max(states: &[TwoQubitState]) -> f64 {
    let n = states.len();
    let ends = [states[0].clone(), states[n - 1].clone()];
    let middle: f64 = top_two(&states[1..n - 1]).iter().map(|(a, _)| a.sqrt()).product();
    star_max(&ends) * middle
}

pub fn chain_mub_max(states: &[TwoQubitState]) -> f64 {
    let t = top_two(states);
    let p0: f64 = t.iter().map(|(a, _)| a).product();
    let p1: f64 = t.iter().map(|(_, b)| b).product();
    (p0 + p1).sqrt()
}

pub fn random_unit(rng: &mut ChaCha8Rng) -> BlochVector {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(rng));
        if let Ok(b) = BlochVector::normalized(v) {
            return b;
        }
    }
}

/// Independent uniformly random observables on every slot.
pub fn random_strategy(topology: Topology, seed: u64) -> NetworkStrategy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut obs = || DichotomicObservable::new(random_unit(&mut rng), random_unit(&mut rng));
    let slots = (0..topology.n()).map(|_| SourceSlots { a_side: obs(), b_side: obs() }).collect();
    NetworkStrategy::new(topology, slots).expect("one slot pair per source")
}
