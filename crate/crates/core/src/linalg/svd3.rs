//! Signed singular value decomposition of a real 3x3 matrix with both
//! factors in SO(3).

use super::{RealMatrix3, Rotation3};
use crate::states::SingularTriple;

const MAX_SWEEPS: usize = 64;

/// Magnitudes closer than this are treated as tied when choosing the layout.
const TIE_TOL: f64 = 1e-12;

/// Result of [`signed_svd3`]: `ra · m · rbᵀ = diag(τ₁, τ₂, τ₀)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignedSvd3 {
    pub ra: Rotation3,
    pub tau: SingularTriple,
    pub rb: Rotation3,
}

impl SignedSvd3 {
    /// The diagonal in (x, y, z) slot order.
    pub fn diagonal(&self) -> [f64; 3] {
        [self.tau.tau1, self.tau.tau2, self.tau.tau0]
    }
}

/// Two-sided Jacobi SVD with the largest singular value placed on the z
/// slot, the second on x, and the smallest (carrying the sign of `det m`)
/// on y.
pub fn signed_svd3(m: &RealMatrix3) -> SignedSvd3 {
    let (ua, d, ub) = jacobi(m);
    let (ra, diag, rb) = canonical_layout(&ua, d, &ub);
    SignedSvd3 {
        ra: Rotation3::new_unchecked(ra),
        tau: SingularTriple { tau0: diag[2], tau1: diag[0], tau2: diag[1] },
        rb: Rotation3::new_unchecked(rb),
    }
}

fn plane_rotation(p: usize, q: usize, c: f64, s: f64) -> RealMatrix3 {
    let mut g = RealMatrix3::IDENTITY;
    g.0[p][p] = c;
    g.0[p][q] = s;
    g.0[q][p] = -s;
    g.0[q][q] = c;
    g
}

/// Returns `(ua, d, ub)` with `ua · m · ubᵀ = diag(d)` and `ua`, `ub`
/// products of plane rotations.
fn jacobi(m: &RealMatrix3) -> (RealMatrix3, [f64; 3], RealMatrix3) {
    let mut a = *m;
    let mut ua = RealMatrix3::IDENTITY;
    let mut ub = RealMatrix3::IDENTITY;
    let scale = m.frobenius_norm();
    if scale == 0.0 {
        return (ua, [0.0; 3], ub);
    }
    for _ in 0..MAX_SWEEPS {
        if a.max_off_diagonal() <= 1e-16 * scale {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            let (w, x, y, z) = (a.0[p][p], a.0[p][q], a.0[q][p], a.0[q][q]);
            if x == 0.0 && y == 0.0 {
                continue;
            }
            // Left rotation that symmetrizes the 2x2 block.
            let phi = (y - x).atan2(w + z);
            let (s1, c1) = phi.sin_cos();
            let g1 = plane_rotation(p, q, c1, s1);
            let sym = g1 * a;
            // Symmetric Jacobi rotation applied on both sides.
            let theta = 0.5 * (2.0 * sym.0[p][q]).atan2(sym.0[p][p] - sym.0[q][q]);
            let (s2, c2) = theta.sin_cos();
            let g2 = plane_rotation(p, q, c2, s2);
            let left = g2 * g1;
            a = left * a * g2.transpose();
            a.0[p][q] = 0.0;
            a.0[q][p] = 0.0;
            ua = left * ua;
            ub = g2 * ub;
        }
    }
    (ua, a.diag(), ub)
}

const PERMUTATIONS: [[usize; 3]; 6] =
    [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

const SIGNS: [[f64; 3]; 8] = [
    [1.0, 1.0, 1.0],
    [1.0, 1.0, -1.0],
    [1.0, -1.0, 1.0],
    [1.0, -1.0, -1.0],
    [-1.0, 1.0, 1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [-1.0, -1.0, -1.0],
];

/// Signed permutation `S·P` as a matrix: row `i` is `s_i · e_{π(i)}`.
fn signed_permutation(perm: &[usize; 3], signs: &[f64; 3]) -> RealMatrix3 {
    let mut m = RealMatrix3::ZERO;
    for i in 0..3 {
        m.0[i][perm[i]] = signs[i];
    }
    m
}

fn is_canonical(d: &[f64; 3]) -> bool {
    let (x, y, z) = (d[0], d[1], d[2]);
    x >= 0.0 && z >= 0.0 && z >= x - TIE_TOL && x >= y.abs() - TIE_TOL
}

/// Searches every proper signed permutation applied to both factors for the
/// canonical layout, preferring the factor pair closest to the identity.
fn canonical_layout(
    ua: &RealMatrix3,
    d: [f64; 3],
    ub: &RealMatrix3,
) -> (RealMatrix3, [f64; 3], RealMatrix3) {
    let mut best: Option<(f64, f64, RealMatrix3, [f64; 3], RealMatrix3)> = None;
    for perm in &PERMUTATIONS {
        for sa in &SIGNS {
            let qa = signed_permutation(perm, sa);
            if qa.det() < 0.0 {
                continue;
            }
            for sb in &SIGNS {
                let qb = signed_permutation(perm, sb);
                if qb.det() < 0.0 {
                    continue;
                }
                let diag = [0, 1, 2].map(|i| sa[i] * sb[i] * d[perm[i]]);
                if !is_canonical(&diag) {
                    continue;
                }
                let ra = qa * *ua;
                let rb = qb * *ub;
                let da = Rotation3::new_unchecked(ra).distance_to_identity();
                let db = Rotation3::new_unchecked(rb).distance_to_identity();
                let better = match &best {
                    None => true,
                    Some((ba, bb, ..)) => {
                        da < ba - 1e-12 || ((da - ba).abs() <= 1e-12 && db < bb - 1e-12)
                    }
                };
                if better {
                    best = Some((da, db, ra, diag, rb));
                }
            }
        }
    }
    let (_, _, ra, diag, rb) = best.expect("a canonical layout always exists");
    (ra, diag, rb)
}
