use num_complex::Complex64;

use super::{ComplexMatrix, Rotation3, C_ZERO, RUNTIME_TOL};
use crate::error::{Error, Result};

/// Lifts a proper rotation to a qubit unitary `U` with
/// `U (α·σ) U† = (Rα)·σ`.
///
/// The sign ambiguity of the double cover and the global phase are fixed by
/// making the first nonzero entry (reading order) real and nonnegative.
pub fn so3_to_su2(r: &Rotation3) -> Result<ComplexMatrix> {
    let m = &r.matrix().0;
    let det = r.matrix().det();
    if (det - 1.0).abs() > RUNTIME_TOL {
        return Err(Error::ImproperRotation { det });
    }
    let [w, x, y, z] = quaternion(m);
    // U = w·I − i(x σx + y σy + z σz)
    let u = ComplexMatrix::from_fn(2, |i, j| match (i, j) {
        (0, 0) => Complex64::new(w, -z),
        (0, 1) => Complex64::new(-y, -x),
        (1, 0) => Complex64::new(y, -x),
        _ => Complex64::new(w, z),
    });
    Ok(fix_phase(u))
}

/// Shepperd's method: branch on the largest of the four squared components.
fn quaternion(m: &[[f64; 3]; 3]) -> [f64; 4] {
    let tr = m[0][0] + m[1][1] + m[2][2];
    let candidates = [tr, m[0][0], m[1][1], m[2][2]];
    let k = (0..4).max_by(|&a, &b| candidates[a].total_cmp(&candidates[b])).unwrap();
    let q = match k {
        0 => {
            let s = 2.0 * (1.0 + tr).sqrt();
            [0.25 * s, (m[2][1] - m[1][2]) / s, (m[0][2] - m[2][0]) / s, (m[1][0] - m[0][1]) / s]
        }
        1 => {
            let s = 2.0 * (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt();
            [(m[2][1] - m[1][2]) / s, 0.25 * s, (m[0][1] + m[1][0]) / s, (m[0][2] + m[2][0]) / s]
        }
        2 => {
            let s = 2.0 * (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt();
            [(m[0][2] - m[2][0]) / s, (m[0][1] + m[1][0]) / s, 0.25 * s, (m[1][2] + m[2][1]) / s]
        }
        _ => {
            let s = 2.0 * (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt();
            [(m[1][0] - m[0][1]) / s, (m[0][2] + m[2][0]) / s, (m[1][2] + m[2][1]) / s, 0.25 * s]
        }
    };
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    q.map(|v| v / n)
}

fn fix_phase(u: ComplexMatrix) -> ComplexMatrix {
    let first = u.as_slice().iter().copied().find(|z| z.norm() > 1e-14).unwrap_or(C_ZERO);
    if first == C_ZERO {
        return u;
    }
    let phase = first.conj() / first.norm();
    let mut out = u.scale(phase);
    // Snap the reference entry to exactly real.
    let idx = out.as_slice().iter().position(|z| z.norm() > 1e-14).unwrap();
    let d = out.dim();
    let (i, j) = (idx / d, idx % d);
    out[(i, j)] = Complex64::new(out[(i, j)].norm(), 0.0);
    out
}
