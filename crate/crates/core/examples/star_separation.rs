//! A star with one classical source: the unrestricted maximum still beats 1,
//! while fixing the central party to σ_z/σ_x does not.

use nlocal::closedform::{full_nonlocality_threshold, ScoreReport};
use nlocal::states::{bell_phi_plus, classical_gamma, SourceEnsemble};

fn main() -> nlocal::Result<()> {
    for (n, classical) in [(2, 1), (4, 1), (4, 2), (6, 3)] {
        let states = (0..n)
            .map(|i| if i < classical { classical_gamma() } else { bell_phi_plus() })
            .collect();
        let report = ScoreReport::star(&SourceEnsemble::new(states)?);
        println!(
            "n={n} classical={classical}  local={:.6}  mub={:.6}  full-nonlocality threshold={:.6}",
            report.s_local_max,
            report.s_mub_max,
            full_nonlocality_threshold(n)
        );
    }
    Ok(())
}
