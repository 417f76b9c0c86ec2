//! Chains whose middle sources are classical keep the two-source maximum.

use nlocal::closedform::ScoreReport;
use nlocal::states::{bell_phi_plus, classical_gamma, SourceEnsemble};

fn main() -> nlocal::Result<()> {
    for n in 2..=6 {
        let states = (0..n)
            .map(|i| if i == 0 || i == n - 1 { bell_phi_plus() } else { classical_gamma() })
            .collect();
        let report = ScoreReport::chain(&SourceEnsemble::new(states)?)?;
        println!("n={n}  local={:.6}  mub={:.6}", report.s_local_max, report.s_mub_max);
        for (flag, value) in &report.equality_flags {
            println!("    {flag} = {value}");
        }
    }
    Ok(())
}
