//! Maximal CHSH value of a few states, by closed form and by optimization.

use nlocal::closedform::max_chsh;
use nlocal::optimizer::{optimize_chsh, OptimizerConfig};
use nlocal::states::{bell_phi_plus, classical_gamma, random_state, werner, SourceEnsemble};

fn main() -> nlocal::Result<()> {
    let states = [
        ("bell", bell_phi_plus()),
        ("werner(0.8)", werner(0.8)?),
        ("classical", classical_gamma()),
        ("random #7", random_state(7)),
    ];
    let config = OptimizerConfig { restarts: 8, ..Default::default() };
    println!("{:<14}{:>12}{:>12}", "state", "formula", "optimizer");
    for (name, rho) in states {
        let formula = max_chsh(&rho.singular_triple());
        let found = optimize_chsh(&SourceEnsemble::uniform(rho, 1)?, &config)?.best_score;
        println!("{name:<14}{formula:>12.9}{found:>12.9}");
    }
    Ok(())
}
