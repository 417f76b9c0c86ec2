//! Finite-shot estimates of star scores for quantum and classical sources.

use nlocal::networks::Topology;
use nlocal::observables::theorem1_star_strategy;
use nlocal::sampling::estimate_scores;
use nlocal::states::{random_classical_ensemble, werner, SourceEnsemble};

fn main() -> nlocal::Result<()> {
    let topology = Topology::star(3)?;
    let cases = [
        ("werner(0.9)", SourceEnsemble::uniform(werner(0.9)?, 3)?),
        ("classical", random_classical_ensemble(3, 5)),
    ];
    for (name, ens) in cases {
        let strategy = theorem1_star_strategy(&ens).strategy;
        for shots in [1_000, 100_000] {
            let est = estimate_scores(topology, &ens, &strategy, shots, 9)?.score;
            println!("{name:<12} shots={shots:<7} score={:.4} ± {:.4}", est.mean, est.std_error);
        }
    }
    Ok(())
}
