//! Brute-force grid search converging toward the closed-form maxima.

use nlocal::closedform::{chain_upper_bound, star_upper_bound};
use nlocal::networks::Topology;
use nlocal::optimizer::{grid_oracle, Objective};
use nlocal::states::random_ensemble;

fn main() -> nlocal::Result<()> {
    let ens = random_ensemble(2, 3);
    let triples = ens.triples();
    let star = Objective::Network(Topology::star(2)?);
    let chain = Objective::Network(Topology::chain(2)?);
    println!(
        "closed form: star {:.6}  chain {:.6}",
        star_upper_bound(&triples),
        chain_upper_bound(&triples)?
    );
    for res in [8, 16, 32, 64, 128] {
        println!(
            "grid {res:>4}:   star {:.6}  chain {:.6}",
            grid_oracle(star, &ens, res)?,
            grid_oracle(chain, &ens, res)?
        );
    }
    Ok(())
}
