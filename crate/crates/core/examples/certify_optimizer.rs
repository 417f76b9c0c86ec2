//! Optimizer against closed form on random two-source ensembles.

use nlocal::cli::{cmd_certify, CertifyConfig};
use nlocal::optimizer::OptimizerConfig;

fn main() -> nlocal::Result<()> {
    let config = CertifyConfig {
        n: 2,
        trials: 10,
        seed: 1,
        optimizer: OptimizerConfig { restarts: 8, ..Default::default() },
    };
    let report = cmd_certify(&config)?;
    print!("{}", report.to_text());
    println!("passed: {}", report.passed());
    Ok(())
}
