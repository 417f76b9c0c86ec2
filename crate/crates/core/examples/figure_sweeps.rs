//! Noise sweeps of the local and MUB-restricted maxima, written as CSV to stdout.

use nlocal::cli::{cmd_sweep, write_sweep_csv, Figure, SweepConfig};

fn main() -> nlocal::Result<()> {
    let sweeps = [
        SweepConfig { k: Some(6), points: 6, ..SweepConfig::new(Figure::StarColored, 12) },
        SweepConfig { points: 6, ..SweepConfig::new(Figure::StarConstantChsh, 4) },
        SweepConfig { points: 6, ..SweepConfig::new(Figure::ChainColored, 5) },
        SweepConfig { points: 6, ..SweepConfig::new(Figure::ChainWhite, 5) },
    ];
    for config in sweeps {
        println!("{:?}", config.figure);
        write_sweep_csv(std::io::stdout(), &config, 0, &cmd_sweep(&config)?)?;
        println!();
    }
    Ok(())
}
