use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nlocal::cli::{
    cmd_certify, cmd_score, cmd_sweep, write_sweep_csv, CertifyConfig, ExitStatus, Figure,
    SweepConfig,
};
use nlocal::optimizer::OptimizerConfig;
use nlocal::Error;

#[derive(Parser)]
#[command(
    name = "nlocal",
    version,
    about = "Maximal n-local violations of star and chain networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Machine-readable JSON report.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Score an ensemble and strategy, and report the closed-form maxima.
    Score {
        #[command(flatten)]
        common: Common,
        /// Also write the correlation table as CSV.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Compare the optimizer with the closed forms on random ensembles.
    Certify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// Closed-form maxima along a noise sweep, as CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        figure: Option<Figure>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        noisy_ends: bool,
    },
}

enum Failure {
    Usage(String),
    Certification(String),
    Input(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.into())
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(e.into()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Score { common, table } => {
            let config = common
                .config
                .as_ref()
                .ok_or_else(|| Failure::Usage("score needs --config".into()))?;
            let report = cmd_score(config)?;
            if let (Some(path), Some(t)) = (&table, &report.table) {
                t.write_csv(File::create(path)?)?;
            }
            let mut w = output(&common.out)?;
            if common.json {
                writeln!(w, "{}", serde_json::to_string_pretty(&report).map_err(Error::from)?)?;
            } else {
                write!(w, "{}", report.to_text())?;
            }
            w.flush()?;
        }
        Command::Certify { common, n, trials, restarts } => {
            let mut config = match &common.config {
                Some(p) => read_json::<CertifyConfig>(p)?,
                None => CertifyConfig::default(),
            };
            if let Some(n) = n {
                config.n = n;
            }
            if !(1..=3).contains(&config.n) {
                return Err(Failure::Usage(format!("--n {} is outside 1..=3", config.n)));
            }
            if let Some(t) = trials {
                config.trials = t;
            }
            if let Some(s) = common.seed {
                config.seed = s;
            }
            if let Some(r) = restarts {
                config.optimizer = OptimizerConfig { restarts: r, ..config.optimizer };
            }
            let report = cmd_certify(&config)?;
            let mut w = output(&common.out)?;
            if common.json {
                writeln!(w, "{}", serde_json::to_string_pretty(&report).map_err(Error::from)?)?;
            } else {
                write!(w, "{}", report.to_text())?;
            }
            w.flush()?;
            if !report.passed() {
                return Err(Failure::Certification(format!(
                    "certification failed for n = {}",
                    report.n
                )));
            }
        }
        Command::Sweep { common, figure, n, k, points, noisy_ends } => {
            let mut config = match (&common.config, figure) {
                (Some(p), _) => read_json::<SweepConfig>(p)?,
                (None, Some(f)) => SweepConfig::new(f, 12),
                (None, None) => {
                    return Err(Failure::Usage("sweep needs --config or --figure".into()))
                }
            };
            if let Some(f) = figure {
                config.figure = f;
            }
            if let Some(n) = n {
                config.n = n;
            }
            if k.is_some() {
                config.k = k;
            }
            if let Some(p) = points {
                config.points = p;
            }
            config.noisy_ends |= noisy_ends;
            if common.out.is_some() {
                config.output = common.out.clone();
            }
            let rows = cmd_sweep(&config)?;
            let w = output(&config.output)?;
            write_sweep_csv(w, &config, common.seed.unwrap_or(0), &rows)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(ExitStatus::Usage as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let status = match run(cli) {
        Ok(()) => ExitStatus::Success,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitStatus::Usage
        }
        Err(Failure::Certification(msg)) => {
            eprintln!("error: {msg}");
            ExitStatus::CertificationFailure
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitStatus::InvalidInput
        }
    };
    ExitCode::from(status as u8)
}
