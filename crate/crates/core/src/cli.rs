//! The `score`, `certify` and `sweep` commands behind the `nlocal` binary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::closedform::{
    chain_upper_bound, max_chain_mub, max_chsh, max_star_mub, star_upper_bound, ScoreReport,
};
use crate::error::{Error, Result};
use crate::networks::{
    chsh_score, correlation_table, direct_correlation_table, network_score, CorrelationTable,
    Topology, TopologyKind, DIRECT_LIMIT,
};
use crate::observables::{NetworkStrategy, SlotRecord};
use crate::optimizer::{optimize, optimize_chsh, OptimizationResult, OptimizerConfig, Restriction};
use crate::states::{
    bell_phi_plus, biased, random_ensemble, SingularTriple, SourceEnsemble, TwoQubitState,
};

/// Largest gap between optimizer and closed form that still certifies.
pub const CERTIFY_TOL: f64 = 1e-3;

/// How far the optimizer may exceed a closed-form maximum before it counts
/// as a refutation.
pub const SOUNDNESS_TOL: f64 = 1e-9;

/// A list of states given inline or as a path to a JSON file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnsembleSpec {
    Path(PathBuf),
    Inline(SourceEnsemble),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StrategySpec {
    Path(PathBuf),
    Inline(Vec<SlotRecord>),
}

/// Input of [`cmd_score`]. Relative paths are resolved against the
/// directory of the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreConfig {
    pub topology: TopologyKind,
    pub ensemble: EnsembleSpec,
    /// Defaults to the closed-form maximizing strategy.
    #[serde(default)]
    pub strategy: Option<StrategySpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreOutput {
    pub topology: Topology,
    pub score_factored: f64,
    pub score_direct: Option<f64>,
    pub chsh: Option<f64>,
    pub report: ScoreReport,
    #[serde(skip)]
    pub table: Option<CorrelationTable>,
}

impl ScoreOutput {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let r = &self.report;
        let _ = writeln!(s, "topology      {}", self.topology);
        let _ = writeln!(s, "score         {:.12} (factored)", self.score_factored);
        if let Some(d) = self.score_direct {
            let _ = writeln!(s, "score         {d:.12} (direct)");
        }
        if let Some(c) = self.chsh {
            let _ = writeln!(s, "chsh          {c:.12}");
        }
        let _ = writeln!(s, "s_local_max   {:.12}", r.s_local_max);
        let _ = writeln!(s, "s_mub_max     {:.12}", r.s_mub_max);
        let _ = writeln!(s, "upper_bound   {:.12}", r.upper_bound);
        for (k, v) in &r.equality_flags {
            let _ = writeln!(s, "{k:<28}{v}");
        }
        if r.degenerate {
            let _ =
                writeln!(s, "warning: a source has τ₀ = τ₁ = 0; witness slots fell back to σ_z");
        }
        s
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Loads a score config from disk and evaluates it.
pub fn cmd_score(config_path: &Path) -> Result<ScoreOutput> {
    let config: ScoreConfig = serde_json::from_str(&std::fs::read_to_string(config_path)?)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let ensemble = match &config.ensemble {
        EnsembleSpec::Path(p) => SourceEnsemble::load(&resolve(base, p))?,
        EnsembleSpec::Inline(e) => e.clone(),
    };
    let topology = Topology::new(config.topology, ensemble.len())?;
    let strategy = match &config.strategy {
        None => None,
        Some(StrategySpec::Path(p)) => Some(NetworkStrategy::load(topology, &resolve(base, p))?),
        Some(StrategySpec::Inline(r)) => Some(NetworkStrategy::from_records(topology, r)?),
    };
    score_ensemble(topology, &ensemble, strategy)
}

/// Scores `strategy` (or the closed-form witness) on `ensemble`.
pub fn score_ensemble(
    topology: Topology,
    ensemble: &SourceEnsemble,
    strategy: Option<NetworkStrategy>,
) -> Result<ScoreOutput> {
    let report = ScoreReport::new(topology, ensemble)?;
    let strategy = match strategy {
        Some(s) => s,
        None => NetworkStrategy::from_records(topology, &report.local_strategy)?,
    };
    let table = correlation_table(ensemble, &strategy)?;
    let score_factored = crate::networks::strategy_score(ensemble, &strategy)?;
    let score_table = network_score(&table)?;
    if (score_table - score_factored).abs() > 1e-10 {
        return Err(Error::InvalidState(format!(
            "factored score {score_factored} disagrees with table score {score_table}"
        )));
    }
    let score_direct = if topology.n() <= DIRECT_LIMIT {
        Some(network_score(&direct_correlation_table(ensemble, &strategy)?)?)
    } else {
        None
    };
    let chsh = if topology.n() == 1 { Some(chsh_score(&table)?) } else { None };
    Ok(ScoreOutput { topology, score_factored, score_direct, chsh, report, table: Some(table) })
}

/// Parameters of a certification run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyConfig {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub optimizer: OptimizerConfig,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self { n: 2, trials: 50, seed: 0, optimizer: OptimizerConfig::default() }
    }
}

/// Gaps between optimizer and closed form for one target over all trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyRow {
    pub target: String,
    pub restriction: Restriction,
    pub trials: usize,
    /// Largest `closed_form − optimizer`.
    pub max_gap: f64,
    /// Largest `optimizer − closed_form` (soundness).
    pub max_excess: f64,
    /// Largest gap using cold restarts only.
    pub max_cold_gap: Option<f64>,
    /// Trials whose restricted optimum exceeded the free optimum.
    pub restriction_violations: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyReport {
    pub n: usize,
    pub seed: u64,
    pub rows: Vec<CertifyRow>,
}

impl CertifyReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            let cold = r.max_cold_gap.map_or("-".to_string(), |g| format!("{g:.2e}"));
            let _ = writeln!(
                s,
                "{} {:<8} {:<12} trials={} max_gap={:.2e} max_excess={:.2e} cold_gap={} restriction_violations={}",
                if r.passed { "PASS" } else { "FAIL" },
                r.target,
                format!("{:?}", r.restriction),
                r.trials,
                r.max_gap,
                r.max_excess,
                cold,
                r.restriction_violations,
            );
        }
        s
    }
}

/// One optimizer run against its closed-form target.
#[derive(Clone, Debug)]
pub struct CertifyTrial {
    pub target: f64,
    pub result: OptimizationResult,
}

fn certify_one(
    name: &str,
    ensemble: &SourceEnsemble,
    config: &OptimizerConfig,
) -> Result<CertifyTrial> {
    let triples = ensemble.triples();
    let n = ensemble.len();
    let (target, result) = match (name, config.restriction) {
        ("chsh", _) => (max_chsh(&triples[0]), optimize_chsh(ensemble, config)?),
        ("star", Restriction::Free) => {
            (star_upper_bound(&triples), optimize(Topology::star(n)?, ensemble, config)?)
        }
        ("star", Restriction::MubCentral) => {
            (max_star_mub(&triples), optimize(Topology::star(n)?, ensemble, config)?)
        }
        ("chain", Restriction::Free) => {
            (chain_upper_bound(&triples)?, optimize(Topology::chain(n)?, ensemble, config)?)
        }
        (_, _) => (max_chain_mub(&triples)?, optimize(Topology::chain(n)?, ensemble, config)?),
    };
    Ok(CertifyTrial { target, result })
}

/// Optimizes random ensembles and compares against the closed forms.
///
/// Trial `t` uses ensemble seed `seed + t` and optimizer seed `seed + t`.
pub fn cmd_certify(config: &CertifyConfig) -> Result<CertifyReport> {
    if !(1..=3).contains(&config.n) {
        return Err(Error::InvalidConfig(format!("n = {} is outside 1..=3", config.n)));
    }
    if config.trials == 0 {
        return Err(Error::InvalidConfig("trials must be positive".into()));
    }
    config.optimizer.validate()?;
    let targets: &[&str] = if config.n == 1 { &["chsh"] } else { &["star", "chain"] };
    let mut rows = Vec::new();
    for &name in targets {
        let per_trial: Vec<[CertifyTrial; 2]> = (0..config.trials)
            .map(|t| {
                let seed = config.seed + t as u64;
                let ens = random_ensemble(config.n, seed);
                let free =
                    OptimizerConfig { seed, restriction: Restriction::Free, ..config.optimizer };
                let mub = OptimizerConfig { restriction: Restriction::MubCentral, ..free };
                Ok([certify_one(name, &ens, &free)?, certify_one(name, &ens, &mub)?])
            })
            .collect::<Result<_>>()?;
        for (k, restriction) in [Restriction::Free, Restriction::MubCentral].into_iter().enumerate()
        {
            let mut row = CertifyRow {
                target: name.to_string(),
                restriction,
                trials: config.trials,
                max_gap: f64::NEG_INFINITY,
                max_excess: f64::NEG_INFINITY,
                max_cold_gap: None,
                restriction_violations: 0,
                passed: true,
            };
            for pair in &per_trial {
                let t = &pair[k];
                row.max_gap = row.max_gap.max(t.target - t.result.best_score);
                row.max_excess = row.max_excess.max(t.result.best_score - t.target);
                if let Some(c) = t.result.best_cold_score(config.optimizer.warm_start) {
                    let g = t.target - c;
                    row.max_cold_gap = Some(row.max_cold_gap.map_or(g, |m: f64| m.max(g)));
                }
                if k == 1 && pair[1].result.best_score > pair[0].result.best_score + SOUNDNESS_TOL {
                    row.restriction_violations += 1;
                }
            }
            row.passed = row.max_gap.abs() <= CERTIFY_TOL
                && row.max_excess <= SOUNDNESS_TOL
                && row.restriction_violations == 0;
            rows.push(row);
        }
    }
    Ok(CertifyReport { n: config.n, seed: config.seed, rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Figure {
    /// `k` sources with `τ₀ = 1`, `τ₁` swept over [0, 1]; the rest noiseless.
    StarColored,
    /// Every source with `½ S★_CHSH = β`, β swept over [1.0, 1.1], `τ₀²` spread.
    StarConstantChsh,
    /// `τ₀ = 1`, `τ₁²` swept over [0, 1].
    ChainColored,
    /// `τ₀² = ¾ + ¼τ₁²`, `τ₁²` swept over [0, 1].
    ChainWhite,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub figure: Figure,
    #[serde(default = "default_sweep_n")]
    pub n: usize,
    /// Number of noisy sources (star_colored only; defaults to `n / 2`).
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default = "default_points")]
    pub points: usize,
    /// Chain sweeps: apply the noise to the end sources too, instead of
    /// keeping them noiseless.
    #[serde(default)]
    pub noisy_ends: bool,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_sweep_n() -> usize {
    12
}

fn default_points() -> usize {
    21
}

impl SweepConfig {
    pub fn new(figure: Figure, n: usize) -> Self {
        Self { figure, n, k: None, points: default_points(), noisy_ends: false, output: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 2 {
            return Err(Error::InvalidConfig("a sweep needs at least two grid points".into()));
        }
        match self.figure {
            Figure::StarColored | Figure::StarConstantChsh if self.n == 0 => {
                Err(Error::InvalidConfig("a star needs at least one source".into()))
            }
            Figure::ChainColored | Figure::ChainWhite if self.n < 2 => {
                Err(Error::InvalidConfig("a chain needs at least two sources".into()))
            }
            _ if self.k.is_some_and(|k| k > self.n) => {
                Err(Error::InvalidConfig(format!("k = {:?} exceeds n = {}", self.k, self.n)))
            }
            _ => Ok(()),
        }
    }

    /// SHA-256 of the config's canonical JSON form, without the output path.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(&Self { output: None, ..self.clone() })
            .expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter: f64,
    pub s_local_max: f64,
    pub s_mub_max: f64,
}

/// Swept parameter value at grid point `i`.
fn grid_value(figure: Figure, i: usize, points: usize) -> f64 {
    let t = i as f64 / (points - 1) as f64;
    match figure {
        Figure::StarConstantChsh => 1.0 + 0.1 * t,
        _ => t,
    }
}

fn triple_of(state: TwoQubitState) -> SingularTriple {
    state.singular_triple()
}

/// Per-source triples for one sweep point.
pub fn sweep_triples(config: &SweepConfig, parameter: f64) -> Result<Vec<SingularTriple>> {
    let n = config.n;
    let bell = triple_of(bell_phi_plus());
    Ok(match config.figure {
        Figure::StarColored => {
            let k = config.k.unwrap_or(n / 2);
            let noisy = triple_of(biased(1.0, parameter)?);
            (0..n).map(|i| if i < k { noisy } else { bell }).collect()
        }
        Figure::StarConstantChsh => {
            let beta2 = parameter * parameter;
            let lo = 0.5 * beta2;
            let hi = beta2.min(1.0);
            (0..n)
                .map(|i| {
                    let t = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                    let tau0_sq = lo + t * (hi - lo);
                    let tau1_sq = (beta2 - tau0_sq).max(0.0);
                    Ok(triple_of(biased(tau0_sq.sqrt(), tau1_sq.sqrt())?))
                })
                .collect::<Result<_>>()?
        }
        Figure::ChainColored | Figure::ChainWhite => {
            let tau1 = parameter.sqrt();
            let tau0 = match config.figure {
                Figure::ChainColored => 1.0,
                _ => (0.75 + 0.25 * parameter).sqrt(),
            };
            let noisy = triple_of(biased(tau0, tau1)?);
            (0..n)
                .map(|i| {
                    let end = i == 0 || i == n - 1;
                    if end && !config.noisy_ends {
                        bell
                    } else {
                        noisy
                    }
                })
                .collect()
        }
    })
}

/// Closed-form maxima at every grid point, in parameter order.
pub fn cmd_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    (0..config.points)
        .into_par_iter()
        .map(|i| {
            let parameter = grid_value(config.figure, i, config.points);
            let t = sweep_triples(config, parameter)?;
            let (s_local_max, s_mub_max) = match config.figure {
                Figure::StarColored | Figure::StarConstantChsh => {
                    (star_upper_bound(&t), max_star_mub(&t))
                }
                Figure::ChainColored | Figure::ChainWhite => {
                    (chain_upper_bound(&t)?, max_chain_mub(&t)?)
                }
            };
            Ok(SweepRow { parameter, s_local_max, s_mub_max })
        })
        .collect()
}

/// Writes the sweep as CSV after a `# config_sha256=… seed=…` comment line.
pub fn write_sweep_csv<W: Write>(
    mut w: W,
    config: &SweepConfig,
    seed: u64,
    rows: &[SweepRow],
) -> Result<()> {
    writeln!(w, "# config_sha256={} seed={seed}", config.hash())?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SWEEP_HEADER.split(','))?;
    for r in rows {
        out.write_record([
            format!("{:.16e}", r.parameter),
            format!("{:.16e}", r.s_local_max),
            format!("{:.16e}", r.s_mub_max),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Header line written before the rows of [`write_sweep_csv`].
pub const SWEEP_HEADER: &str = "parameter,s_local_max,s_mub_max";

/// Reads a sweep CSV written by [`write_sweep_csv`], returning the header
/// comment fields and the rows.
pub fn read_sweep_csv(text: &str) -> Result<(BTreeMap<String, String>, Vec<SweepRow>)> {
    let mut lines = text.lines();
    let comment = lines
        .next()
        .and_then(|l| l.strip_prefix("# "))
        .ok_or_else(|| Error::InvalidConfig("missing sweep header comment".into()))?;
    let meta = comment
        .split_whitespace()
        .filter_map(|kv| kv.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    let body: String = lines.map(|l| format!("{l}\n")).collect();
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let rows = reader.deserialize().collect::<std::result::Result<Vec<SweepRow>, _>>()?;
    Ok((meta, rows))
}

/// Process exit status of the binary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Usage = 1,
    CertificationFailure = 2,
    InvalidInput = 3,
}
