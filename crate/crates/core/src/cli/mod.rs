//! Command-line front end: `allocate`, `compare` and `sweep`.

pub mod report;
pub mod scenario_file;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::evaluation::{monte_carlo_compare, EvaluationError, McOutcome, NamedAssignment, DEFAULT_RUNS};
use crate::lsap::BinaryAssignment;
use crate::pipeline::{
    deterministic_allocate, interpret, joint_state, stochastic_allocate, Allocation, InterpretConfig, Interpretation,
    PipelineError, StochasticAssignment,
};
use crate::unscented::UnscentedError;

use report::{rows, AllocateReport, CompareReport, Provenance, Reproduction, StochasticSection, UtReport};
pub use scenario_file::{parse_scenario, LoadedScenario, ScenarioFileError, UtSettings};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioFileError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Unscented(#[from] UnscentedError),
    #[error(transparent)]
    Evaluation(#[from] EvaluationError),
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("serializing report: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Parser)]
#[command(name = "sigma-alloc", version, about = "Uncertainty-aware multi-robot task allocation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Det,
    Stoch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    Alpha,
    Beta,
    Kappa,
}

#[derive(Debug, Clone, clap::Args)]
pub struct UtArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, clap::Args)]
pub struct PolicyArgs {
    /// Smallest gamma_s entry that counts as support.
    #[arg(long, default_value_t = 1e-6)]
    pub floor: f64,
    /// Cost of unsupported cells (default m * (max finite Q + 1)).
    #[arg(long)]
    pub sentinel: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Allocate once and write the assignment and its matrices.
    Allocate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        #[command(flatten)]
        ut: UtArgs,
        #[command(flatten)]
        policy: PolicyArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the deterministic and stochastic assignments by Monte Carlo.
    Compare {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RUNS)]
        runs: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        ut: UtArgs,
        #[command(flatten)]
        policy: PolicyArgs,
        #[arg(long)]
        out: PathBuf,
        /// Per-run costs for plotting.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// One stochastic report per value of a scaling parameter.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum)]
        param: SweepParam,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[command(flatten)]
        ut: UtArgs,
        #[command(flatten)]
        policy: PolicyArgs,
        /// Directory receiving `<scenario>_<param>_<value>.json`.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Add a Monte Carlo comparison to every report (requires --seed).
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(written) => {
            for path in written {
                println!("wrote {}", path.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Runs a parsed command and returns the files written.
pub fn execute(command: &Command) -> Result<Vec<PathBuf>, CliError> {
    match command {
        Command::Allocate { scenario, mode, ut, policy, out } => {
            let loaded = parse_scenario(scenario)?;
            let settings = merge_ut(loaded.ut, ut);
            let report = allocate_report(&loaded, *mode, &settings, &policy.config())?;
            write_file(out, report::to_json(&report)?.as_bytes())?;
            Ok(vec![out.clone()])
        }
        Command::Compare { scenario, runs, seed, ut, policy, out, csv } => {
            let loaded = parse_scenario(scenario)?;
            let settings = merge_ut(loaded.ut, ut);
            let (report, outcome) = compare_report(&loaded, &settings, &policy.config(), *runs, *seed)?;
            write_file(out, report::to_json(&report)?.as_bytes())?;
            let mut written = vec![out.clone()];
            if let Some(csv) = csv {
                let names: Vec<String> = report.monte_carlo.assignments.iter().map(|a| a.name.clone()).collect();
                let mut buf = Vec::new();
                report::write_runs_csv(&mut buf, &names, &outcome.costs).expect("writing to memory");
                write_file(csv, &buf)?;
                written.push(csv.clone());
            }
            Ok(written)
        }
        Command::Sweep { scenario, param, values, ut, policy, out_dir, runs, seed } => {
            let mc = match (runs, seed) {
                (Some(r), Some(s)) => Some((*r, *s)),
                (None, None) => None,
                (Some(_), None) => return Err(CliError::Usage("--runs needs an explicit --seed".into())),
                (None, Some(_)) => return Err(CliError::Usage("--seed is only used together with --runs".into())),
            };
            let loaded = parse_scenario(scenario)?;
            let base = merge_ut(loaded.ut, ut);
            fs::create_dir_all(out_dir).map_err(|source| CliError::Write {
                path: out_dir.display().to_string(),
                source,
            })?;
            let stem = scenario.file_stem().map_or_else(|| "scenario".into(), |s| s.to_string_lossy().into_owned());
            let mut written = Vec::with_capacity(values.len());
            for &value in values {
                let mut settings = base;
                let name = match param {
                    SweepParam::Alpha => {
                        settings.alpha = value;
                        "alpha"
                    }
                    SweepParam::Beta => {
                        settings.beta = value;
                        "beta"
                    }
                    SweepParam::Kappa => {
                        settings.kappa = value;
                        "kappa"
                    }
                };
                let text = match mc {
                    Some((runs, seed)) => report::to_json(&compare_report(&loaded, &settings, &policy.config(), runs, seed)?.0)?,
                    None => report::to_json(&allocate_report(&loaded, Mode::Stoch, &settings, &policy.config())?)?,
                };
                let path = out_dir.join(format!("{stem}_{name}_{value}.json"));
                write_file(&path, text.as_bytes())?;
                written.push(path);
            }
            Ok(written)
        }
    }
}

impl PolicyArgs {
    fn config(&self) -> InterpretConfig {
        InterpretConfig { floor: self.floor, sentinel: self.sentinel }
    }
}

fn merge_ut(file: UtSettings, flags: &UtArgs) -> UtSettings {
    UtSettings {
        alpha: flags.alpha.unwrap_or(file.alpha),
        beta: flags.beta.unwrap_or(file.beta),
        kappa: flags.kappa.unwrap_or(file.kappa),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Write { path: path.display().to_string(), source })
}

fn binary_rows(a: &BinaryAssignment) -> Vec<Vec<u8>> {
    a.to_rows()
}

/// Deterministic and stochastic allocation of one scenario.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub deterministic: Allocation,
    pub stochastic: StochasticAssignment,
    pub interpretation: Interpretation,
}

pub fn run_pipeline(
    loaded: &LoadedScenario,
    settings: &UtSettings,
    policy: &InterpretConfig,
) -> Result<PipelineRun, CliError> {
    let s = &loaded.scenario;
    let params = settings.params(joint_state(s).dim())?;
    let deterministic = deterministic_allocate(s)?;
    let stochastic = stochastic_allocate(s, &params)?;
    let interpretation = interpret(&stochastic, policy)?;
    Ok(PipelineRun { deterministic, stochastic, interpretation })
}

pub fn allocate_report(
    loaded: &LoadedScenario,
    mode: Mode,
    settings: &UtSettings,
    policy: &InterpretConfig,
) -> Result<AllocateReport, CliError> {
    let provenance = Provenance::new(&loaded.scenario.name, &loaded.sha256);
    match mode {
        Mode::Det => {
            let det = deterministic_allocate(&loaded.scenario)?;
            Ok(AllocateReport {
                provenance,
                mode: "det".into(),
                gamma_0: binary_rows(&det.assignment),
                gamma_0_cost: det.total_cost,
                ut: None,
                stochastic: None,
            })
        }
        Mode::Stoch => {
            let run = run_pipeline(loaded, settings, policy)?;
            let sa = &run.stochastic;
            let it = &run.interpretation;
            Ok(AllocateReport {
                provenance,
                mode: "stoch".into(),
                gamma_0: binary_rows(&run.deterministic.assignment),
                gamma_0_cost: run.deterministic.total_cost,
                ut: Some(UtReport::from(&sa.params)),
                stochastic: Some(StochasticSection {
                    gamma_s: rows(&sa.gamma_s),
                    sigma_s: rows(&sa.sigma_s),
                    p_gamma: rows(&sa.p_gamma),
                    q: rows(&it.weighted_inverse.q),
                    floor: policy.floor,
                    sentinel: it.weighted_inverse.sentinel,
                    gamma_f: binary_rows(&it.assignment),
                    gamma_f_q_total: it.total,
                    low_confidence: it.low_confidence,
                    per_point: sa.per_point.iter().map(|a| a.tasks().to_vec()).collect(),
                    mean_cost: rows(&sa.cost.mean_cost),
                }),
            })
        }
    }
}

pub fn compare_report(
    loaded: &LoadedScenario,
    settings: &UtSettings,
    policy: &InterpretConfig,
    runs: usize,
    seed: u64,
) -> Result<(CompareReport, McOutcome), CliError> {
    let run = run_pipeline(loaded, settings, policy)?;
    let outcome = monte_carlo_compare(
        &loaded.scenario,
        &[
            NamedAssignment::new("gamma_0", run.deterministic.assignment.clone()),
            NamedAssignment::new("gamma_f", run.interpretation.assignment.clone()),
        ],
        runs,
        seed,
    )?;
    let report = CompareReport {
        provenance: Provenance::new(&loaded.scenario.name, &loaded.sha256),
        ut: UtReport::from(&run.stochastic.params),
        gamma_0: binary_rows(&run.deterministic.assignment),
        gamma_s: rows(&run.stochastic.gamma_s),
        sigma_s: rows(&run.stochastic.sigma_s),
        q: rows(&run.interpretation.weighted_inverse.q),
        gamma_f: binary_rows(&run.interpretation.assignment),
        low_confidence: run.interpretation.low_confidence,
        reproduction: Reproduction::new(outcome.report.reduction_ratio),
        monte_carlo: outcome.report.clone(),
    };
    Ok((report, outcome))
}
