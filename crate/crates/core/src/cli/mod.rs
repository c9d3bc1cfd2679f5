//! Command-line front end: flag and config-file parsing, command execution.
//!
//! Values come from, in increasing priority: built-in defaults, an optional
//! TOML file given with `--config`, then flags.

pub mod output;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use thiserror::Error;

use crate::arrivals::{sample_trace, DistributionSpec, Seed};
use crate::error::Error;
use crate::model::{LogBase, SimConfig};
use crate::montecarlo::{
    evaluate_trace, run_sweep, Method, SweepParam, SweepPlan, DEFAULT_MEAN_GRID,
    DEFAULT_REPLICATIONS,
};
use crate::policies::{PolicyParams, DEFAULT_EPSILON_REL, DEFAULT_SAT_ALPHA};

pub const DEFAULT_HORIZON: usize = 500;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_DIST: &str = "exponential:10";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Sim(#[from] Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for bad invocations, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Sim(Error::InvalidDistribution(_) | Error::InvalidParams(_)) => 2,
            CliError::Sim(_) | CliError::Io { .. } => 1,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Debug, Parser)]
#[command(
    name = "eh-sim",
    version,
    about = "Power management for energy-harvesting AWGN transmitters"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one trace and print each policy's throughput
    Run(RunArgs),
    /// Replicated sweep over the arrival mean or the horizon; writes CSV
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Table,
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// TOML config file; flags override its values
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Arrival distribution as kind:params, e.g. exponential:10,
    /// bernoulli:10,0.5, constant:5, uniform:0,20, empirical:1,2,3
    #[arg(long, value_name = "KIND:PARAMS")]
    pub dist: Option<String>,

    /// Number of blocks
    #[arg(long = "L", value_name = "BLOCKS")]
    pub horizon: Option<usize>,

    /// Base seed; replication r uses seed + r
    #[arg(long, env = "EH_SIM_SEED")]
    pub seed: Option<u64>,

    /// Comma-separated subset of naive,sat,bet,apa,opm,ub
    #[arg(long, value_delimiter = ',')]
    pub policies: Option<Vec<String>>,

    /// Relative backoff: P = mean * (1 - epsilon_rel)
    #[arg(long)]
    pub epsilon_rel: Option<f64>,

    /// SAT save phase lasts ceil(L^alpha) blocks
    #[arg(long)]
    pub sat_alpha: Option<f64>,

    /// Rate logarithm base: 2 (bits) or e (nats)
    #[arg(long, value_name = "2|e")]
    pub log_base: Option<String>,

    /// Output file (stdout if omitted)
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args, Default)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Also write the per-block schedule of every policy as CSV
    #[arg(long, value_name = "PATH")]
    pub schedule_out: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Sweep the arrival mean over these values
    #[arg(long, value_delimiter = ',', conflicts_with = "horizon_sweep")]
    pub mean_sweep: Option<Vec<f64>>,

    /// Sweep the horizon over these block counts
    #[arg(long = "L-sweep", value_delimiter = ',')]
    pub horizon_sweep: Option<Vec<usize>>,

    /// Replications per sweep point
    #[arg(long)]
    pub reps: Option<usize>,
}

/// Distribution in a config file: either `"exponential:10"` or a table with
/// a `kind` key.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum FileDistribution {
    Inline(String),
    Table(DistributionSpec),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileSweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(alias = "dist")]
    pub distribution: Option<FileDistribution>,
    #[serde(rename = "L", alias = "horizon")]
    pub horizon: Option<usize>,
    pub seed: Option<u64>,
    #[serde(alias = "replications")]
    pub reps: Option<usize>,
    pub policies: Option<Vec<String>>,
    pub epsilon_rel: Option<f64>,
    pub sat_alpha: Option<f64>,
    pub log_base: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub sweep: Option<FileSweep>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| usage(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }
}

/// Fully resolved settings for either command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub distribution: DistributionSpec,
    pub horizon: usize,
    pub seed: u64,
    pub replications: usize,
    pub methods: Vec<Method>,
    pub epsilon_rel: f64,
    pub sat_alpha: f64,
    pub sim: SimConfig,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub sweep: Option<(SweepParam, Vec<f64>)>,
}

fn parse_methods(names: &[String]) -> Result<Vec<Method>, CliError> {
    let methods = names
        .iter()
        .map(|n| n.trim())
        .filter(|n| !n.is_empty())
        .map(|n| n.parse::<Method>().map_err(|e| usage(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    if methods.is_empty() {
        return Err(usage("--policies selects no policy"));
    }
    Ok(methods)
}

impl RunConfig {
    pub fn resolve(common: &CommonArgs, file: &FileConfig) -> Result<Self, CliError> {
        let distribution = match (&common.dist, &file.distribution) {
            (Some(s), _) => s.parse::<DistributionSpec>()?,
            (None, Some(FileDistribution::Inline(s))) => s.parse::<DistributionSpec>()?,
            (None, Some(FileDistribution::Table(spec))) => {
                spec.validate()?;
                spec.clone()
            }
            (None, None) => DEFAULT_DIST.parse::<DistributionSpec>()?,
        };
        let horizon = common.horizon.or(file.horizon).unwrap_or(DEFAULT_HORIZON);
        if horizon == 0 {
            return Err(usage("--L must be at least 1"));
        }
        let methods = match common.policies.as_ref().or(file.policies.as_ref()) {
            Some(names) => parse_methods(names)?,
            None => Method::ALL.to_vec(),
        };
        let epsilon_rel = common
            .epsilon_rel
            .or(file.epsilon_rel)
            .unwrap_or(DEFAULT_EPSILON_REL);
        let sat_alpha = common
            .sat_alpha
            .or(file.sat_alpha)
            .unwrap_or(DEFAULT_SAT_ALPHA);
        PolicyParams::from_mean(1.0, epsilon_rel, sat_alpha)?;
        let log_base = match common.log_base.as_ref().or(file.log_base.as_ref()) {
            Some(s) => s.parse::<LogBase>()?,
            None => LogBase::Bits,
        };
        let replications = file.reps.unwrap_or(DEFAULT_REPLICATIONS);
        let sweep = file.sweep.as_ref().map(|s| (s.param, s.values.clone()));
        Ok(Self {
            distribution,
            horizon,
            seed: common.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            replications,
            methods,
            epsilon_rel,
            sat_alpha,
            sim: SimConfig::with_log_base(log_base),
            out: common.out.clone().or_else(|| file.out.clone()),
            format: common.format.or(file.format),
            sweep,
        })
    }

    fn from_args(common: &CommonArgs) -> Result<Self, CliError> {
        let file = match &common.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        Self::resolve(common, &file)
    }

    pub fn sweep_plan(&self) -> SweepPlan {
        let (param, values) = self
            .sweep
            .clone()
            .unwrap_or((SweepParam::Mean, DEFAULT_MEAN_GRID.to_vec()));
        SweepPlan {
            distribution: self.distribution.clone(),
            param,
            values,
            horizon: self.horizon,
            replications: self.replications,
            base_seed: self.seed,
            methods: self.methods.clone(),
            epsilon_rel: self.epsilon_rel,
            sat_alpha: self.sat_alpha,
            config: self.sim,
        }
    }
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

/// Simulates one trace drawn with the configured seed.
pub fn cmd_run(args: &RunArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = RunConfig::from_args(&args.common)?;
    let trace = sample_trace(&cfg.distribution, cfg.horizon, Seed(cfg.seed))?;
    let params = PolicyParams::from_mean(cfg.distribution.mean(), cfg.epsilon_rel, cfg.sat_alpha)?;
    let outcomes = evaluate_trace(&trace, &cfg.methods, &params, &cfg.sim)?;

    let text = match cfg.format.unwrap_or(Format::Table) {
        Format::Table => output::run_table(&cfg, &params, &outcomes),
        Format::Csv => output::run_csv(&outcomes),
        Format::Json => output::run_json(&cfg, &params, &outcomes)?,
    };
    emit(cfg.out.as_deref(), &text, stdout)?;

    if let Some(path) = &args.schedule_out {
        emit(Some(path), &output::schedule_csv(&trace, &outcomes), stdout)?;
    }
    Ok(())
}

/// Runs a replicated sweep and writes one row per (value, policy).
pub fn cmd_sweep(args: &SweepArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = RunConfig::from_args(&args.common)?;
    if let Some(r) = args.reps {
        cfg.replications = r;
    }
    match (&args.mean_sweep, &args.horizon_sweep) {
        (Some(_), Some(_)) => return Err(usage("--mean-sweep and --L-sweep are exclusive")),
        (Some(v), None) => cfg.sweep = Some((SweepParam::Mean, v.clone())),
        (None, Some(v)) => {
            cfg.sweep = Some((SweepParam::Horizon, v.iter().map(|&l| l as f64).collect()))
        }
        (None, None) => {}
    }
    let plan = cfg.sweep_plan();
    plan.validate()?;
    let result = run_sweep(&plan)?;

    let text = match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => output::sweep_csv(&result),
        Format::Json => output::sweep_json(&plan, &result)?,
        Format::Table => output::sweep_table(&result),
    };
    emit(cfg.out.as_deref(), &text, stdout)
}

/// Parses `args` (program name first) and runs the selected command.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            return stdout
                .write_all(e.render().to_string().as_bytes())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                });
        }
        Err(e) => return Err(usage(e.render().to_string())),
    };
    match &cli.command {
        Command::Run(a) => cmd_run(a, stdout),
        Command::Sweep(a) => cmd_sweep(a, stdout),
    }
}
