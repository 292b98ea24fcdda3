//! Flag and config-file handling. Flags win over file values; relative paths
//! in a config file resolve against the file's directory.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;
use socialcap::capital::{BeliefConfig, BeliefMode};
use socialcap::report::{parse_intervals, DEFAULT_PRECISION, DEFAULT_TAU};
use socialcap::{AgentId, OutputFormat, ParseMode, RunConfig, RunSettings};
use thiserror::Error;

pub const DEFAULT_LAMBDA: f64 = 1.0;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Contribution log (JSON lines, or CSV with a header row)
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Key-value config file (TOML); flags override its values
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Half-open epoch-second intervals, e.g. "s1:e1,s2:e2"
    #[arg(long, value_name = "s1:e1,s2:e2,...")]
    pub intervals: Option<String>,
    /// Promotion threshold for implicit links
    #[arg(long, value_name = "R")]
    pub tau: Option<f64>,
    /// Belief decay rate for exponential mode
    #[arg(long, value_name = "R")]
    pub lambda: Option<f64>,
    /// Belief mode: ratio or exp
    #[arg(long, value_name = "ratio|exp")]
    pub belief: Option<String>,
    /// Comma-separated agent ids to analyze
    #[arg(long, value_name = "a,b,c")]
    pub subgroup: Option<String>,
    /// Task (package) to analyze when the log spans several
    #[arg(long, value_name = "NAME")]
    pub task: Option<String>,
    /// Relation overrides, one JSON object per line
    #[arg(long, value_name = "PATH")]
    pub relation_pins: Option<PathBuf>,
    /// Report format: csv or json-lines
    #[arg(long, value_name = "csv|json-lines")]
    pub format: Option<String>,
    /// Decimal places in the report
    #[arg(long, value_name = "N")]
    pub precision: Option<usize>,
    /// Also dump intermediate links and relations to stderr
    #[arg(long)]
    pub explain: bool,
    /// Skip malformed input lines instead of failing
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    input: Option<PathBuf>,
    intervals: Option<String>,
    tau: Option<f64>,
    lambda: Option<f64>,
    belief: Option<String>,
    subgroup: Option<String>,
    task: Option<String>,
    relation_pins: Option<PathBuf>,
    format: Option<String>,
    precision: Option<usize>,
    explain: Option<bool>,
    lenient: Option<bool>,
}

fn load_file(path: &Path) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Read { path: path.to_owned(), source })?;
    let mut cfg: FileConfig = toml::from_str(&text)
        .map_err(|e| ConfigError::Parse { path: path.to_owned(), message: e.to_string() })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let rebase = |p: PathBuf| if p.is_relative() { base.join(p) } else { p };
    cfg.input = cfg.input.map(rebase);
    cfg.relation_pins = cfg.relation_pins.map(rebase);
    Ok(cfg)
}

fn parse_belief(s: &str) -> Result<BeliefMode, ConfigError> {
    match s {
        "ratio" => Ok(BeliefMode::Ratio),
        "exp" | "exponential" => Ok(BeliefMode::Exponential),
        other => Err(ConfigError::Invalid(format!("unknown belief mode {other:?} (expected ratio or exp)"))),
    }
}

fn split_ids(s: &str) -> Vec<AgentId> {
    s.split(',').map(str::trim).filter(|s| !s.is_empty()).map(AgentId::from).collect()
}

/// Merges flags over the optional config file.
///
/// `require_intervals` is false for `ingest`, which can summarize a log
/// without bucketing it.
pub fn resolve(args: &RunArgs, require_intervals: bool) -> Result<RunConfig, ConfigError> {
    let file = match &args.config {
        Some(p) => load_file(p)?,
        None => FileConfig::default(),
    };
    let input = args
        .input
        .clone()
        .or(file.input)
        .ok_or_else(|| ConfigError::Invalid("no input given (use --input or `input` in the config file)".into()))?;
    let intervals = match args.intervals.as_deref().or(file.intervals.as_deref()) {
        Some(spec) => parse_intervals(spec).map_err(ConfigError::Invalid)?,
        None if require_intervals => {
            return Err(ConfigError::Invalid("no intervals given (use --intervals)".into()));
        }
        None => Vec::new(),
    };
    let mode = match args.belief.as_deref().or(file.belief.as_deref()) {
        Some(s) => parse_belief(s)?,
        None => BeliefMode::Ratio,
    };
    let lambda = args.lambda.or(file.lambda).unwrap_or(DEFAULT_LAMBDA);
    let belief = BeliefConfig::new(lambda, mode).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let tau = args.tau.or(file.tau).unwrap_or(DEFAULT_TAU);
    if !tau.is_finite() || tau < 0.0 {
        return Err(ConfigError::Invalid(format!("tau must be finite and non-negative: {tau}")));
    }
    let format = match args.format.as_deref().or(file.format.as_deref()) {
        Some(s) => s.parse::<OutputFormat>().map_err(ConfigError::Invalid)?,
        None => OutputFormat::Csv,
    };
    let subgroup = args.subgroup.as_deref().or(file.subgroup.as_deref()).map(split_ids);
    if subgroup.as_ref().is_some_and(Vec::is_empty) {
        return Err(ConfigError::Invalid("subgroup is empty".into()));
    }

    let mut settings = RunSettings::new(intervals);
    settings.tau = tau;
    settings.belief = belief;
    settings.subgroup = subgroup;
    settings.task = args.task.clone().or(file.task).map(Into::into);
    Ok(RunConfig {
        input,
        relation_pins: args.relation_pins.clone().or(file.relation_pins),
        parse_mode: if args.lenient || file.lenient.unwrap_or(false) { ParseMode::Lenient } else { ParseMode::Strict },
        settings,
        format,
        precision: args.precision.or(file.precision).unwrap_or(DEFAULT_PRECISION),
        explain: args.explain || file.explain.unwrap_or(false),
    })
}
