mod config;

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, Write};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use socialcap::ingest::{bucket_events, hierarchy_from_events, parse_log, IngestError};
use socialcap::report::{interval_label, render_explain, PipelineOutput};
use socialcap::{emit_report, run_pipeline, PipelineError, RunConfig};

use crate::config::{resolve, ConfigError, RunArgs};

const EXIT_ENGINE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_NO_DATA: u8 = 4;

#[derive(Parser)]
#[command(name = "socialcap", version, about = "Social capital of contributors from contribution logs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate an input file and summarize it
    Ingest(RunArgs),
    /// Run the full pipeline and print the report
    Compute(RunArgs),
    /// Dump per-interval links, relations and benevolence
    Explain(RunArgs),
}

enum Failure {
    Config(ConfigError),
    Pipeline(PipelineError),
    NoData,
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::NoData => EXIT_NO_DATA,
            Failure::Pipeline(e) => match e {
                PipelineError::Ingest(IngestError::Malformed(_)) => EXIT_PARSE,
                PipelineError::Config(_) | PipelineError::Model(_) => EXIT_CONFIG,
                _ => EXIT_ENGINE,
            },
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure::Pipeline(e)
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        Failure::Pipeline(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Ingest(args) => ingest(args),
        Command::Compute(args) => compute(args, false),
        Command::Explain(args) => compute(args, true),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Config(e) => eprintln!("error: config: {e}"),
                Failure::Pipeline(e) => eprintln!("error: {e}"),
                Failure::NoData => eprintln!("no data"),
            }
            ExitCode::from(failure.exit_code())
        }
    }
}

fn warn_tallies(out: &PipelineOutput) {
    let t = &out.tallies;
    if t.skipped_lines > 0 {
        eprintln!("warning: skipped {} malformed line(s)", t.skipped_lines);
    }
    if !t.unknown_subgroup_ids.is_empty() {
        let ids: Vec<&str> = t.unknown_subgroup_ids.iter().map(|a| a.as_str()).collect();
        eprintln!("warning: subgroup ids with no records: {}", ids.join(","));
    }
    if t.degenerate_closures > 0 {
        eprintln!("warning: skipped {} closure(s) with a zero relation sum", t.degenerate_closures);
    }
}

fn compute(args: &RunArgs, explain_only: bool) -> Result<(), Failure> {
    let config = resolve(args, true)?;
    let out = run_pipeline(&config)?;
    warn_tallies(&out);
    let mut stdout = std::io::stdout().lock();
    if explain_only {
        let _ = stdout.write_all(render_explain(&out, config.precision).as_bytes());
    } else {
        let _ = stdout.write_all(emit_report(&out.report, config.format, config.precision).as_bytes());
        if config.explain {
            eprint!("{}", render_explain(&out, config.precision));
        }
    }
    if out.report.is_empty() {
        return Err(Failure::NoData);
    }
    Ok(())
}

fn ingest(args: &RunArgs) -> Result<(), Failure> {
    let config: RunConfig = resolve(args, false)?;
    if !config.input.exists() {
        return Err(ConfigError::Invalid(format!("{} does not exist", config.input.display())).into());
    }
    let file = File::open(&config.input).map_err(IngestError::Io)?;
    let log = parse_log(BufReader::new(file), config.parse_mode)?;
    for issue in &log.skipped {
        eprintln!("warning: skipped {issue}");
    }
    let records = &log.records;
    let count = |f: fn(&socialcap::ContributionRecord) -> String| records.iter().map(f).collect::<BTreeSet<_>>().len();
    println!("records {}", records.len());
    println!("skipped {}", log.skipped.len());
    println!("contributors {}", count(|r| r.contributor.clone()));
    println!("tasks {}", count(|r| r.package.clone()));
    println!("subtasks {}", count(|r| r.subtask_id().to_string()));
    println!("commits {}", count(|r| r.commit_id.clone()));
    println!("lines {}", records.iter().map(|r| r.interaction_value()).sum::<u64>());
    if !config.settings.intervals.is_empty() && !records.is_empty() {
        let events: Vec<_> = records.iter().map(|r| r.to_event()).collect();
        let hierarchy = hierarchy_from_events("summary", &events, config.settings.intervals.clone())
            .map_err(PipelineError::from)?;
        let buckets = bucket_events(&events, &hierarchy);
        for (i, (iv, bucket)) in hierarchy.intervals().iter().zip(&buckets.intervals).enumerate() {
            println!("{} [{}, {}) events {}", interval_label(i), iv.start, iv.end, bucket.len());
        }
        println!("out_of_range {}", buckets.out_of_range);
    }
    if records.is_empty() {
        return Err(Failure::NoData);
    }
    Ok(())
}
