//! End-to-end pipeline from a contribution log to an [`SCReport`], plus the
//! CSV / JSON-lines renderers and the intermediate-state dump.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capital::{
    accumulate_sc, capacity_from_commits, net_sc, score_group, BeliefConfig, BeliefMode, CapitalError,
    CapitalRow, HopTable,
};
use crate::ingest::{
    bucket_events, derive_links, hierarchy_from_events, outgoing_volume, parse_log, subgroup_filter,
    ContributionRecord, IngestError, ParseIssue, ParseMode,
};
use crate::links::{update_relation, ClosureDiagnostics, LinkError, LinkGraph};
use crate::model::{
    build_hierarchy, AgentId, Interval, IntervalReport, ModelError, RelationMatrix, ReportRow, SCReport,
    Task, TaskId,
};

pub const CSV_HEADER: &str =
    "interval,agent,links,relation,capacity,benevolence,pbenevolence,instant_sc,accumulative_sc,net_sc";

pub const DEFAULT_TAU: f64 = 1.0;
pub const DEFAULT_PRECISION: usize = 3;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("ingest: {0}")]
    Ingest(#[from] IngestError),
    #[error("config: {0}")]
    Config(String),
    #[error("core-model: {0}")]
    Model(#[from] ModelError),
    #[error("link-engine: {0}")]
    Link(#[from] LinkError),
    #[error("capital-engine: {0}")]
    Capital(#[from] CapitalError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputFormat {
    #[default]
    Csv,
    JsonLines,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "json-lines" | "jsonl" => Ok(Self::JsonLines),
            other => Err(format!("unknown format {other:?} (expected csv or json-lines)")),
        }
    }
}

/// Replaces the computed relation of one agent in one interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationPin {
    pub interval: String,
    pub agent: AgentId,
    pub relation: f64,
}

/// Reads relation pins, one JSON object per line.
pub fn parse_relation_pins(text: &str) -> Result<Vec<RelationPin>, PipelineError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str::<RelationPin>(l).map_err(|e| {
                IngestError::Malformed(ParseIssue { line: i + 1, field: None, message: e.to_string() }).into()
            })
        })
        .collect()
}

/// Parses `"s1:e1,s2:e2,..."` into half-open intervals.
pub fn parse_intervals(spec: &str) -> Result<Vec<Interval>, String> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (s, e) = pair.split_once(':').ok_or_else(|| format!("interval {pair:?} is not start:end"))?;
            let parse = |v: &str| v.trim().parse::<i64>().map_err(|_| format!("bad epoch seconds {v:?}"));
            Ok(Interval::new(parse(s)?, parse(e)?))
        })
        .collect()
}

/// Analysis settings independent of where the records come from.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub intervals: Vec<Interval>,
    pub tau: f64,
    pub belief: BeliefConfig,
    pub subgroup: Option<Vec<AgentId>>,
    pub task: Option<TaskId>,
    pub relation_pins: Vec<RelationPin>,
}

impl RunSettings {
    pub fn new(intervals: Vec<Interval>) -> Self {
        Self {
            intervals,
            tau: DEFAULT_TAU,
            belief: BeliefConfig::ratio(),
            subgroup: None,
            task: None,
            relation_pins: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    pub relation_pins: Option<PathBuf>,
    pub parse_mode: ParseMode,
    pub settings: RunSettings,
    pub format: OutputFormat,
    pub precision: usize,
    pub explain: bool,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let missing = |p: &PathBuf| PipelineError::Config(format!("{} does not exist", p.display()));
        if !self.input.exists() {
            return Err(missing(&self.input));
        }
        if let Some(p) = &self.relation_pins {
            if !p.exists() {
                return Err(missing(p));
            }
        }
        validate_intervals(&self.settings.intervals)?;
        Ok(())
    }
}

fn validate_intervals(intervals: &[Interval]) -> Result<(), ModelError> {
    build_hierarchy("-", vec![Task::new("-", vec![])], intervals.to_vec()).map(|_| ())
}

/// Intermediate state for one interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalTrace {
    pub label: String,
    pub graph: LinkGraph,
    pub relations: RelationMatrix,
    pub closure: ClosureDiagnostics,
    pub pinned: Vec<AgentId>,
    pub rows: Vec<CapitalRow>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Tallies {
    pub skipped_lines: usize,
    pub out_of_range: usize,
    pub unknown_subgroup_ids: Vec<AgentId>,
    pub degenerate_closures: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PipelineOutput {
    pub report: SCReport,
    pub task: Option<TaskId>,
    pub trace: Vec<IntervalTrace>,
    pub tallies: Tallies,
}

/// Reads the configured files and runs [`compute`].
pub fn run_pipeline(config: &RunConfig) -> Result<PipelineOutput, PipelineError> {
    config.validate()?;
    let file = File::open(&config.input).map_err(IngestError::Io)?;
    let log = parse_log(BufReader::new(file), config.parse_mode)?;
    let mut settings = config.settings.clone();
    if let Some(path) = &config.relation_pins {
        let text = std::fs::read_to_string(path).map_err(IngestError::Io)?;
        settings.relation_pins.extend(parse_relation_pins(&text)?);
    }
    let mut out = compute(&log.records, &settings)?;
    out.tallies.skipped_lines = log.skipped.len();
    Ok(out)
}

pub fn interval_label(index: usize) -> String {
    format!("t{}", index + 1)
}

/// Runs link derivation, closure, relation update and the capital measures
/// over every interval.
pub fn compute(records: &[ContributionRecord], settings: &RunSettings) -> Result<PipelineOutput, PipelineError> {
    validate_intervals(&settings.intervals)?;
    LinkGraph::new(settings.tau)?;
    let mut out = PipelineOutput::default();

    let records = match &settings.subgroup {
        Some(ids) => {
            let f = subgroup_filter(records, ids);
            out.tallies.unknown_subgroup_ids = f.unknown;
            f.records
        }
        None => records.to_vec(),
    };
    let task = match &settings.task {
        Some(t) => t.clone(),
        None => {
            let packages: BTreeSet<&str> = records.iter().map(|r| r.package.as_str()).collect();
            match packages.len() {
                0 => return Ok(out),
                1 => TaskId::from(*packages.first().expect("one package")),
                _ => {
                    let names: Vec<&str> = packages.into_iter().collect();
                    return Err(PipelineError::Config(format!(
                        "records span {} tasks ({}); select one with --task",
                        names.len(),
                        names.join(", ")
                    )));
                }
            }
        }
    };
    let events: Vec<_> =
        records.iter().filter(|r| r.package == task.as_str()).map(ContributionRecord::to_event).collect();
    if events.is_empty() {
        return Ok(out);
    }
    let hierarchy = hierarchy_from_events(task.as_str(), &events, settings.intervals.clone())?;
    let buckets = bucket_events(&events, &hierarchy);
    out.tallies.out_of_range = buckets.out_of_range;
    out.task = Some(task.clone());

    let active: BTreeSet<&AgentId> = buckets.intervals.iter().flatten().map(|e| &e.agent_id).collect();
    let agents: Vec<AgentId> = match &settings.subgroup {
        Some(ids) => {
            let mut seen = BTreeSet::new();
            ids.iter().filter(|a| active.contains(a) && seen.insert(*a)).cloned().collect()
        }
        None => active.iter().map(|a| (*a).clone()).collect(),
    };
    if agents.is_empty() {
        return Ok(out);
    }

    let labels: Vec<String> = (0..settings.intervals.len()).map(interval_label).collect();
    for pin in &settings.relation_pins {
        if !labels.contains(&pin.interval) {
            return Err(PipelineError::Config(format!("relation pin names unknown interval {:?}", pin.interval)));
        }
        if !agents.contains(&pin.agent) {
            return Err(PipelineError::Config(format!("relation pin names unknown agent {}", pin.agent)));
        }
    }

    let in_range: Vec<_> = buckets.intervals.iter().flatten().cloned().collect();
    let capacities: BTreeMap<&AgentId, f64> =
        agents.iter().map(|a| (a, capacity_from_commits(&in_range, a))).collect();
    let mut accumulated: BTreeMap<AgentId, f64> = agents.iter().map(|a| (a.clone(), 0.0)).collect();

    for (idx, (interval, events)) in settings.intervals.iter().zip(&buckets.intervals).enumerate() {
        let label = &labels[idx];
        let mut graph = LinkGraph::new(settings.tau)?;
        for link in derive_links(events) {
            graph.insert(link);
        }
        let explicit_relations = graph.relations(&task, false)?;
        let closure = graph.close(&explicit_relations)?;
        out.tallies.degenerate_closures += closure.degenerate_skipped;
        let relations = graph.relations(&task, true)?;

        let mut links_total: BTreeMap<AgentId, f64> = BTreeMap::new();
        for ((source, _), v) in outgoing_volume(graph.explicit_links()) {
            *links_total.entry(source).or_default() += v;
        }

        let mut pinned = Vec::new();
        let mut rows = Vec::with_capacity(agents.len());
        for agent in &agents {
            let outgoing: Vec<f64> = relations.iter().filter(|(s, _, _)| *s == agent).map(|(_, _, v)| v).collect();
            let mut relation = if outgoing.is_empty() { 0.0 } else { update_relation(&outgoing, &[])? };
            if let Some(pin) = settings.relation_pins.iter().find(|p| &p.interval == label && &p.agent == agent) {
                relation = pin.relation;
                pinned.push(agent.clone());
            }
            rows.push(CapitalRow::new(agent.clone(), task.clone(), idx, relation, capacities[agent]));
        }
        let hops = match settings.belief.mode() {
            BeliefMode::Ratio => HopTable::direct(),
            BeliefMode::Exponential => HopTable::from_adjacency(&graph.explicit_adjacency()),
        };
        score_group(&mut rows, &settings.belief, &hops)?;

        let mut report_rows = Vec::with_capacity(rows.len());
        for row in &rows {
            let acc = accumulated.get_mut(&row.agent_id).expect("agent registered");
            *acc = accumulate_sc(*acc, row.instant_sc);
            report_rows.push(ReportRow {
                agent: row.agent_id.clone(),
                links: links_total.get(&row.agent_id).copied().unwrap_or(0.0),
                relation: row.relation,
                capacity: row.capacity,
                benevolence: row.benevolence,
                potential_benevolence: row.potential_benevolence,
                instant_sc: row.instant_sc,
                accumulative_sc: *acc,
            });
        }
        let net = net_sc(report_rows.iter().map(|r| r.accumulative_sc))?;
        out.report.intervals.push(IntervalReport {
            label: label.clone(),
            interval: *interval,
            rows: report_rows,
            net_sc: net,
        });
        out.trace.push(IntervalTrace { label: label.clone(), graph, relations, closure, pinned, rows });
    }
    Ok(out)
}

/// Rounds half-to-even at `precision` decimals and drops trailing zeros.
pub fn format_number(value: f64, precision: usize) -> String {
    let s = format!("{value:.precision$}");
    let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_owned() } else { s };
    if s == "-0" {
        "0".to_owned()
    } else {
        s
    }
}

pub fn emit_report(report: &SCReport, format: OutputFormat, precision: usize) -> String {
    let mut out = String::new();
    if format == OutputFormat::Csv {
        out.push_str(CSV_HEADER);
        out.push('\n');
    }
    for iv in &report.intervals {
        for row in &iv.rows {
            let nums = [
                row.links,
                row.relation,
                row.capacity,
                row.benevolence,
                row.potential_benevolence,
                row.instant_sc,
                row.accumulative_sc,
                iv.net_sc,
            ]
            .map(|v| format_number(v, precision));
            match format {
                OutputFormat::Csv => {
                    let _ = writeln!(out, "{},{},{}", csv_field(&iv.label), csv_field(row.agent.as_str()), nums.join(","));
                }
                OutputFormat::JsonLines => {
                    let names = &CSV_HEADER.split(',').collect::<Vec<_>>()[2..];
                    let _ = write!(out, "{{\"interval\":{},\"agent\":{}", json_str(&iv.label), json_str(row.agent.as_str()));
                    for (name, v) in names.iter().zip(&nums) {
                        let _ = write!(out, ",\"{name}\":{v}");
                    }
                    out.push_str("}\n");
                }
            }
        }
    }
    out
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Human-readable dump of links, relations and capital rows per interval.
pub fn render_explain(out: &PipelineOutput, precision: usize) -> String {
    let n = |v: f64| format_number(v, precision);
    let mut s = String::new();
    if let Some(task) = &out.task {
        let _ = writeln!(s, "task {task}");
    }
    for trace in &out.trace {
        let _ = writeln!(s, "== {} (tau {})", trace.label, n(trace.graph.tau()));
        let _ = writeln!(s, "explicit links:");
        for l in trace.graph.explicit_links() {
            let _ = writeln!(s, "  {} {} -> {} {}", l.subtask_id(), l.source(), l.target(), n(l.value()));
        }
        let _ = writeln!(s, "implicit links:");
        for l in trace.graph.implicit_links() {
            let _ = writeln!(s, "  {} {} -> {} {}", l.subtask_id(), l.source(), l.target(), n(l.value()));
        }
        let c = trace.closure;
        let _ = writeln!(
            s,
            "closure: formed {} promoted {} degenerate {}",
            c.implicit_formed, c.promoted, c.degenerate_skipped
        );
        let _ = writeln!(s, "relations:");
        for (src, dst, v) in trace.relations.iter() {
            let _ = writeln!(s, "  {src} -> {dst} {}", n(v));
        }
        let _ = writeln!(s, "agents:");
        for r in &trace.rows {
            let pin = if trace.pinned.contains(&r.agent_id) { " (pinned)" } else { "" };
            let _ = writeln!(
                s,
                "  {} relation {}{} capacity {} benevolence {} pbenevolence {} instant_sc {}",
                r.agent_id,
                n(r.relation),
                pin,
                n(r.capacity),
                n(r.benevolence),
                n(r.potential_benevolence),
                n(r.instant_sc)
            );
        }
    }
    let t = &out.tallies;
    let _ = writeln!(
        s,
        "tallies: skipped lines {} out of range {} degenerate closures {} unknown subgroup ids [{}]",
        t.skipped_lines,
        t.out_of_range,
        t.degenerate_closures,
        t.unknown_subgroup_ids.iter().map(AgentId::as_str).collect::<Vec<_>>().join(",")
    );
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vin_report() -> SCReport {
        SCReport {
            intervals: vec![IntervalReport {
                label: "t1".into(),
                interval: Interval::new(0, 1),
                rows: vec![ReportRow {
                    agent: "Vin".into(),
                    links: 204.0,
                    relation: 204.0,
                    capacity: 21.0,
                    benevolence: 4284.0,
                    potential_benevolence: 980.0,
                    instant_sc: 4.371,
                    accumulative_sc: 4.371,
                }],
                net_sc: 4.598,
            }],
        }
    }

    #[test]
    fn csv_row_layout() {
        let text = emit_report(&vin_report(), OutputFormat::Csv, 3);
        assert_eq!(text, format!("{CSV_HEADER}\nt1,Vin,204,204,21,4284,980,4.371,4.371,4.598\n"));
    }

    #[test]
    fn json_lines_layout() {
        let text = emit_report(&vin_report(), OutputFormat::JsonLines, 3);
        let v: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
        assert_eq!(v["interval"], "t1");
        assert_eq!(v["pbenevolence"], 980);
        assert_eq!(v["net_sc"].as_f64(), Some(4.598));
    }

    #[test]
    fn empty_report_is_header_only() {
        assert_eq!(emit_report(&SCReport::default(), OutputFormat::Csv, 3), format!("{CSV_HEADER}\n"));
        assert_eq!(emit_report(&SCReport::default(), OutputFormat::JsonLines, 3), "");
    }

    #[test]
    fn number_rendering() {
        assert_eq!(format_number(4.371, 1), "4.4");
        assert_eq!(format_number(204.0, 3), "204");
        assert_eq!(format_number(0.0057, 3), "0.006");
        assert_eq!(format_number(0.125, 2), "0.12");
        assert_eq!(format_number(0.375, 2), "0.38");
        assert_eq!(format_number(-0.0001, 3), "0");
        assert_eq!(format_number(2.5, 0), "2");
    }

    #[test]
    fn interval_flag_parsing() {
        assert_eq!(parse_intervals("0:10, 10:20").unwrap(), [Interval::new(0, 10), Interval::new(10, 20)]);
        assert!(parse_intervals("0-10").is_err());
        assert!(parse_intervals("a:b").is_err());
        assert_eq!("json-lines".parse::<OutputFormat>().unwrap(), OutputFormat::JsonLines);
        assert!("xml".parse::<OutputFormat>().is_err());
    }

    fn rec(t: i64, who: &str, package: &str, class: &str, lines: u64) -> ContributionRecord {
        ContributionRecord {
            timestamp: t,
            contributor: who.into(),
            package: package.into(),
            class_name: class.into(),
            lines_added: lines,
            lines_deleted: 0,
            commit_id: format!("{who}-{t}"),
        }
    }

    #[test]
    fn empty_input_gives_empty_report() {
        let out = compute(&[], &RunSettings::new(vec![Interval::new(0, 10)])).unwrap();
        assert!(out.report.is_empty());
    }

    #[test]
    fn multiple_tasks_need_selection() {
        let records = [rec(1, "a", "p1", "A", 1), rec(2, "b", "p2", "B", 1)];
        let settings = RunSettings::new(vec![Interval::new(0, 10)]);
        assert!(matches!(compute(&records, &settings), Err(PipelineError::Config(_))));
        let mut settings = settings;
        settings.task = Some("p1".into());
        // only one agent left in p1
        let err = compute(&records, &settings).unwrap_err();
        assert!(err.to_string().starts_with("capital-engine: no peers"));
    }

    #[test]
    fn pins_must_reference_known_rows() {
        let records = [rec(1, "a", "p", "A", 3), rec(2, "b", "p", "A", 5)];
        let mut settings = RunSettings::new(vec![Interval::new(0, 10)]);
        settings.relation_pins =
            vec![RelationPin { interval: "t2".into(), agent: "a".into(), relation: 1.0 }];
        assert!(matches!(compute(&records, &settings), Err(PipelineError::Config(_))));
        settings.relation_pins[0].interval = "t1".into();
        let out = compute(&records, &settings).unwrap();
        assert_eq!(out.report.row("t1", "a").unwrap().relation, 1.0);
        assert_eq!(out.report.row("t1", "b").unwrap().relation, 5.0);
        assert_eq!(out.trace[0].pinned, [AgentId::from("a")]);
    }

    #[test]
    fn pin_file_parsing() {
        let pins = parse_relation_pins("{\"interval\":\"t3\",\"agent\":\"Vin\",\"relation\":444}\n\n").unwrap();
        assert_eq!(pins, [RelationPin { interval: "t3".into(), agent: "Vin".into(), relation: 444.0 }]);
        assert!(parse_relation_pins("{\"interval\":\"t3\"}").is_err());
    }

    #[test]
    fn overlapping_intervals_fail_as_model_error() {
        let err = compute(&[], &RunSettings::new(vec![Interval::new(0, 10), Interval::new(5, 15)])).unwrap_err();
        assert!(matches!(err, PipelineError::Model(ModelError::OverlappingIntervals(..))));
    }

    #[test]
    fn links_column_counts_each_class_once() {
        let records = [rec(1, "a", "p", "K", 3), rec(2, "b", "p", "K", 5), rec(3, "c", "p", "K", 11), rec(4, "a", "p", "L", 2), rec(5, "b", "p", "L", 2)];
        let out = compute(&records, &RunSettings::new(vec![Interval::new(0, 10)])).unwrap();
        let a = out.report.row("t1", "a").unwrap();
        assert_eq!(a.links, 5.0);
        // a->b observed {3, 2}, a->c observed {3}: pair relations 3 and 3
        assert_eq!(a.relation, 3.0);
    }
}
