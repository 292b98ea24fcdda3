//! Contribution logs: parsing, interval bucketing, subgroup filtering and
//! co-edit link derivation.
//!
//! Two input layouts are accepted. The primary one is newline-delimited JSON
//! objects:
//!
//! ```text
//! {"timestamp":1357862400,"contributor":"Vin","package":"org.example","class":"Foo.java","lines_added":80,"lines_deleted":20,"commit":"v01"}
//! ```
//!
//! The alternative is comma-separated text whose header row carries the same
//! field names in any order. The layout is picked from the first non-blank
//! line: `{` means JSON lines, anything else is a header row.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Read};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::model::{
    build_hierarchy, AgentId, InteractionEvent, Interval, LinkState, ModelError, SubtaskId, Task,
    TaskHierarchy, TaskId, Timestamp,
};

pub const FIELDS: [&str; 7] =
    ["timestamp", "contributor", "package", "class", "lines_added", "lines_deleted", "commit"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContributionRecord {
    pub timestamp: Timestamp,
    pub contributor: String,
    pub package: String,
    #[serde(rename = "class")]
    pub class_name: String,
    pub lines_added: u64,
    pub lines_deleted: u64,
    #[serde(rename = "commit")]
    pub commit_id: String,
}

impl ContributionRecord {
    pub fn interaction_value(&self) -> u64 {
        self.lines_added + self.lines_deleted
    }

    /// Subtask id qualified by its package so classes with the same name in
    /// different packages stay distinct.
    pub fn subtask_id(&self) -> SubtaskId {
        SubtaskId::new(format!("{}/{}", self.package, self.class_name))
    }

    pub fn to_event(&self) -> InteractionEvent {
        InteractionEvent {
            timestamp: self.timestamp,
            agent_id: AgentId::new(self.contributor.clone()),
            task_id: TaskId::new(self.package.clone()),
            subtask_id: self.subtask_id(),
            lines_added: self.lines_added,
            lines_deleted: self.lines_deleted,
            commit_id: self.commit_id.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseIssue {
    pub line: usize,
    pub field: Option<String>,
    pub message: String,
}

impl std::fmt::Display for ParseIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.field {
            Some(field) => write!(f, "line {}: field `{}`: {}", self.line, field, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{0}")]
    Malformed(ParseIssue),
    #[error("read failed: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ParseMode {
    /// First malformed line aborts the parse.
    #[default]
    Strict,
    /// Malformed lines are skipped and reported.
    Lenient,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedLog {
    pub records: Vec<ContributionRecord>,
    pub skipped: Vec<ParseIssue>,
}

impl ParsedLog {
    fn accept(&mut self, mode: ParseMode, outcome: Result<ContributionRecord, ParseIssue>) -> Result<(), IngestError> {
        match (outcome, mode) {
            (Ok(r), _) => self.records.push(r),
            (Err(issue), ParseMode::Strict) => return Err(IngestError::Malformed(issue)),
            (Err(issue), ParseMode::Lenient) => self.skipped.push(issue),
        }
        Ok(())
    }
}

/// Parses a contribution log, preserving input order.
pub fn parse_log(mut input: impl BufRead, mode: ParseMode) -> Result<ParsedLog, IngestError> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    match text.lines().find(|l| !l.trim().is_empty()) {
        None => Ok(ParsedLog::default()),
        Some(first) if first.trim_start().starts_with('{') => parse_json_lines(&text, mode),
        Some(_) => parse_csv(text.as_bytes(), mode),
    }
}

pub fn parse_json_lines(text: &str, mode: ParseMode) -> Result<ParsedLog, IngestError> {
    let mut log = ParsedLog::default();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let outcome = match serde_json::from_str::<Value>(line) {
            Ok(Value::Object(obj)) => record_from_object(&obj, line_no),
            Ok(_) => Err(issue(line_no, None, "expected a JSON object")),
            Err(e) => Err(issue(line_no, None, &format!("invalid JSON: {e}"))),
        };
        log.accept(mode, outcome)?;
    }
    Ok(log)
}

pub fn parse_csv(input: impl Read, mode: ParseMode) -> Result<ParsedLog, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| IngestError::Malformed(issue(1, None, &format!("unreadable header: {e}"))))?
        .clone();
    let mut columns = BTreeMap::new();
    for name in FIELDS {
        match headers.iter().position(|h| h == name) {
            Some(i) => {
                columns.insert(name, i);
            }
            None => return Err(IngestError::Malformed(issue(1, Some(name), "missing from header"))),
        }
    }
    let mut log = ParsedLog::default();
    for row in reader.records() {
        let outcome = match row {
            Ok(row) => {
                let line_no = row.position().map_or(0, |p| p.line() as usize);
                let obj: Map<String, Value> = columns
                    .iter()
                    .filter_map(|(name, i)| {
                        row.get(*i).map(|v| ((*name).to_owned(), csv_cell(name, v)))
                    })
                    .collect();
                record_from_object(&obj, line_no)
            }
            Err(e) => {
                let line_no = e.position().map_or(0, |p| p.line() as usize);
                Err(issue(line_no, None, &e.to_string()))
            }
        };
        log.accept(mode, outcome)?;
    }
    Ok(log)
}

fn csv_cell(name: &str, raw: &str) -> Value {
    match name {
        "timestamp" | "lines_added" | "lines_deleted" => {
            raw.parse::<i64>().map(Value::from).unwrap_or_else(|_| Value::String(raw.to_owned()))
        }
        _ => Value::String(raw.to_owned()),
    }
}

fn issue(line: usize, field: Option<&str>, message: &str) -> ParseIssue {
    ParseIssue { line, field: field.map(str::to_owned), message: message.to_owned() }
}

fn record_from_object(obj: &Map<String, Value>, line: usize) -> Result<ContributionRecord, ParseIssue> {
    let get = |name: &str| obj.get(name).ok_or_else(|| issue(line, Some(name), "missing"));
    let text = |name: &str| -> Result<String, ParseIssue> {
        match get(name)? {
            Value::String(s) if !s.is_empty() => Ok(s.clone()),
            _ => Err(issue(line, Some(name), "must be a non-empty string")),
        }
    };
    let count = |name: &str| -> Result<u64, ParseIssue> {
        get(name)?.as_u64().ok_or_else(|| issue(line, Some(name), "must be a non-negative integer"))
    };
    let timestamp = get("timestamp")?
        .as_i64()
        .ok_or_else(|| issue(line, Some("timestamp"), "must be integer epoch seconds"))?;
    Ok(ContributionRecord {
        timestamp,
        contributor: text("contributor")?,
        package: text("package")?,
        class_name: text("class")?,
        lines_added: count("lines_added")?,
        lines_deleted: count("lines_deleted")?,
        commit_id: text("commit")?,
    })
}

/// Hierarchy whose tasks are the packages seen in `events` and whose
/// subtasks are their classes, both in sorted order.
pub fn hierarchy_from_events(
    goal: &str,
    events: &[InteractionEvent],
    intervals: Vec<Interval>,
) -> Result<TaskHierarchy, ModelError> {
    let mut tasks: BTreeMap<&TaskId, BTreeSet<&SubtaskId>> = BTreeMap::new();
    for e in events {
        tasks.entry(&e.task_id).or_default().insert(&e.subtask_id);
    }
    let tasks = tasks
        .into_iter()
        .map(|(t, subs)| Task::new(t.clone(), subs.into_iter().cloned()))
        .collect();
    build_hierarchy(goal, tasks, intervals)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Buckets {
    pub intervals: Vec<Vec<InteractionEvent>>,
    pub out_of_range: usize,
}

impl Buckets {
    pub fn in_range(&self) -> usize {
        self.intervals.iter().map(Vec::len).sum()
    }
}

/// Splits events over the hierarchy's intervals; events outside every
/// interval are only counted.
pub fn bucket_events(events: &[InteractionEvent], hierarchy: &TaskHierarchy) -> Buckets {
    let mut buckets = Buckets {
        intervals: vec![Vec::new(); hierarchy.intervals().len()],
        out_of_range: 0,
    };
    for e in events {
        match hierarchy.interval_of(e.timestamp) {
            Some(i) => buckets.intervals[i].push(e.clone()),
            None => buckets.out_of_range += 1,
        }
    }
    buckets
}

/// Explicit co-edit links for one interval's events.
///
/// For every subtask and every ordered pair of distinct contributors who both
/// touched it, the link `i -> j` carries `i`'s own line total on that subtask.
pub fn derive_links(events: &[InteractionEvent]) -> Vec<LinkState> {
    let mut totals: BTreeMap<&SubtaskId, BTreeMap<&AgentId, f64>> = BTreeMap::new();
    for e in events {
        *totals.entry(&e.subtask_id).or_default().entry(&e.agent_id).or_default() += e.interaction_value();
    }
    let mut links = Vec::new();
    for (subtask, per_agent) in totals {
        for (source, value) in &per_agent {
            for target in per_agent.keys().filter(|t| *t != source) {
                links.push(
                    LinkState::explicit((*source).clone(), (*target).clone(), subtask.clone(), *value)
                        .expect("distinct agents, non-negative finite total"),
                );
            }
        }
    }
    links
}

/// Outgoing volume per (source, subtask), counting each subtask once no
/// matter how many co-editors the source has there.
pub fn outgoing_volume<'a>(links: impl IntoIterator<Item = &'a LinkState>) -> BTreeMap<(AgentId, SubtaskId), f64> {
    let mut out: BTreeMap<(AgentId, SubtaskId), f64> = BTreeMap::new();
    for l in links {
        let slot = out.entry((l.source().clone(), l.subtask_id().clone())).or_insert(0.0);
        *slot = slot.max(l.value());
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SubgroupFilter {
    pub records: Vec<ContributionRecord>,
    /// Requested ids with no record at all.
    pub unknown: Vec<AgentId>,
}

/// Keeps only records authored by `agent_ids`.
pub fn subgroup_filter(records: &[ContributionRecord], agent_ids: &[AgentId]) -> SubgroupFilter {
    let wanted: BTreeSet<&str> = agent_ids.iter().map(AgentId::as_str).collect();
    let present: BTreeSet<&str> = records.iter().map(|r| r.contributor.as_str()).collect();
    SubgroupFilter {
        records: records.iter().filter(|r| wanted.contains(r.contributor.as_str())).cloned().collect(),
        unknown: agent_ids.iter().filter(|a| !present.contains(a.as_str())).cloned().collect(),
    }
}
