//! Domain types shared by the link and capital engines.
//!
//! Everything here is an immutable value once constructed; constructors
//! validate invariants and nothing else.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

macro_rules! opaque_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

opaque_id!(
    /// Contributor identity. Never parsed for meaning.
    AgentId
);
opaque_id!(GoalId);
opaque_id!(
    /// A task, e.g. a software package.
    TaskId
);
opaque_id!(
    /// A subtask, e.g. a class inside a package.
    SubtaskId
);

/// Seconds since the Unix epoch.
pub type Timestamp = i64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("availability out of [0,1] for task {task}: {value}")]
    Availability { task: TaskId, value: f64 },
    #[error("capability must be finite and non-negative for task {task}: {value}")]
    Capability { task: TaskId, value: f64 },
    #[error("willingness must be finite and non-negative for task {task}: {value}")]
    Willingness { task: TaskId, value: f64 },
    #[error("empty task list")]
    EmptyTasks,
    #[error("empty interval list")]
    EmptyIntervals,
    #[error("interval [{start}, {end}) is empty or reversed")]
    InvalidInterval { start: Timestamp, end: Timestamp },
    #[error("overlapping intervals: [{0}, {1}) and [{2}, {3})")]
    OverlappingIntervals(Timestamp, Timestamp, Timestamp, Timestamp),
    #[error("duplicate task id {0}")]
    DuplicateTask(TaskId),
    #[error("duplicate subtask id {0}")]
    DuplicateSubtask(SubtaskId),
    #[error("self-link on agent {0}")]
    SelfLink(AgentId),
    #[error("link value must be finite and non-negative: {0}")]
    LinkValue(f64),
}

/// Per-task inputs to the capacity measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskAbility {
    pub capability: f64,
    pub willingness: f64,
    pub availability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub agent_id: AgentId,
    pub abilities: BTreeMap<TaskId, TaskAbility>,
}

impl AgentProfile {
    pub fn ability(&self, task: &TaskId) -> Option<&TaskAbility> {
        self.abilities.get(task)
    }
}

/// Checks every per-task ability and hands the profile back untouched.
pub fn validate_profile(profile: AgentProfile) -> Result<AgentProfile, ModelError> {
    for (task, a) in &profile.abilities {
        if !a.capability.is_finite() || a.capability < 0.0 {
            return Err(ModelError::Capability { task: task.clone(), value: a.capability });
        }
        if !a.willingness.is_finite() || a.willingness < 0.0 {
            return Err(ModelError::Willingness { task: task.clone(), value: a.willingness });
        }
        if !(0.0..=1.0).contains(&a.availability) {
            return Err(ModelError::Availability { task: task.clone(), value: a.availability });
        }
    }
    Ok(profile)
}

/// Half-open time window `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub start: Timestamp,
    pub end: Timestamp,
}

impl Interval {
    pub fn new(start: Timestamp, end: Timestamp) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, t: Timestamp) -> bool {
        self.start <= t && t < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub id: TaskId,
    pub subtasks: Vec<SubtaskId>,
}

impl Task {
    pub fn new(id: impl Into<TaskId>, subtasks: impl IntoIterator<Item = SubtaskId>) -> Self {
        Self { id: id.into(), subtasks: subtasks.into_iter().collect() }
    }
}

/// Goal, its tasks and their subtasks, plus the analysis intervals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskHierarchy {
    goal_id: GoalId,
    tasks: Vec<Task>,
    intervals: Vec<Interval>,
}

/// Validates and assembles a [`TaskHierarchy`].
///
/// Intervals must be non-empty, strictly ordered and pairwise disjoint. Gaps
/// between intervals are allowed. Subtask ids are unique across the whole
/// hierarchy so that each subtask has exactly one owning task.
pub fn build_hierarchy(
    goal_id: impl Into<GoalId>,
    tasks: Vec<Task>,
    intervals: Vec<Interval>,
) -> Result<TaskHierarchy, ModelError> {
    if tasks.is_empty() {
        return Err(ModelError::EmptyTasks);
    }
    if intervals.is_empty() {
        return Err(ModelError::EmptyIntervals);
    }
    for iv in &intervals {
        if iv.start >= iv.end {
            return Err(ModelError::InvalidInterval { start: iv.start, end: iv.end });
        }
    }
    for pair in intervals.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b.start < a.end {
            return Err(ModelError::OverlappingIntervals(a.start, a.end, b.start, b.end));
        }
    }
    let mut task_ids = BTreeSet::new();
    let mut subtask_ids = BTreeSet::new();
    for task in &tasks {
        if !task_ids.insert(&task.id) {
            return Err(ModelError::DuplicateTask(task.id.clone()));
        }
        for s in &task.subtasks {
            if !subtask_ids.insert(s) {
                return Err(ModelError::DuplicateSubtask(s.clone()));
            }
        }
    }
    Ok(TaskHierarchy { goal_id: goal_id.into(), tasks, intervals })
}

impl TaskHierarchy {
    pub fn goal_id(&self) -> &GoalId {
        &self.goal_id
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    /// Index of the interval holding `t`, if any.
    pub fn interval_of(&self, t: Timestamp) -> Option<usize> {
        let idx = self.intervals.partition_point(|iv| iv.end <= t);
        self.intervals.get(idx).filter(|iv| iv.contains(t)).map(|_| idx)
    }

    pub fn task_of(&self, subtask: &SubtaskId) -> Option<&TaskId> {
        self.tasks.iter().find(|t| t.subtasks.contains(subtask)).map(|t| &t.id)
    }

    /// Rebuilds through [`build_hierarchy`]; validation is idempotent.
    pub fn revalidate(&self) -> Result<TaskHierarchy, ModelError> {
        build_hierarchy(self.goal_id.clone(), self.tasks.clone(), self.intervals.clone())
    }
}

/// One contributor's change to one subtask.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionEvent {
    pub timestamp: Timestamp,
    pub agent_id: AgentId,
    pub task_id: TaskId,
    pub subtask_id: SubtaskId,
    pub lines_added: u64,
    pub lines_deleted: u64,
    pub commit_id: String,
}

impl InteractionEvent {
    /// Lines added plus lines deleted.
    pub fn interaction_value(&self) -> f64 {
        (self.lines_added + self.lines_deleted) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    Explicit,
    Implicit,
}

/// Directed link between two agents on one subtask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkState {
    source: AgentId,
    target: AgentId,
    subtask_id: SubtaskId,
    value: f64,
    kind: LinkKind,
}

impl LinkState {
    pub fn new(
        source: impl Into<AgentId>,
        target: impl Into<AgentId>,
        subtask_id: impl Into<SubtaskId>,
        value: f64,
        kind: LinkKind,
    ) -> Result<Self, ModelError> {
        let (source, target) = (source.into(), target.into());
        if source == target {
            return Err(ModelError::SelfLink(source));
        }
        if !value.is_finite() || value < 0.0 {
            return Err(ModelError::LinkValue(value));
        }
        Ok(Self { source, target, subtask_id: subtask_id.into(), value, kind })
    }

    pub fn explicit(
        source: impl Into<AgentId>,
        target: impl Into<AgentId>,
        subtask_id: impl Into<SubtaskId>,
        value: f64,
    ) -> Result<Self, ModelError> {
        Self::new(source, target, subtask_id, value, LinkKind::Explicit)
    }

    pub fn source(&self) -> &AgentId {
        &self.source
    }

    pub fn target(&self) -> &AgentId {
        &self.target
    }

    pub fn subtask_id(&self) -> &SubtaskId {
        &self.subtask_id
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn kind(&self) -> LinkKind {
        self.kind
    }

    pub fn with_value(&self, value: f64) -> Result<Self, ModelError> {
        Self::new(self.source.clone(), self.target.clone(), self.subtask_id.clone(), value, self.kind)
    }

    /// Implicit to explicit only; explicit links stay explicit.
    pub(crate) fn promoted(&self) -> Self {
        Self { kind: LinkKind::Explicit, ..self.clone() }
    }
}

/// Directed relation values for one task. Absent pairs read as 0.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RelationMatrix {
    task_id: Option<TaskId>,
    entries: BTreeMap<(AgentId, AgentId), f64>,
}

impl RelationMatrix {
    pub fn new(task_id: impl Into<TaskId>) -> Self {
        Self { task_id: Some(task_id.into()), entries: BTreeMap::new() }
    }

    pub fn task_id(&self) -> Option<&TaskId> {
        self.task_id.as_ref()
    }

    pub fn set(&mut self, source: &AgentId, target: &AgentId, value: f64) -> Result<(), ModelError> {
        if source == target {
            return Err(ModelError::SelfLink(source.clone()));
        }
        self.entries.insert((source.clone(), target.clone()), value);
        Ok(())
    }

    pub fn get(&self, source: &AgentId, target: &AgentId) -> f64 {
        self.entries.get(&(source.clone(), target.clone())).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&AgentId, &AgentId, f64)> {
        self.entries.iter().map(|((s, t), v)| (s, t, *v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One agent's measurements for one interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub agent: AgentId,
    pub links: f64,
    pub relation: f64,
    pub capacity: f64,
    pub benevolence: f64,
    pub potential_benevolence: f64,
    pub instant_sc: f64,
    pub accumulative_sc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalReport {
    pub label: String,
    pub interval: Interval,
    pub rows: Vec<ReportRow>,
    pub net_sc: f64,
}

/// Social capital report: one block per interval, one row per agent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SCReport {
    pub intervals: Vec<IntervalReport>,
}

impl SCReport {
    pub fn is_empty(&self) -> bool {
        self.intervals.iter().all(|iv| iv.rows.is_empty())
    }

    pub fn row(&self, label: &str, agent: &str) -> Option<&ReportRow> {
        self.intervals
            .iter()
            .find(|iv| iv.label == label)?
            .rows
            .iter()
            .find(|r| r.agent.as_str() == agent)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(availability: f64) -> AgentProfile {
        let mut abilities = BTreeMap::new();
        abilities.insert(
            TaskId::from("pkg"),
            TaskAbility { capability: 3.0, willingness: 2.0, availability },
        );
        AgentProfile { agent_id: "a".into(), abilities }
    }

    #[test]
    fn availability_bounds() {
        assert!(validate_profile(profile(0.0)).is_ok());
        assert!(validate_profile(profile(1.0)).is_ok());
        let err = validate_profile(profile(1.5)).unwrap_err();
        assert!(err.to_string().contains("availability out of [0,1]"));
        assert!(validate_profile(profile(f64::NAN)).is_err());
    }

    #[test]
    fn negative_scores_name_the_field() {
        let mut p = profile(0.5);
        p.abilities.get_mut(&TaskId::from("pkg")).unwrap().willingness = -1.0;
        assert!(validate_profile(p).unwrap_err().to_string().contains("willingness"));
        let mut p = profile(0.5);
        p.abilities.get_mut(&TaskId::from("pkg")).unwrap().capability = -0.1;
        assert!(validate_profile(p).unwrap_err().to_string().contains("capability"));
    }

    #[test]
    fn minimal_hierarchy() {
        let h = build_hierarchy(
            "goal",
            vec![Task::new("t", vec![SubtaskId::from("s")])],
            vec![Interval::new(0, 10)],
        )
        .unwrap();
        assert_eq!(h.task_of(&"s".into()), Some(&TaskId::from("t")));
        assert_eq!(h.revalidate().unwrap(), h);
    }

    #[test]
    fn overlapping_intervals_rejected() {
        let err = build_hierarchy(
            "goal",
            vec![Task::new("t", vec![SubtaskId::from("s")])],
            vec![Interval::new(0, 10), Interval::new(5, 15)],
        )
        .unwrap_err();
        assert!(err.to_string().starts_with("overlapping intervals"));
    }

    #[test]
    fn structural_errors() {
        assert_eq!(
            build_hierarchy("g", vec![], vec![Interval::new(0, 1)]),
            Err(ModelError::EmptyTasks)
        );
        assert_eq!(
            build_hierarchy("g", vec![Task::new("t", vec![])], vec![]),
            Err(ModelError::EmptyIntervals)
        );
        let dup = build_hierarchy(
            "g",
            vec![
                Task::new("t1", vec![SubtaskId::from("s")]),
                Task::new("t2", vec![SubtaskId::from("s")]),
            ],
            vec![Interval::new(0, 1)],
        );
        assert_eq!(dup, Err(ModelError::DuplicateSubtask("s".into())));
        assert!(build_hierarchy("g", vec![Task::new("t", vec![])], vec![Interval::new(3, 3)]).is_err());
    }

    #[test]
    fn release_interval_shape() {
        let classes = (0..10).map(|i| SubtaskId::new(format!("Class{i}.java")));
        let h = build_hierarchy(
            "hadoop",
            vec![Task::new("org.apache.hadoop.yarn.client.api", classes)],
            vec![
                Interval::new(1_356_998_400, 1_420_070_400),
                Interval::new(1_420_070_400, 1_483_228_800),
                Interval::new(1_483_228_800, 1_546_300_800),
            ],
        )
        .unwrap();
        assert_eq!(h.intervals().len(), 3);
        assert_eq!(h.tasks()[0].subtasks.len(), 10);
        assert_eq!(h.interval_of(1_420_070_400), Some(1));
        assert_eq!(h.interval_of(1_420_070_399), Some(0));
        assert_eq!(h.interval_of(1_546_300_800), None);
        assert_eq!(h.interval_of(0), None);
    }

    #[test]
    fn gaps_are_not_covered() {
        let h = build_hierarchy(
            "g",
            vec![Task::new("t", vec![])],
            vec![Interval::new(0, 10), Interval::new(20, 30)],
        )
        .unwrap();
        assert_eq!(h.interval_of(15), None);
        assert_eq!(h.interval_of(20), Some(1));
    }

    #[test]
    fn link_invariants() {
        assert!(LinkState::explicit("a", "a", "s", 1.0).is_err());
        assert!(LinkState::explicit("a", "b", "s", -1.0).is_err());
        assert!(LinkState::explicit("a", "b", "s", f64::INFINITY).is_err());
        let l = LinkState::new("a", "b", "s", 2.0, LinkKind::Implicit).unwrap();
        assert_eq!(l.promoted().kind(), LinkKind::Explicit);
    }

    #[test]
    fn relation_absent_reads_zero() {
        let mut m = RelationMatrix::new("pkg");
        let (a, b) = (AgentId::from("a"), AgentId::from("b"));
        assert_eq!(m.get(&a, &b), 0.0);
        m.set(&a, &b, 4.0).unwrap();
        assert_eq!(m.get(&a, &b), 4.0);
        assert_eq!(m.get(&b, &a), 0.0);
        assert!(m.set(&a, &a, 1.0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn interval_lookup_matches_linear_scan(
                bounds in prop::collection::btree_set(-1000i64..1000, 2..12),
                t in -1100i64..1100,
            ) {
                let b: Vec<i64> = bounds.into_iter().collect();
                // every other window, so some gaps exist
                let intervals: Vec<Interval> =
                    b.windows(2).step_by(2).map(|w| Interval::new(w[0], w[1])).collect();
                let h = build_hierarchy("g", vec![Task::new("t", vec![])], intervals.clone()).unwrap();
                let hits: Vec<usize> = intervals.iter().enumerate()
                    .filter(|(_, iv)| iv.contains(t)).map(|(i, _)| i).collect();
                prop_assert!(hits.len() <= 1);
                prop_assert_eq!(h.interval_of(t), hits.first().copied());
                prop_assert_eq!(h.revalidate().unwrap(), h);
            }
        }
    }
}
