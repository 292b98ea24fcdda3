//! Explicit link accumulation, closure into implicit links, relation update
//! and threshold promotion.
//!
//! Explicit links come from observed co-work on a subtask. Implicit links are
//! inferred for ordered pairs that have no explicit link but are joined by an
//! explicit path on the same subtask; their value is the path volume divided
//! by the squared magnitude of the summed relations along the path.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::model::{
    AgentId, InteractionEvent, Interval, LinkKind, LinkState, ModelError, RelationMatrix,
    SubtaskId, TaskId, Timestamp,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinkError {
    #[error("event {commit} at {timestamp} lies outside [{start}, {end})")]
    EventOutsideInterval { commit: String, timestamp: Timestamp, start: Timestamp, end: Timestamp },
    #[error("subtask mismatch: link is on {expected}, event is on {found}")]
    SubtaskMismatch { expected: SubtaskId, found: SubtaskId },
    #[error("event by {found} cannot accumulate onto a link sourced at {expected}")]
    AuthorMismatch { expected: AgentId, found: AgentId },
    #[error("expected an explicit link, got an implicit one")]
    NotExplicit,
    #[error("degenerate relation sum")]
    DegenerateRelationSum,
    #[error("links do not form a triad: {0}")]
    NotATriad(&'static str),
    #[error("empty path")]
    EmptyPath,
    #[error("disconnected path at hop {0}")]
    DisconnectedPath(usize),
    #[error("path repeats link {0} -> {1}")]
    RepeatedLink(AgentId, AgentId),
    #[error("{links} links but {relations} relations")]
    LengthMismatch { links: usize, relations: usize },
    #[error("unreachable: no explicit path from {from} to {to}")]
    Unreachable { from: AgentId, to: AgentId },
    #[error("no link observations")]
    NoObservations,
    #[error("threshold must be finite and non-negative: {0}")]
    InvalidThreshold(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Adds the interaction values of `events` onto `link`.
///
/// Every event must fall inside `interval`, sit on the link's subtask and be
/// authored by the link's source.
pub fn accumulate_explicit(
    link: &LinkState,
    events: &[InteractionEvent],
    interval: Interval,
) -> Result<LinkState, LinkError> {
    if link.kind() != LinkKind::Explicit {
        return Err(LinkError::NotExplicit);
    }
    let mut total = link.value();
    for ev in events {
        if !interval.contains(ev.timestamp) {
            return Err(LinkError::EventOutsideInterval {
                commit: ev.commit_id.clone(),
                timestamp: ev.timestamp,
                start: interval.start,
                end: interval.end,
            });
        }
        if &ev.subtask_id != link.subtask_id() {
            return Err(LinkError::SubtaskMismatch {
                expected: link.subtask_id().clone(),
                found: ev.subtask_id.clone(),
            });
        }
        if &ev.agent_id != link.source() {
            return Err(LinkError::AuthorMismatch {
                expected: link.source().clone(),
                found: ev.agent_id.clone(),
            });
        }
        total += ev.interaction_value();
    }
    Ok(link.with_value(total)?)
}

/// Implicit link closing the triad `a -> b -> c`.
pub fn triadic_implicit(
    l_ab: &LinkState,
    l_bc: &LinkState,
    r_ab: f64,
    r_bc: f64,
) -> Result<LinkState, LinkError> {
    if l_ab.kind() != LinkKind::Explicit || l_bc.kind() != LinkKind::Explicit {
        return Err(LinkError::NotExplicit);
    }
    if l_ab.subtask_id() != l_bc.subtask_id() {
        return Err(LinkError::NotATriad("links are on different subtasks"));
    }
    if l_ab.target() != l_bc.source() {
        return Err(LinkError::NotATriad("links do not share a middle agent"));
    }
    if l_ab.source() == l_bc.target() {
        return Err(LinkError::NotATriad("endpoints coincide"));
    }
    let denom = (r_ab + r_bc).abs();
    if denom == 0.0 {
        return Err(LinkError::DegenerateRelationSum);
    }
    let value = (l_ab.value() + l_bc.value()) / (denom * denom);
    Ok(LinkState::new(
        l_ab.source().clone(),
        l_bc.target().clone(),
        l_ab.subtask_id().clone(),
        value,
        LinkKind::Implicit,
    )?)
}

/// Implicit link across an explicit path of any length.
///
/// `path_relations[k]` is the relation along `path_links[k]`.
pub fn path_implicit(path_links: &[LinkState], path_relations: &[f64]) -> Result<LinkState, LinkError> {
    let first = path_links.first().ok_or(LinkError::EmptyPath)?;
    if path_links.len() != path_relations.len() {
        return Err(LinkError::LengthMismatch {
            links: path_links.len(),
            relations: path_relations.len(),
        });
    }
    let mut seen = BTreeSet::new();
    for (hop, link) in path_links.iter().enumerate() {
        if link.kind() != LinkKind::Explicit {
            return Err(LinkError::NotExplicit);
        }
        if link.subtask_id() != first.subtask_id() {
            return Err(LinkError::DisconnectedPath(hop));
        }
        if hop > 0 && path_links[hop - 1].target() != link.source() {
            return Err(LinkError::DisconnectedPath(hop));
        }
        if !seen.insert((link.source(), link.target())) {
            return Err(LinkError::RepeatedLink(link.source().clone(), link.target().clone()));
        }
    }
    let denom = path_relations.iter().sum::<f64>().abs();
    if denom == 0.0 {
        return Err(LinkError::DegenerateRelationSum);
    }
    let volume: f64 = path_links.iter().map(LinkState::value).sum();
    let last = path_links.last().expect("non-empty");
    Ok(LinkState::new(
        first.source().clone(),
        last.target().clone(),
        first.subtask_id().clone(),
        volume / (denom * denom),
        LinkKind::Implicit,
    )?)
}

/// Mode of the per-subtask combined values `explicit[s] + implicit[s]`.
///
/// Among equally frequent values the largest wins, which also covers the
/// all-distinct case. An empty list on one side is read as all zeros.
pub fn update_relation(explicit: &[f64], implicit: &[f64]) -> Result<f64, LinkError> {
    let combined: Vec<f64> = match (explicit.is_empty(), implicit.is_empty()) {
        (true, true) => return Err(LinkError::NoObservations),
        (false, true) => explicit.to_vec(),
        (true, false) => implicit.to_vec(),
        (false, false) => {
            if explicit.len() != implicit.len() {
                return Err(LinkError::LengthMismatch {
                    links: explicit.len(),
                    relations: implicit.len(),
                });
            }
            explicit.iter().zip(implicit).map(|(e, i)| e + i).collect()
        }
    };
    // +0.0 folds -0.0 into 0.0 so equal magnitudes share a run
    let mut sorted: Vec<f64> = combined.into_iter().map(|v| v + 0.0).collect();
    sorted.sort_by(f64::total_cmp);
    let mut best = (0usize, f64::NEG_INFINITY);
    let mut i = 0;
    while i < sorted.len() {
        let run = sorted[i..].iter().take_while(|v| v.total_cmp(&sorted[i]).is_eq()).count();
        // ascending order, so `>=` keeps the largest value among equal counts
        if run >= best.0 {
            best = (run, sorted[i]);
        }
        i += run;
    }
    Ok(best.1)
}

/// Turns an implicit link explicit once its value reaches `tau`.
pub fn promote(link: &LinkState, tau: f64) -> LinkState {
    if link.kind() == LinkKind::Implicit && link.value() >= tau {
        link.promoted()
    } else {
        link.clone()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SubtaskLinks {
    explicit: BTreeMap<(AgentId, AgentId), LinkState>,
    implicit: BTreeMap<(AgentId, AgentId), LinkState>,
}

impl SubtaskLinks {
    pub fn explicit(&self) -> impl Iterator<Item = &LinkState> {
        self.explicit.values()
    }

    pub fn implicit(&self) -> impl Iterator<Item = &LinkState> {
        self.implicit.values()
    }

    fn agents(&self) -> BTreeSet<&AgentId> {
        self.explicit.keys().flat_map(|(s, t)| [s, t]).collect()
    }

    fn out_explicit<'a>(&'a self, source: &'a AgentId) -> impl Iterator<Item = &'a LinkState> + 'a {
        self.explicit
            .range((source.clone(), AgentId::new(""))..)
            .take_while(move |((s, _), _)| s == source)
            .map(|(_, l)| l)
    }
}

/// Counters from one closure pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ClosureDiagnostics {
    pub implicit_formed: usize,
    pub degenerate_skipped: usize,
    pub promoted: usize,
}

/// Per-subtask link sets for the working subgroup, plus the promotion
/// threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkGraph {
    tau: f64,
    subtasks: BTreeMap<SubtaskId, SubtaskLinks>,
}

impl LinkGraph {
    pub fn new(tau: f64) -> Result<Self, LinkError> {
        if !tau.is_finite() || tau < 0.0 {
            return Err(LinkError::InvalidThreshold(tau));
        }
        Ok(Self { tau, subtasks: BTreeMap::new() })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Inserts or replaces the link of the same kind for its
    /// (source, target, subtask) triple.
    pub fn insert(&mut self, link: LinkState) {
        let entry = self.subtasks.entry(link.subtask_id().clone()).or_default();
        let key = (link.source().clone(), link.target().clone());
        match link.kind() {
            LinkKind::Explicit => entry.explicit.insert(key, link),
            LinkKind::Implicit => entry.implicit.insert(key, link),
        };
    }

    pub fn subtasks(&self) -> impl Iterator<Item = (&SubtaskId, &SubtaskLinks)> {
        self.subtasks.iter()
    }

    pub fn explicit_links(&self) -> impl Iterator<Item = &LinkState> {
        self.subtasks.values().flat_map(|s| s.explicit.values())
    }

    pub fn implicit_links(&self) -> impl Iterator<Item = &LinkState> {
        self.subtasks.values().flat_map(|s| s.implicit.values())
    }

    pub fn explicit(&self, subtask: &SubtaskId, source: &AgentId, target: &AgentId) -> Option<&LinkState> {
        self.subtasks.get(subtask)?.explicit.get(&(source.clone(), target.clone()))
    }

    pub fn implicit(&self, subtask: &SubtaskId, source: &AgentId, target: &AgentId) -> Option<&LinkState> {
        self.subtasks.get(subtask)?.implicit.get(&(source.clone(), target.clone()))
    }

    /// Undirected-by-existence adjacency of explicit links over all subtasks.
    pub fn explicit_adjacency(&self) -> BTreeMap<AgentId, BTreeSet<AgentId>> {
        let mut adj: BTreeMap<AgentId, BTreeSet<AgentId>> = BTreeMap::new();
        for l in self.explicit_links() {
            adj.entry(l.source().clone()).or_default().insert(l.target().clone());
            adj.entry(l.target().clone()).or_default();
        }
        adj
    }

    /// Relation per ordered pair: the mode over the subtasks on which the
    /// pair has any link. With `include_implicit = false` only explicit links
    /// are observed.
    pub fn relations(&self, task: &TaskId, include_implicit: bool) -> Result<RelationMatrix, LinkError> {
        let mut per_pair: BTreeMap<(AgentId, AgentId), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        for links in self.subtasks.values() {
            let mut pairs: BTreeSet<&(AgentId, AgentId)> = links.explicit.keys().collect();
            if include_implicit {
                pairs.extend(links.implicit.keys());
            }
            for pair in pairs {
                let e = links.explicit.get(pair).map_or(0.0, LinkState::value);
                let i = if include_implicit {
                    links.implicit.get(pair).map_or(0.0, LinkState::value)
                } else {
                    0.0
                };
                let slot = per_pair.entry(pair.clone()).or_default();
                slot.0.push(e);
                slot.1.push(i);
            }
        }
        let mut matrix = RelationMatrix::new(task.clone());
        for ((s, t), (e, i)) in per_pair {
            matrix.set(&s, &t, update_relation(&e, &i)?)?;
        }
        Ok(matrix)
    }

    /// Recomputes every implicit link from the current explicit links, then
    /// promotes those at or above the threshold.
    ///
    /// Implicit links are only inferred for ordered pairs with no explicit
    /// link on the subtask. Closures whose relation sum is zero are skipped
    /// and counted.
    pub fn close(&mut self, relations: &RelationMatrix) -> Result<ClosureDiagnostics, LinkError> {
        let mut diag = ClosureDiagnostics::default();
        let mut inferred = Vec::new();
        for (subtask, links) in &self.subtasks {
            let agents = links.agents();
            for source in &agents {
                for target in &agents {
                    if source == target || links.explicit.contains_key(&((*source).clone(), (*target).clone())) {
                        continue;
                    }
                    let path = match self.select_path(subtask, source, target) {
                        Ok(p) => p,
                        Err(LinkError::Unreachable { .. }) => continue,
                        Err(e) => return Err(e),
                    };
                    let rels: Vec<f64> =
                        path.iter().map(|l| relations.get(l.source(), l.target())).collect();
                    match path_implicit(&path, &rels) {
                        Ok(link) => inferred.push(link),
                        Err(LinkError::DegenerateRelationSum) => diag.degenerate_skipped += 1,
                        Err(e) => return Err(e),
                    }
                }
            }
        }
        for links in self.subtasks.values_mut() {
            links.implicit.clear();
        }
        for link in inferred {
            diag.implicit_formed += 1;
            let link = promote(&link, self.tau);
            if link.kind() == LinkKind::Explicit {
                diag.promoted += 1;
            }
            self.insert(link);
        }
        Ok(diag)
    }

    /// The simple explicit path from `source` to `target` on `subtask` with
    /// the largest total link value. Ties go to the shorter path, then to the
    /// lexicographically smaller agent sequence.
    ///
    /// Exhaustive search; fine for per-class contributor groups.
    pub fn select_path(
        &self,
        subtask: &SubtaskId,
        source: &AgentId,
        target: &AgentId,
    ) -> Result<Vec<LinkState>, LinkError> {
        let unreachable = || LinkError::Unreachable { from: source.clone(), to: target.clone() };
        if source == target {
            return Err(unreachable());
        }
        let links = self.subtasks.get(subtask).ok_or_else(unreachable)?;
        let mut search = PathSearch { links, target, best: None, stack: Vec::new(), visited: BTreeSet::new() };
        search.visited.insert(source.clone());
        search.descend(source, 0.0);
        search.best.map(|b| b.path).ok_or_else(unreachable)
    }
}

struct Candidate {
    volume: f64,
    nodes: Vec<AgentId>,
    path: Vec<LinkState>,
}

impl Candidate {
    fn beats(&self, other: &Candidate) -> bool {
        if self.volume != other.volume {
            return self.volume > other.volume;
        }
        if self.path.len() != other.path.len() {
            return self.path.len() < other.path.len();
        }
        self.nodes < other.nodes
    }
}

struct PathSearch<'a> {
    links: &'a SubtaskLinks,
    target: &'a AgentId,
    best: Option<Candidate>,
    stack: Vec<&'a LinkState>,
    visited: BTreeSet<AgentId>,
}

impl<'a> PathSearch<'a> {
    fn descend(&mut self, at: &'a AgentId, volume: f64) {
        for link in self.links.out_explicit(at) {
            let next = link.target();
            if self.visited.contains(next) {
                continue;
            }
            let volume = volume + link.value();
            self.stack.push(link);
            if next == self.target {
                let path: Vec<LinkState> = self.stack.iter().map(|l| (*l).clone()).collect();
                let mut nodes = vec![path[0].source().clone()];
                nodes.extend(path.iter().map(|l| l.target().clone()));
                let cand = Candidate { volume, nodes, path };
                if self.best.as_ref().is_none_or(|b| cand.beats(b)) {
                    self.best = Some(cand);
                }
            } else {
                self.visited.insert(next.clone());
                self.descend(next, volume);
                self.visited.remove(next);
            }
            self.stack.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(a: &str, b: &str, v: f64) -> LinkState {
        LinkState::explicit(a, b, "s", v).unwrap()
    }

    fn event(agent: &str, subtask: &str, t: Timestamp, added: u64, deleted: u64) -> InteractionEvent {
        InteractionEvent {
            timestamp: t,
            agent_id: agent.into(),
            task_id: "pkg".into(),
            subtask_id: subtask.into(),
            lines_added: added,
            lines_deleted: deleted,
            commit_id: format!("c{t}"),
        }
    }

    #[test]
    fn accumulate_sums_interaction_values() {
        let iv = Interval::new(0, 100);
        let l = ex("Vin", "Oz", 0.0);
        let events = [event("Vin", "s", 1, 80, 20), event("Vin", "s", 2, 100, 4)];
        assert_eq!(accumulate_explicit(&l, &events, iv).unwrap().value(), 204.0);
        assert_eq!(accumulate_explicit(&l, &[], iv).unwrap(), l);
        let l = ex("Vin", "Oz", 204.0);
        let next = [event("Vin", "s", 50, 150, 13)];
        assert_eq!(accumulate_explicit(&l, &next, iv).unwrap().value(), 367.0);
    }

    #[test]
    fn accumulate_rejects_bad_events() {
        let iv = Interval::new(0, 100);
        let l = ex("Vin", "Oz", 0.0);
        assert!(matches!(
            accumulate_explicit(&l, &[event("Vin", "s", 100, 1, 0)], iv),
            Err(LinkError::EventOutsideInterval { .. })
        ));
        assert!(matches!(
            accumulate_explicit(&l, &[event("Vin", "other", 5, 1, 0)], iv),
            Err(LinkError::SubtaskMismatch { .. })
        ));
        assert!(matches!(
            accumulate_explicit(&l, &[event("Oz", "s", 5, 1, 0)], iv),
            Err(LinkError::AuthorMismatch { .. })
        ));
        let imp = LinkState::new("Vin", "Oz", "s", 0.0, LinkKind::Implicit).unwrap();
        assert_eq!(accumulate_explicit(&imp, &[], iv), Err(LinkError::NotExplicit));
    }

    #[test]
    fn triadic_hand_values() {
        let t = triadic_implicit(&ex("a", "b", 4.0), &ex("b", "c", 4.0), 1.0, 1.0).unwrap();
        assert_eq!((t.source().as_str(), t.target().as_str()), ("a", "c"));
        assert_eq!(t.kind(), LinkKind::Implicit);
        assert_eq!(t.value(), 2.0);
        let z = triadic_implicit(&ex("a", "b", 0.0), &ex("b", "c", 0.0), 1.0, 1.0).unwrap();
        assert_eq!(z.value(), 0.0);
        let u = triadic_implicit(&ex("a", "b", 6.0), &ex("b", "c", 3.0), 2.0, 1.0).unwrap();
        assert_eq!(u.value(), 1.0);
    }

    #[test]
    fn triadic_errors() {
        let err = triadic_implicit(&ex("a", "b", 1.0), &ex("b", "c", 1.0), 1.0, -1.0).unwrap_err();
        assert_eq!(err.to_string(), "degenerate relation sum");
        assert!(matches!(
            triadic_implicit(&ex("a", "b", 1.0), &ex("x", "c", 1.0), 1.0, 1.0),
            Err(LinkError::NotATriad(_))
        ));
        assert!(matches!(
            triadic_implicit(&ex("a", "b", 1.0), &ex("b", "a", 1.0), 1.0, 1.0),
            Err(LinkError::NotATriad(_))
        ));
    }

    #[test]
    fn path_hand_values() {
        let single = path_implicit(&[ex("a", "b", 6.0)], &[2.0]).unwrap();
        assert_eq!(single.value(), 6.0 / 4.0);
        let two = path_implicit(&[ex("a", "b", 4.0), ex("b", "c", 4.0)], &[1.0, 1.0]).unwrap();
        let tri = triadic_implicit(&ex("a", "b", 4.0), &ex("b", "c", 4.0), 1.0, 1.0).unwrap();
        assert_eq!(two, tri);
        let three =
            path_implicit(&[ex("a", "b", 3.0), ex("b", "c", 3.0), ex("c", "d", 3.0)], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(three.value(), 1.0);
    }

    #[test]
    fn path_errors() {
        assert_eq!(path_implicit(&[], &[]), Err(LinkError::EmptyPath));
        assert_eq!(
            path_implicit(&[ex("a", "b", 1.0), ex("c", "d", 1.0)], &[1.0, 1.0]),
            Err(LinkError::DisconnectedPath(1))
        );
        assert_eq!(
            path_implicit(&[ex("a", "b", 1.0)], &[0.0]),
            Err(LinkError::DegenerateRelationSum)
        );
        assert!(matches!(
            path_implicit(&[ex("a", "b", 1.0), ex("b", "a", 1.0), ex("a", "b", 1.0)], &[1.0; 3]),
            Err(LinkError::RepeatedLink(..))
        ));
        assert!(matches!(
            path_implicit(&[ex("a", "b", 1.0)], &[1.0, 2.0]),
            Err(LinkError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn relation_mode_rules() {
        assert_eq!(update_relation(&[5.0, 5.0, 9.0], &[0.0; 3]).unwrap(), 5.0);
        assert_eq!(update_relation(&[204.0], &[]).unwrap(), 204.0);
        assert_eq!(update_relation(&[3.0, 7.0], &[]).unwrap(), 7.0);
        assert_eq!(update_relation(&[2.0, 2.0, 8.0, 8.0, 9.0], &[]).unwrap(), 8.0);
        assert_eq!(update_relation(&[1.0, 3.0], &[2.0, 0.0]).unwrap(), 3.0);
        assert_eq!(update_relation(&[], &[]).unwrap_err().to_string(), "no link observations");
    }

    #[test]
    fn relation_matches_frequency_count_on_all_distinct() {
        let vals = [3.0, 7.0];
        let mut counts: Vec<(f64, usize)> = Vec::new();
        for v in vals {
            match counts.iter_mut().find(|(x, _)| *x == v) {
                Some(c) => c.1 += 1,
                None => counts.push((v, 1)),
            }
        }
        assert!(counts.iter().all(|(_, c)| *c == 1));
        let fallback = counts.iter().map(|(v, _)| *v).fold(f64::MIN, f64::max);
        assert_eq!(update_relation(&vals, &[]).unwrap(), fallback);
    }

    #[test]
    fn promotion_threshold_is_inclusive() {
        let imp = |v| LinkState::new("a", "b", "s", v, LinkKind::Implicit).unwrap();
        assert_eq!(promote(&imp(2.0), 1.5).kind(), LinkKind::Explicit);
        assert_eq!(promote(&imp(1.0), 1.5).kind(), LinkKind::Implicit);
        assert_eq!(promote(&imp(1.5), 1.5).kind(), LinkKind::Explicit);
        assert_eq!(promote(&ex("a", "b", 0.0), 10.0).kind(), LinkKind::Explicit);
    }

    fn graph(links: &[(&str, &str, f64)]) -> LinkGraph {
        let mut g = LinkGraph::new(1.0).unwrap();
        for (a, b, v) in links {
            g.insert(ex(a, b, *v));
        }
        g
    }

    fn node_seq(path: &[LinkState]) -> Vec<&str> {
        let mut v = vec![path[0].source().as_str()];
        v.extend(path.iter().map(|l| l.target().as_str()));
        v
    }

    #[test]
    fn select_path_prefers_volume() {
        // a->b->d volume 10, a->c->d volume 7
        let g = graph(&[("a", "b", 5.0), ("b", "d", 5.0), ("a", "c", 3.0), ("c", "d", 4.0)]);
        let p = g.select_path(&"s".into(), &"a".into(), &"d".into()).unwrap();
        assert_eq!(node_seq(&p), ["a", "b", "d"]);
    }

    #[test]
    fn select_path_tie_breaks() {
        let g = graph(&[("a", "b", 2.0), ("b", "c", 2.0), ("c", "d", 2.0), ("a", "x", 3.0), ("x", "d", 3.0)]);
        let p = g.select_path(&"s".into(), &"a".into(), &"d".into()).unwrap();
        assert_eq!(node_seq(&p), ["a", "x", "d"]);
        let g = graph(&[("a", "c", 1.0), ("c", "d", 1.0), ("a", "b", 1.0), ("b", "d", 1.0)]);
        let p = g.select_path(&"s".into(), &"a".into(), &"d".into()).unwrap();
        assert_eq!(node_seq(&p), ["a", "b", "d"]);
    }

    #[test]
    fn select_path_single_and_unreachable() {
        let g = graph(&[("a", "b", 1.0), ("b", "c", 1.0)]);
        let p = g.select_path(&"s".into(), &"a".into(), &"c".into()).unwrap();
        assert_eq!(p.len(), 2);
        assert!(matches!(
            g.select_path(&"s".into(), &"c".into(), &"a".into()),
            Err(LinkError::Unreachable { .. })
        ));
        assert!(g.select_path(&"nope".into(), &"a".into(), &"c".into()).is_err());
    }

    #[test]
    fn closure_infers_and_promotes() {
        let mut g = graph(&[("a", "b", 4.0), ("b", "c", 4.0)]);
        let mut rel = RelationMatrix::new("pkg");
        rel.set(&"a".into(), &"b".into(), 1.0).unwrap();
        rel.set(&"b".into(), &"c".into(), 1.0).unwrap();
        let diag = g.close(&rel).unwrap();
        assert_eq!(diag, ClosureDiagnostics { implicit_formed: 1, degenerate_skipped: 0, promoted: 1 });
        let l = g.explicit(&"s".into(), &"a".into(), &"c".into()).unwrap();
        assert_eq!(l.value(), 2.0);

        let mut g = graph(&[("a", "b", 4.0), ("b", "c", 4.0)]);
        let mut g_high = LinkGraph::new(5.0).unwrap();
        for l in g.explicit_links() {
            g_high.insert(l.clone());
        }
        let diag = g_high.close(&rel).unwrap();
        assert_eq!(diag.promoted, 0);
        assert_eq!(g_high.implicit(&"s".into(), &"a".into(), &"c".into()).unwrap().value(), 2.0);

        // zero relations everywhere: the closure is skipped and counted
        let diag = g.close(&RelationMatrix::new("pkg")).unwrap();
        assert_eq!(diag.degenerate_skipped, 1);
        assert_eq!(g.implicit_links().count(), 0);
    }

    #[test]
    fn relations_take_mode_over_subtasks() {
        let mut g = LinkGraph::new(1.0).unwrap();
        for (s, v) in [("s1", 5.0), ("s2", 5.0), ("s3", 9.0)] {
            g.insert(LinkState::explicit("a", "b", s, v).unwrap());
        }
        g.insert(LinkState::new("a", "c", "s1", 0.5, LinkKind::Implicit).unwrap());
        let m = g.relations(&"pkg".into(), true).unwrap();
        assert_eq!(m.get(&"a".into(), &"b".into()), 5.0);
        assert_eq!(m.get(&"a".into(), &"c".into()), 0.5);
        let m = g.relations(&"pkg".into(), false).unwrap();
        assert_eq!(m.get(&"a".into(), &"c".into()), 0.0);
    }

    #[test]
    fn invalid_tau() {
        assert!(LinkGraph::new(-1.0).is_err());
        assert!(LinkGraph::new(f64::NAN).is_err());
    }
}
