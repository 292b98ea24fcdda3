//! Capacity, benevolence, potential benevolence, belief decay and the
//! per-agent social capital derived from them.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AgentId, AgentProfile, InteractionEvent, TaskId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CapitalError {
    #[error("no peers for agent {0}")]
    NoPeers(AgentId),
    #[error("agent {0} has no row in the group")]
    UnknownAgent(AgentId),
    #[error("empty group")]
    EmptyGroup,
    #[error("decay rate must be finite and non-negative: {0}")]
    InvalidLambda(f64),
    #[error("profile of {agent} has no entry for task {task}")]
    MissingAbility { agent: AgentId, task: TaskId },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BeliefMode {
    /// Factor 1 for every peer.
    #[default]
    Ratio,
    /// `exp(-lambda * hops)`.
    Exponential,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BeliefConfig {
    lambda: f64,
    mode: BeliefMode,
}

impl BeliefConfig {
    pub fn ratio() -> Self {
        Self::default()
    }

    pub fn exponential(lambda: f64) -> Result<Self, CapitalError> {
        Self::new(lambda, BeliefMode::Exponential)
    }

    pub fn new(lambda: f64, mode: BeliefMode) -> Result<Self, CapitalError> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(CapitalError::InvalidLambda(lambda));
        }
        Ok(Self { lambda, mode })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mode(&self) -> BeliefMode {
        self.mode
    }
}

/// `(capability + willingness) * availability`.
pub fn capacity(capability: f64, willingness: f64, availability: f64) -> f64 {
    (capability + willingness) * availability
}

pub fn profile_capacity(profile: &AgentProfile, task: &TaskId) -> Result<f64, CapitalError> {
    let a = profile.ability(task).ok_or_else(|| CapitalError::MissingAbility {
        agent: profile.agent_id.clone(),
        task: task.clone(),
    })?;
    Ok(capacity(a.capability, a.willingness, a.availability))
}

/// Number of distinct commits authored by `agent` in `events`.
pub fn capacity_from_commits(events: &[InteractionEvent], agent: &AgentId) -> f64 {
    events
        .iter()
        .filter(|e| &e.agent_id == agent)
        .map(|e| e.commit_id.as_str())
        .collect::<BTreeSet<_>>()
        .len() as f64
}

pub fn benevolence(relation: f64, capacity: f64) -> f64 {
    relation * capacity
}

/// Hop distances between agents, used by exponential belief.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HopTable {
    distances: Option<BTreeMap<(AgentId, AgentId), u32>>,
}

impl HopTable {
    /// Every pair is one hop apart.
    pub fn direct() -> Self {
        Self { distances: None }
    }

    /// Breadth-first distances over a directed adjacency map.
    pub fn from_adjacency(adj: &BTreeMap<AgentId, BTreeSet<AgentId>>) -> Self {
        let mut distances = BTreeMap::new();
        for start in adj.keys() {
            let mut queue = VecDeque::from([(start, 0u32)]);
            let mut seen = BTreeSet::from([start]);
            while let Some((at, d)) = queue.pop_front() {
                for next in adj.get(at).into_iter().flatten() {
                    if seen.insert(next) {
                        distances.insert((start.clone(), next.clone()), d + 1);
                        queue.push_back((next, d + 1));
                    }
                }
            }
        }
        Self { distances: Some(distances) }
    }

    pub fn hops(&self, from: &AgentId, to: &AgentId) -> Option<u32> {
        if from == to {
            return Some(0);
        }
        match &self.distances {
            None => Some(1),
            Some(d) => d.get(&(from.clone(), to.clone())).copied(),
        }
    }
}

pub fn belief_factor(hop_distance: u32, belief: &BeliefConfig) -> f64 {
    match belief.mode {
        BeliefMode::Ratio => 1.0,
        BeliefMode::Exponential => (-belief.lambda * f64::from(hop_distance)).exp(),
    }
}

/// Belief weight of `peer` as seen from `agent`. Unreachable peers carry no
/// weight under exponential decay.
fn peer_weight(agent: &AgentId, peer: &AgentId, belief: &BeliefConfig, hops: &HopTable) -> f64 {
    match belief.mode {
        BeliefMode::Ratio => 1.0,
        BeliefMode::Exponential => hops.hops(agent, peer).map_or(0.0, |d| belief_factor(d, belief)),
    }
}

/// One agent's measurements within one task and interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapitalRow {
    pub agent_id: AgentId,
    pub task_id: TaskId,
    pub interval: usize,
    pub relation: f64,
    pub capacity: f64,
    pub benevolence: f64,
    pub potential_benevolence: f64,
    pub instant_sc: f64,
}

impl CapitalRow {
    /// Row with benevolence filled in; potential benevolence and SC start at 0.
    pub fn new(agent_id: AgentId, task_id: TaskId, interval: usize, relation: f64, capacity: f64) -> Self {
        Self {
            agent_id,
            task_id,
            interval,
            relation,
            capacity,
            benevolence: benevolence(relation, capacity),
            potential_benevolence: 0.0,
            instant_sc: 0.0,
        }
    }
}

/// Belief-weighted sum of the benevolence of every other agent in the group.
pub fn potential_benevolence(
    agent: &AgentId,
    rows: &[CapitalRow],
    belief: &BeliefConfig,
    hops: &HopTable,
) -> Result<f64, CapitalError> {
    if !rows.iter().any(|r| &r.agent_id == agent) {
        return Err(CapitalError::UnknownAgent(agent.clone()));
    }
    let mut peers = rows.iter().filter(|r| &r.agent_id != agent).peekable();
    if peers.peek().is_none() {
        return Err(CapitalError::NoPeers(agent.clone()));
    }
    Ok(peers.map(|r| peer_weight(agent, &r.agent_id, belief, hops) * r.benevolence).sum())
}

/// `benevolence / potential` when the potential is positive, else 0.
pub fn conditional_benevolence(benevolence_in: f64, potential_in: f64) -> f64 {
    if potential_in > 0.0 {
        benevolence_in / potential_in
    } else {
        0.0
    }
}

/// Agent's own benevolence over its belief-weighted potential benevolence.
pub fn instant_sc(
    agent: &AgentId,
    rows: &[CapitalRow],
    belief: &BeliefConfig,
    hops: &HopTable,
) -> Result<f64, CapitalError> {
    let pb = potential_benevolence(agent, rows, belief, hops)?;
    let own = rows
        .iter()
        .find(|r| &r.agent_id == agent)
        .map(|r| r.benevolence)
        .ok_or_else(|| CapitalError::UnknownAgent(agent.clone()))?;
    Ok(conditional_benevolence(own, pb))
}

/// Fills potential benevolence and instant SC for every row of one group.
pub fn score_group(rows: &mut [CapitalRow], belief: &BeliefConfig, hops: &HopTable) -> Result<(), CapitalError> {
    let mut scored = Vec::with_capacity(rows.len());
    for r in rows.iter() {
        let pb = potential_benevolence(&r.agent_id, rows, belief, hops)?;
        scored.push((pb, conditional_benevolence(r.benevolence, pb)));
    }
    for (r, (pb, sc)) in rows.iter_mut().zip(scored) {
        r.potential_benevolence = pb;
        r.instant_sc = sc;
    }
    Ok(())
}

pub fn accumulate_sc(previous: f64, instant: f64) -> f64 {
    previous + instant
}

/// Group total of per-agent SC values.
///
/// The report feeds accumulated values here, so the net figure for an
/// interval covers everything earned up to and including it.
pub fn net_sc(values: impl IntoIterator<Item = f64>) -> Result<f64, CapitalError> {
    let mut iter = values.into_iter().peekable();
    if iter.peek().is_none() {
        return Err(CapitalError::EmptyGroup);
    }
    Ok(iter.sum())
}
