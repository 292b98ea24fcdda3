//! Social capital measurement for open-membership organizations.
//!
//! Agents interact on the subtasks of a task. Co-work yields explicit
//! directed links; closure over explicit paths yields implicit ones. Link
//! values feed a per-pair relation, relation times capacity gives
//! benevolence, and an agent's social capital for an interval is its own
//! benevolence over the (belief-weighted) benevolence of its peers.
//!
//! - [`model`]: identifiers, hierarchy, links, relation matrix, report types
//! - [`links`]: link accumulation, closure, relation update, promotion
//! - [`capital`]: capacity, benevolence, belief decay, SC
//! - [`ingest`]: contribution logs to events and co-edit links
//! - [`report`]: the end-to-end pipeline and report renderers

pub mod capital;
pub mod ingest;
pub mod links;
pub mod model;
pub mod report;

pub use capital::{BeliefConfig, BeliefMode, CapitalError, CapitalRow};
pub use ingest::{ContributionRecord, IngestError, ParseMode};
pub use links::{LinkError, LinkGraph};
pub use model::{AgentId, Interval, LinkKind, LinkState, SCReport, SubtaskId, TaskHierarchy, TaskId};
pub use report::{compute, emit_report, run_pipeline, OutputFormat, PipelineError, RunConfig, RunSettings};
