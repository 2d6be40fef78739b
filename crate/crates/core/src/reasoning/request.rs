use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::goal::Goal;
use super::memory::{DecisionMemory, Outcome};
use super::response::{Choice, FrontierId};
use crate::key_subgraph::KeyPayload;
use crate::scene_graph::ObjectId;

/// Version of the request and focus documents sent to a reasoner.
pub const SCHEMA_VERSION: u32 = 1;

/// Decisions included in a request by default; the full memory is always kept.
pub const DEFAULT_MEMORY_WINDOW: usize = 10;

/// The goal plus, for image goals, the categories visible in the reference image.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalPayload {
    pub goal: Goal,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub image_summary: Vec<String>,
}

impl From<Goal> for GoalPayload {
    fn from(goal: Goal) -> Self {
        Self { goal, image_summary: Vec::new() }
    }
}

/// What the agent saw toward a frontier: a stand-in for the frontier image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrontierPayload {
    pub id: FrontierId,
    pub position: [f64; 3],
    pub room: String,
    pub categories: BTreeMap<String, u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemoryRecord {
    pub step: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_id: Option<ObjectId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frontier_id: Option<FrontierId>,
    pub outcome: Outcome,
    pub rationale: String,
}

/// Everything the reasoner sees for one decision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReasonerRequest {
    pub schema_version: u32,
    pub step: u32,
    pub goal: GoalPayload,
    pub key_subgraph: KeyPayload,
    pub memory: Vec<MemoryRecord>,
    pub frontiers: Vec<FrontierPayload>,
}

impl ReasonerRequest {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("request serializes")
    }

    /// Hex SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

pub fn assemble_query(
    key: &KeyPayload,
    memory: &DecisionMemory,
    frontiers: &[FrontierPayload],
    goal: &GoalPayload,
    step: u32,
    window: usize,
) -> ReasonerRequest {
    let memory = memory
        .window(window)
        .map(|(e, outcome)| {
            let (target_id, frontier_id) = match e.response.choice {
                Choice::Target(t) => (Some(t), None),
                Choice::Frontier(f) => (None, Some(f)),
            };
            MemoryRecord { step: e.step, target_id, frontier_id, outcome, rationale: e.response.rationale.clone() }
        })
        .collect();
    ReasonerRequest {
        schema_version: SCHEMA_VERSION,
        step,
        goal: goal.clone(),
        key_subgraph: key.clone(),
        memory,
        frontiers: frontiers.to_vec(),
    }
}
