use std::collections::BTreeSet;

use log::warn;
use serde::{Deserialize, Serialize};

use super::compact::CompactGraph;
use crate::reasoning::{fold_term, GoalKind, GoalPayload, Reasoner, ReasonerError, SCHEMA_VERSION};
use crate::scene_graph::ObjectId;

/// Asks the reasoner for the objects most related to the goal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FocusRequest {
    pub schema_version: u32,
    pub step: u32,
    pub k: usize,
    pub goal: GoalPayload,
    pub graph: CompactGraph,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FocusResult {
    pub related: BTreeSet<ObjectId>,
    /// Returned ids that are not in the graph, or duplicates.
    pub discarded: Vec<ObjectId>,
    pub fallback: bool,
}

/// Top-k related objects. Invalid ids are dropped; an empty valid answer falls back to
/// category string matching.
pub fn focus(
    compact: &CompactGraph,
    goal: &GoalPayload,
    reasoner: &mut dyn Reasoner,
    k: usize,
    step: u32,
) -> Result<FocusResult, ReasonerError> {
    let k = k.max(1);
    let request =
        FocusRequest { schema_version: SCHEMA_VERSION, step, k, goal: goal.clone(), graph: compact.clone() };
    let ids = reasoner.focus(&request)?;
    let mut result = FocusResult::default();
    for id in ids {
        if result.related.len() < k && compact.contains(id) && result.related.insert(id) {
            continue;
        }
        if !compact.contains(id) {
            warn!("focus: dropping unknown object id {id}");
        }
        result.discarded.push(id);
    }
    if result.related.is_empty() && !compact.nodes.is_empty() {
        result.related = fallback_focus(compact, goal, k);
        result.fallback = true;
    }
    Ok(result)
}

fn contains_words(haystack: &str, needle: &str) -> bool {
    !needle.is_empty() && format!(" {haystack} ").contains(&format!(" {needle} "))
}

/// Up to `k` ids whose category equals a goal term, then ones that contain or are contained
/// in a goal term at word boundaries; ascending id within each rank.
pub fn fallback_focus(compact: &CompactGraph, goal: &GoalPayload, k: usize) -> BTreeSet<ObjectId> {
    let terms: Vec<String> = match goal.goal.kind() {
        GoalKind::Category => goal.goal.category_term().map(fold_term).into_iter().collect(),
        GoalKind::Language => goal.goal.description().map(fold_term).into_iter().collect(),
        GoalKind::Image => goal.image_summary.iter().map(|t| fold_term(t)).collect(),
    };
    let rank = |category: &str| {
        let category = fold_term(category);
        if terms.contains(&category) {
            Some(0)
        } else if terms.iter().any(|t| contains_words(t, &category) || contains_words(&category, t)) {
            Some(1)
        } else {
            None
        }
    };
    let mut ranked: Vec<(u8, ObjectId)> =
        compact.nodes.iter().filter_map(|n| rank(&n.category).map(|r| (r, n.id))).collect();
    ranked.sort_unstable();
    ranked.into_iter().take(k).map(|(_, id)| id).collect()
}
