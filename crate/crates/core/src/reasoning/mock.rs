use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::request::ReasonerRequest;
use super::response::ReasonerResponse;
use super::{fold_term, goal_term, Reasoner, ReasonerError};
use crate::key_subgraph::FocusRequest;
use crate::scene_graph::ObjectId;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OnExhausted {
    #[default]
    Error,
    RepeatLast,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum FocusMode {
    /// Objects whose category is the goal term, then their neighbours.
    #[default]
    GoalMatch,
    Fixed { ids: Vec<ObjectId> },
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    GoalInKeyObjects,
    GoalInFrontierSnapshot,
    Always,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case", deny_unknown_fields)]
pub enum Action {
    PickGoalObject,
    PickGoalFrontier,
    FirstFrontier,
    Respond { response: ReasonerResponse },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rule {
    pub when: Condition,
    pub then: Action,
    #[serde(default)]
    pub propose: Vec<String>,
}

/// Canned behaviour for [`MockReasoner`].
///
/// Each decision is resolved by, in order: a response keyed by its step, the first rule
/// that applies, the next entry of `sequence`, and finally `on_exhausted`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockScript {
    #[serde(default)]
    pub on_exhausted: OnExhausted,
    #[serde(default)]
    pub focus: FocusMode,
    #[serde(default)]
    pub steps: BTreeMap<u32, ReasonerResponse>,
    #[serde(default)]
    pub rules: Vec<Rule>,
    #[serde(default)]
    pub sequence: Vec<ReasonerResponse>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScriptError {
    #[error("cannot read script {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed script: {0}")]
    Parse(#[from] serde_json::Error),
}

impl MockScript {
    pub fn from_json(text: &str) -> Result<Self, ScriptError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ScriptError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScriptError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    /// Picks the goal object when it is in the key subgraph, else the frontier that shows it,
    /// else the largest frontier.
    pub fn oracle_greedy() -> Self {
        let rule = |when, then| Rule { when, then, propose: Vec::new() };
        MockScript {
            on_exhausted: OnExhausted::Error,
            focus: FocusMode::GoalMatch,
            steps: BTreeMap::new(),
            rules: vec![
                rule(Condition::GoalInKeyObjects, Action::PickGoalObject),
                rule(Condition::GoalInFrontierSnapshot, Action::PickGoalFrontier),
                rule(Condition::Always, Action::FirstFrontier),
            ],
            sequence: Vec::new(),
        }
    }
}

/// Scripted reasoner that records every request it receives.
#[derive(Clone, Debug)]
pub struct MockReasoner {
    script: MockScript,
    cursor: usize,
    last: Option<ReasonerResponse>,
    requests: Vec<ReasonerRequest>,
    focus_requests: Vec<FocusRequest>,
}

impl MockReasoner {
    pub fn new(script: MockScript) -> Self {
        Self { script, cursor: 0, last: None, requests: Vec::new(), focus_requests: Vec::new() }
    }

    pub fn requests(&self) -> &[ReasonerRequest] {
        &self.requests
    }

    pub fn focus_requests(&self) -> &[FocusRequest] {
        &self.focus_requests
    }

    fn goal_object(request: &ReasonerRequest) -> Option<ObjectId> {
        let objects = &request.key_subgraph.objects;
        let term = goal_term(&request.goal, objects.iter().map(|o| o.category.as_str()))?;
        let related = &request.key_subgraph.related;
        objects
            .iter()
            .filter(|o| fold_term(&o.category) == term)
            .min_by_key(|o| (!related.contains(&o.id), o.id))
            .map(|o| o.id)
    }

    fn goal_frontier(request: &ReasonerRequest) -> Option<super::FrontierId> {
        let offered = request.frontiers.iter().flat_map(|f| f.categories.keys().map(String::as_str));
        let term = goal_term(&request.goal, offered)?;
        request
            .frontiers
            .iter()
            .filter_map(|f| f.categories.get(&term).filter(|n| **n > 0).map(|n| (std::cmp::Reverse(*n), f.id)))
            .min()
            .map(|(_, id)| id)
    }

    fn apply_rule(rule: &Rule, request: &ReasonerRequest) -> Option<ReasonerResponse> {
        let holds = match rule.when {
            Condition::GoalInKeyObjects => Self::goal_object(request).is_some(),
            Condition::GoalInFrontierSnapshot => Self::goal_frontier(request).is_some(),
            Condition::Always => true,
        };
        if !holds {
            return None;
        }
        let response = match &rule.then {
            Action::PickGoalObject => ReasonerResponse::target(Self::goal_object(request)?)
                .with_rationale("goal category is among the key objects"),
            Action::PickGoalFrontier => ReasonerResponse::frontier(Self::goal_frontier(request)?)
                .with_rationale("goal category is visible toward this frontier"),
            Action::FirstFrontier => ReasonerResponse::frontier(request.frontiers.first()?.id)
                .with_rationale("largest unexplored frontier"),
            Action::Respond { response } => response.clone(),
        };
        let mut response = response;
        response.proposed_vocab.extend(rule.propose.iter().cloned());
        Some(response)
    }

    fn resolve(&mut self, request: &ReasonerRequest) -> Result<ReasonerResponse, ReasonerError> {
        if let Some(r) = self.script.steps.get(&request.step) {
            return Ok(r.clone());
        }
        if let Some(r) = self.script.rules.iter().find_map(|rule| Self::apply_rule(rule, request)) {
            return Ok(r);
        }
        if let Some(r) = self.script.sequence.get(self.cursor) {
            self.cursor += 1;
            return Ok(r.clone());
        }
        match (self.script.on_exhausted, &self.last) {
            (OnExhausted::RepeatLast, Some(last)) => Ok(last.clone()),
            _ => Err(ReasonerError::Exhausted(request.step)),
        }
    }
}

impl Reasoner for MockReasoner {
    fn focus(&mut self, request: &FocusRequest) -> Result<Vec<ObjectId>, ReasonerError> {
        self.focus_requests.push(request.clone());
        Ok(match &self.script.focus {
            FocusMode::None => Vec::new(),
            FocusMode::Fixed { ids } => ids.clone(),
            FocusMode::GoalMatch => goal_match_focus(request),
        })
    }

    fn decide(&mut self, request: &ReasonerRequest) -> Result<ReasonerResponse, ReasonerError> {
        self.requests.push(request.clone());
        let response = self.resolve(request)?;
        self.last = Some(response.clone());
        Ok(response)
    }
}

fn goal_match_focus(request: &FocusRequest) -> Vec<ObjectId> {
    let graph = &request.graph;
    let Some(term) = goal_term(&request.goal, graph.nodes.iter().map(|n| n.category.as_str())) else {
        return Vec::new();
    };
    let mut out: Vec<ObjectId> = graph.nodes.iter().filter(|n| fold_term(&n.category) == term).map(|n| n.id).collect();
    let matched = out.clone();
    for id in matched {
        for n in graph.adjacency.get(&id).into_iter().flatten() {
            if !out.contains(n) {
                out.push(*n);
            }
        }
    }
    out.truncate(request.k);
    out
}

