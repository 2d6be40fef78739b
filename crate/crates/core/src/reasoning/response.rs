use std::fmt;

use serde::{Deserialize, Serialize};

use crate::scene_graph::ObjectId;

/// Identifier of an exploration frontier within one step's frontier list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FrontierId(pub u32);

impl fmt::Display for FrontierId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Choice {
    Target(ObjectId),
    Frontier(FrontierId),
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Choice::Target(id) => write!(f, "target {id}"),
            Choice::Frontier(id) => write!(f, "frontier {id}"),
        }
    }
}

/// One decision: where to go next, plus any categories the detector should start looking for.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "WireResponse", into = "WireResponse")]
pub struct ReasonerResponse {
    pub choice: Choice,
    pub proposed_vocab: Vec<String>,
    pub rationale: String,
}

/// On-the-wire form: exactly one of `target_id` / `frontier_id`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireResponse {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_id: Option<ObjectId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frontier_id: Option<FrontierId>,
    #[serde(default)]
    pub proposed_vocab: Vec<String>,
    #[serde(default)]
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ResponseError {
    #[error("response names neither a target nor a frontier")]
    MissingChoice,
    #[error("response names both a target and a frontier")]
    AmbiguousChoice,
}

impl TryFrom<WireResponse> for ReasonerResponse {
    type Error = ResponseError;
    fn try_from(w: WireResponse) -> Result<Self, ResponseError> {
        let choice = match (w.target_id, w.frontier_id) {
            (Some(t), None) => Choice::Target(t),
            (None, Some(f)) => Choice::Frontier(f),
            (None, None) => return Err(ResponseError::MissingChoice),
            (Some(_), Some(_)) => return Err(ResponseError::AmbiguousChoice),
        };
        Ok(ReasonerResponse { choice, proposed_vocab: w.proposed_vocab, rationale: w.rationale })
    }
}

impl From<ReasonerResponse> for WireResponse {
    fn from(r: ReasonerResponse) -> Self {
        let (target_id, frontier_id) = match r.choice {
            Choice::Target(t) => (Some(t), None),
            Choice::Frontier(f) => (None, Some(f)),
        };
        WireResponse { target_id, frontier_id, proposed_vocab: r.proposed_vocab, rationale: r.rationale }
    }
}

impl ReasonerResponse {
    pub fn target(id: ObjectId) -> Self {
        Self { choice: Choice::Target(id), proposed_vocab: Vec::new(), rationale: String::new() }
    }

    pub fn frontier(id: FrontierId) -> Self {
        Self { choice: Choice::Frontier(id), proposed_vocab: Vec::new(), rationale: String::new() }
    }

    pub fn with_vocab<I, S>(mut self, terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.proposed_vocab = terms.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_rationale(mut self, rationale: impl Into<String>) -> Self {
        self.rationale = rationale.into();
        self
    }
}
