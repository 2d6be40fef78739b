//! Goals, adaptive vocabulary, decision memory, query assembly and reasoner backends.

mod apply;
mod goal;
mod http;
mod memory;
mod mock;
mod request;
mod response;
mod vocabulary;

pub use apply::{apply_response, Applied};
pub use goal::{Goal, GoalError, GoalKind};
pub use http::{
    extract_fenced_json, render_prompt, AttemptLog, HttpConfig, HttpReasoner, HttpReply, Transport, UreqTransport,
    DEFAULT_API_KEY_ENV, SYSTEM_PROMPT,
};
pub use memory::{DecisionMemory, MemoryEntry, MemoryError, Outcome, OutcomeNote};
pub use mock::{Action, Condition, FocusMode, MockReasoner, MockScript, OnExhausted, Rule, ScriptError};
pub use request::{
    assemble_query, FrontierPayload, GoalPayload, MemoryRecord, ReasonerRequest, DEFAULT_MEMORY_WINDOW,
    SCHEMA_VERSION,
};
pub use response::{Choice, FrontierId, ReasonerResponse, ResponseError, WireResponse};
pub use vocabulary::{fold_term, Provenance, VocabTerm, Vocabulary};

use crate::key_subgraph::FocusRequest;
use crate::scene_graph::ObjectId;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReasonerError {
    #[error("reasoner transport failure: {message}")]
    Transport { message: String, retryable: bool },
    #[error("reasoner rejected credentials: {0}")]
    Auth(String),
    #[error("reasoner protocol error: {message}")]
    Protocol { message: String, raw: String },
    #[error("reasoner script exhausted at step {0}")]
    Exhausted(u32),
}

/// A decision backend: picks related objects for a goal, then a target or frontier.
pub trait Reasoner {
    fn focus(&mut self, request: &FocusRequest) -> Result<Vec<ObjectId>, ReasonerError>;
    fn decide(&mut self, request: &ReasonerRequest) -> Result<ReasonerResponse, ReasonerError>;
}

impl<R: Reasoner + ?Sized> Reasoner for Box<R> {
    fn focus(&mut self, request: &FocusRequest) -> Result<Vec<ObjectId>, ReasonerError> {
        (**self).focus(request)
    }

    fn decide(&mut self, request: &ReasonerRequest) -> Result<ReasonerResponse, ReasonerError> {
        (**self).decide(request)
    }
}

/// The category a goal points at, judged against the categories on offer.
///
/// Category goals use their term. Language goals use the offered category that appears
/// earliest in the description as whole words, longer names winning ties. Image goals
/// use the first category of the reference-image summary.
pub fn goal_term<'a, I>(goal: &GoalPayload, offered: I) -> Option<String>
where
    I: IntoIterator<Item = &'a str>,
{
    match goal.goal.kind() {
        GoalKind::Category => goal.goal.category_term().map(str::to_string),
        GoalKind::Image => goal.image_summary.first().map(|t| fold_term(t)),
        GoalKind::Language => {
            let text = format!(" {} ", fold_term(goal.goal.description()?));
            offered
                .into_iter()
                .map(fold_term)
                .filter(|c| !c.is_empty())
                .filter_map(|c| text.find(&format!(" {c} ")).map(|at| (at, std::cmp::Reverse(c.len()), c)))
                .min()
                .map(|(_, _, c)| c)
        }
    }
}
