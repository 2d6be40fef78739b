use serde::{Deserialize, Serialize};

use super::response::ReasonerResponse;

/// What the loop later learned about a decision.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    #[default]
    Pending,
    Confirmed,
    Refuted,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub step: u32,
    pub response: ReasonerResponse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeNote {
    pub step: u32,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MemoryError {
    #[error("decision at step {got} does not follow step {last}")]
    NonMonotoneStep { last: u32, got: u32 },
    #[error("step {0} already holds a different decision")]
    ConflictingReplay(u32),
    #[error("no decision at step {0}")]
    UnknownStep(u32),
}

/// Append-only record of past decisions. Outcomes live in a separate append-only log;
/// the latest note for a step wins.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionMemory {
    entries: Vec<MemoryEntry>,
    #[serde(default)]
    outcomes: Vec<OutcomeNote>,
}

impl DecisionMemory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[MemoryEntry] {
        &self.entries
    }

    pub fn outcome_log(&self) -> &[OutcomeNote] {
        &self.outcomes
    }

    pub fn last_step(&self) -> Option<u32> {
        self.entries.last().map(|e| e.step)
    }

    /// Appends a decision. Re-recording the latest step with the same response is a no-op
    /// returning `false`.
    pub fn record(&mut self, step: u32, response: ReasonerResponse) -> Result<bool, MemoryError> {
        if let Some(last) = self.entries.last() {
            if step == last.step {
                return if last.response == response { Ok(false) } else { Err(MemoryError::ConflictingReplay(step)) };
            }
            if step < last.step {
                return Err(MemoryError::NonMonotoneStep { last: last.step, got: step });
            }
        }
        self.entries.push(MemoryEntry { step, response });
        Ok(true)
    }

    pub fn annotate(&mut self, step: u32, outcome: Outcome) -> Result<(), MemoryError> {
        if self.entries.binary_search_by_key(&step, |e| e.step).is_err() {
            return Err(MemoryError::UnknownStep(step));
        }
        self.outcomes.push(OutcomeNote { step, outcome });
        Ok(())
    }

    pub fn outcome_of(&self, step: u32) -> Outcome {
        self.outcomes.iter().rev().find(|n| n.step == step).map(|n| n.outcome).unwrap_or_default()
    }

    /// The latest `m` decisions with their current outcomes, oldest first.
    pub fn window(&self, m: usize) -> impl Iterator<Item = (&MemoryEntry, Outcome)> {
        let start = self.entries.len().saturating_sub(m);
        self.entries[start..].iter().map(|e| (e, self.outcome_of(e.step)))
    }

    /// True when `earlier` is a prefix of this memory, outcomes included.
    pub fn extends(&self, earlier: &DecisionMemory) -> bool {
        self.entries.starts_with(&earlier.entries) && self.outcomes.starts_with(&earlier.outcomes)
    }
}
