use std::fmt;

use serde::{Deserialize, Serialize};

use super::vocabulary::fold_term;
use crate::scene_graph::ImageRef;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalKind {
    Category,
    Language,
    Image,
}

impl fmt::Display for GoalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GoalKind::Category => "category",
            GoalKind::Language => "language",
            GoalKind::Image => "image",
        })
    }
}

/// What the agent is looking for.
///
/// A category goal carries `category_term`, a language goal `description`, an image
/// goal `image_ref`; no other field is present.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GoalRepr", into = "GoalRepr")]
pub struct Goal {
    kind: GoalKind,
    category_term: Option<String>,
    description: Option<String>,
    image_ref: Option<ImageRef>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GoalRepr {
    kind: GoalKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    category_term: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    image_ref: Option<ImageRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind} goal: {reason}")]
pub struct GoalError {
    pub kind: GoalKind,
    pub reason: &'static str,
}

impl TryFrom<GoalRepr> for Goal {
    type Error = GoalError;
    fn try_from(r: GoalRepr) -> Result<Self, GoalError> {
        let err = |reason| GoalError { kind: r.kind, reason };
        let (c, d, i) = (r.category_term.is_some(), r.description.is_some(), r.image_ref.is_some());
        let ok = match r.kind {
            GoalKind::Category => c && !d && !i,
            GoalKind::Language => !c && d && !i,
            GoalKind::Image => !c && !d && i,
        };
        if !ok {
            return Err(err("fields do not match kind"));
        }
        if r.category_term.as_deref().is_some_and(|t| fold_term(t).is_empty())
            || r.description.as_deref().is_some_and(|t| t.trim().is_empty())
        {
            return Err(err("empty text"));
        }
        Ok(Goal {
            kind: r.kind,
            category_term: r.category_term.map(|t| fold_term(&t)),
            description: r.description,
            image_ref: r.image_ref,
        })
    }
}

impl From<Goal> for GoalRepr {
    fn from(g: Goal) -> Self {
        GoalRepr { kind: g.kind, category_term: g.category_term, description: g.description, image_ref: g.image_ref }
    }
}

impl Goal {
    pub fn category(term: &str) -> Result<Self, GoalError> {
        GoalRepr { kind: GoalKind::Category, category_term: Some(term.into()), description: None, image_ref: None }
            .try_into()
    }

    pub fn language(description: &str) -> Result<Self, GoalError> {
        GoalRepr { kind: GoalKind::Language, category_term: None, description: Some(description.into()), image_ref: None }
            .try_into()
    }

    pub fn image(image_ref: ImageRef) -> Self {
        Goal { kind: GoalKind::Image, category_term: None, description: None, image_ref: Some(image_ref) }
    }

    pub fn kind(&self) -> GoalKind {
        self.kind
    }

    /// Case-folded category term of a category goal.
    pub fn category_term(&self) -> Option<&str> {
        self.category_term.as_deref()
    }

    pub fn description(&self) -> Option<&str> {
        self.description.as_deref()
    }

    pub fn image_ref(&self) -> Option<ImageRef> {
        self.image_ref
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            GoalKind::Category => write!(f, "find a {}", self.category_term.as_deref().unwrap_or_default()),
            GoalKind::Language => write!(f, "{}", self.description.as_deref().unwrap_or_default()),
            GoalKind::Image => write!(f, "find the object shown in {}", self.image_ref.map(|i| i.0).unwrap_or_default()),
        }
    }
}
