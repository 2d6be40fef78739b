//! Key-subgraph selection: compress the graph to ids and adjacency, let the reasoner
//! focus on a few related objects, then keep the fewest images that still certify every
//! relation touching them.

mod compact;
mod focus;
mod payload;
mod prune;

pub use compact::{compress, CompactGraph, CompactNode};
pub use focus::{fallback_focus, focus, FocusRequest, FocusResult};
pub use payload::{
    assemble_key_prompt, estimate_tokens, full_graph_payload, FullGraphPayload, KeyPayload, PayloadEdge, PayloadImage,
    PayloadObject,
};
pub use prune::{greedy_prune, greedy_prune_store, KeySubgraph};

use crate::scene_graph::{ImageRef, ObjectId};

/// Default number of related objects requested from the reasoner.
pub const DEFAULT_FOCUS_K: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KeyError {
    #[error("object {0} is not in the graph")]
    UnknownObject(ObjectId),
    #[error("frame {0} is missing from the frame store")]
    MissingFrame(ImageRef),
    #[error("edge store integrity violation: {0}")]
    Integrity(String),
}

#[cfg(test)]
mod tests;
