//! Incremental multi-modal scene graph: tracked objects plus edges that store the
//! frames in which each nearby object pair was seen together.

mod edges;
mod graph;
mod types;

#[cfg(test)]
mod tests;

pub use edges::EdgeStore;
pub use graph::{
    co_occurring_pairs, detection_bbox, extract_frame_objects, Extraction, FrameRecord, GraphConfig, GraphStats,
    MatchResult, NoRooms, RoomLookup, SceneGraph, UpdateReport, GRAPH_FORMAT_VERSION, UNKNOWN_ROOM,
};
pub use types::{
    cosine_similarity, BBox, CategoryVote, Detection, FrameObject, FrameObservation, IdPair, ImageRef, MaskRef,
    ObjectId, ObjectNode, Pose,
};

use crate::geometry::GeometryError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("non-monotone frame: {got} after {last}")]
    NonMonotoneFrame { last: u64, got: u64 },
    #[error("image {0} already integrated")]
    DuplicateImage(ImageRef),
    #[error("invalid observation: {0}")]
    InvalidObservation(String),
    #[error("invalid graph config: {0}")]
    InvalidConfig(&'static str),
    #[error("graph integrity violation: {0}")]
    Integrity(String),
    #[error("unsupported snapshot format version {0}")]
    UnsupportedVersion(u32),
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
