//! Deterministic synthetic simulator: point-cloud scenes, a noisy detector, grid
//! navigation, frontier extraction, the episode loop and navigation metrics.

mod episode;
mod frontier;
pub mod last_mile;
mod metrics;
mod nav;
mod render;
mod scene;


pub use episode::{
    run_episode, run_lifelong, within, Agent, EpisodeOutput, EpisodeParams, EpisodeResult, EpisodeTranscript,
    FrameSummary, StepRecord, ViewpointRecord, TRANSCRIPT_FORMAT_VERSION,
};
pub use frontier::{extract_frontiers, Frontier, FrontierSnapshot};
pub use metrics::{compute_metrics, spl_term, success_rate_at, Metrics};
pub use nav::{shortest_path, shortest_path_masked, DistanceField};
pub use render::{
    frame_rng, instance_embedding, object_in_view, render_frame, visible_fraction, NoiseConfig, SensorConfig,
};
pub use scene::{
    BoxSpec, GoalSpec, ObjectSpec, RoomSpec, SceneObject, SceneSpec, StartSpec, SyntheticScene, SCENE_FORMAT_VERSION,
};

use crate::key_subgraph::KeyError;
use crate::reasoning::MemoryError;
use crate::scene_graph::GraphError;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("scene: {0}")]
    Scene(String),
    #[error("position is outside the grid")]
    OutOfBounds,
    #[error("position is not traversable")]
    NotTraversable,
    #[error("no traversable path")]
    Disconnected,
    #[error("no episodes to aggregate")]
    NoEpisodes,
    #[error("invalid episode parameters: {0}")]
    InvalidParams(String),
    #[error("scene has no goal {0}")]
    UnknownGoal(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
}
