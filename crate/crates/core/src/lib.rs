//! Multi-modal 3D scene graphs for zero-shot object-goal navigation.
//!
//! The crate covers incremental scene-graph construction from frame observations,
//! key-subgraph selection by greedy image cover, reasoner query assembly with an
//! adaptive vocabulary and decision memory, visibility-based final viewpoint
//! selection, and a desk-scale simulator that runs whole episodes and scores them.
//!
//! Geometry, graph and viewpoint code is generic over [`Real`] (`f32` or `f64`);
//! the aliases below fix the scalar for the common cases.

pub mod geometry;
pub mod key_subgraph;
pub mod reasoning;
mod scalar;
pub mod scene_graph;
pub mod sim;
pub mod viewpoint;

pub use scalar::Real;

pub type Point = geometry::Point3<f64>;
pub type Cloud = geometry::PointCloud<f64>;
pub type Grid = geometry::OccupancyGrid<f64>;
pub type SceneGraph = scene_graph::SceneGraph<f64>;
pub type ObjectNode = scene_graph::ObjectNode<f64>;
pub type FrameObservation = scene_graph::FrameObservation<f64>;

pub type Point32 = geometry::Point3<f32>;
pub type Cloud32 = geometry::PointCloud<f32>;
pub type Grid32 = geometry::OccupancyGrid<f32>;
