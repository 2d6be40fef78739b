//! Point, point-cloud and ground-grid primitives shared by every other module.

mod cloud;
mod grid;
mod point;
mod segment;
mod shapes;

pub use cloud::{PointCloud, DEFAULT_INDEX_CELL};
pub use grid::{Cell, CellState, OccupancyGrid};
pub use point::Point3;
pub use segment::segment_clear;
pub use shapes::box_surface_points;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GeometryError {
    #[error("empty point cloud")]
    EmptyCloud,
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("point cloud exceeds u32 index range")]
    TooLarge,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

/// Arithmetic mean of the cloud's points.
pub fn centroid<T: Real>(cloud: &PointCloud<T>) -> Result<Point3<T>, GeometryError> {
    cloud.centroid()
}

/// Distance from `q` to the closest point of `cloud`.
pub fn nearest_distance<T: Real>(cloud: &PointCloud<T>, q: &Point3<T>) -> Result<T, GeometryError> {
    cloud.nearest_distance(q)
}

/// See [`OccupancyGrid::is_traversable`].
pub fn is_traversable<T: Real>(grid: &OccupancyGrid<T>, v: &Point3<T>, clearance: T) -> bool {
    grid.is_traversable(v, clearance)
}
