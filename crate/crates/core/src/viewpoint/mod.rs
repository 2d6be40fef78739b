//! Final-viewpoint selection: sample candidate camera positions on rings around the
//! target, score each by the fraction of target points in clear line of sight, and keep
//! the best traversable one.

use std::borrow::Cow;
use std::collections::HashSet;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{segment_clear, GeometryError, OccupancyGrid, Point3, PointCloud};
use crate::scalar::Real;
use crate::scene_graph::ObjectNode;


#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"), deny_unknown_fields)]
pub struct VvdParams<T> {
    /// Ring radii in meters, ascending.
    pub radii: Vec<T>,
    pub samples_per_ring: usize,
    pub camera_height: T,
    /// Minimum free distance around every ray sample (meters).
    pub obstruction_distance: T,
    /// Robot clearance used for the traversability test.
    pub clearance: T,
    /// Ray sampling step; half the obstruction distance when absent.
    #[serde(default)]
    pub step: Option<T>,
    /// Larger target clouds are uniformly subsampled to this many points.
    #[serde(default = "default_max_points")]
    pub max_target_points: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_max_points() -> usize {
    2000
}

impl<T: Real> Default for VvdParams<T> {
    fn default() -> Self {
        Self {
            radii: [0.8, 1.2, 1.6, 2.0].iter().map(|r| T::of(*r)).collect(),
            samples_per_ring: 16,
            camera_height: T::of(1.5),
            obstruction_distance: T::of(0.1),
            clearance: T::of(0.2),
            step: None,
            max_target_points: default_max_points(),
            seed: 0,
        }
    }
}

impl<T: Real> VvdParams<T> {
    pub fn validate(&self) -> Result<(), ViewpointError> {
        let bad = |m| Err(ViewpointError::InvalidParams(m));
        if self.radii.is_empty() || self.radii.iter().any(|r| !(*r > T::zero() && r.is_finite())) {
            return bad("radii must be positive");
        }
        if self.radii.windows(2).any(|w| w[0] >= w[1]) {
            return bad("radii must be strictly ascending");
        }
        if self.samples_per_ring < 3 {
            return bad("at least 3 samples per ring");
        }
        if !(self.camera_height > T::zero()) || !(self.obstruction_distance > T::zero()) {
            return bad("camera height and obstruction distance must be positive");
        }
        if !(self.clearance >= T::zero()) {
            return bad("clearance must be non-negative");
        }
        if self.step.is_some_and(|s| !(s > T::zero())) {
            return bad("step must be positive");
        }
        if self.max_target_points == 0 {
            return bad("max_target_points must be positive");
        }
        Ok(())
    }

    pub fn effective_step(&self) -> T {
        self.step.unwrap_or(self.obstruction_distance / T::two())
    }

    /// Every length multiplied by `s`.
    pub fn scaled(&self, s: T) -> Self {
        Self {
            radii: self.radii.iter().map(|r| *r * s).collect(),
            camera_height: self.camera_height * s,
            obstruction_distance: self.obstruction_distance * s,
            clearance: self.clearance * s,
            step: Some(self.effective_step() * s),
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct ViewpointCandidate<T> {
    pub position: Point3<T>,
    /// Fraction of (sampled) target points in clear line of sight.
    pub score: T,
    pub ring_radius: T,
    pub ring_index: usize,
    pub angle_index: usize,
    pub traversable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct ViewpointDecision<T> {
    pub best: ViewpointCandidate<T>,
    /// All candidates in sampling order.
    pub candidates: Vec<ViewpointCandidate<T>>,
    pub target_points_used: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ViewpointError {
    #[error("invalid viewpoint parameters: {0}")]
    InvalidParams(&'static str),
    #[error("target has an empty point cloud")]
    EmptyTarget,
    #[error("no traversable viewpoint on any ring")]
    NoViewpoint,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Ring candidates around `center` at camera height, ordered by ring then angle.
///
/// Angle `k` on ring `r` sits at `center + (r·cos θ, h − center.y, r·sin θ)` with
/// `θ = 2πk/K`. Scores start at zero and every candidate is marked traversable.
pub fn sample_candidates<T: Real>(center: &Point3<T>, params: &VvdParams<T>) -> Vec<ViewpointCandidate<T>> {
    let k = params.samples_per_ring;
    let mut out = Vec::with_capacity(params.radii.len() * k);
    for (ring_index, r) in params.radii.iter().enumerate() {
        for angle_index in 0..k {
            let theta = T::tau() * T::of_usize(angle_index) / T::of_usize(k);
            let offset = Point3::new(*r * theta.cos(), params.camera_height - center.y, *r * theta.sin());
            out.push(ViewpointCandidate {
                position: *center + offset,
                score: T::zero(),
                ring_radius: *r,
                ring_index,
                angle_index,
                traversable: true,
            });
        }
    }
    out
}

fn visible_count<T: Real>(
    v: &Point3<T>,
    target: &[Point3<T>],
    occluders: &PointCloud<T>,
    tau: T,
    step: T,
) -> Result<usize, GeometryError> {
    let mut n = 0;
    for p in target {
        if segment_clear(v, p, occluders, tau, step)? {
            n += 1;
        }
    }
    Ok(n)
}

/// Fraction of `target` points `p` for which the segment from `v` to `p` is clear of
/// `occluders`. The occluder cloud must not contain the target itself.
pub fn visibility_score<T: Real>(
    v: &Point3<T>,
    target: &[Point3<T>],
    occluders: &PointCloud<T>,
    tau: T,
    step: T,
) -> Result<T, ViewpointError> {
    if target.is_empty() {
        return Err(ViewpointError::EmptyTarget);
    }
    let n = visible_count(v, target, occluders, tau, step)?;
    Ok(T::of_usize(n) / T::of_usize(target.len()))
}

/// `scene` without any point that exactly equals a point of `target`.
pub fn occluders_excluding<'a, T: Real>(scene: &'a PointCloud<T>, target: &[Point3<T>]) -> Cow<'a, PointCloud<T>> {
    let tiny = T::epsilon();
    if !target.iter().any(|p| scene.any_within(p, tiny)) {
        return Cow::Borrowed(scene);
    }
    let key = |p: &Point3<T>| p.to_array_f64().map(f64::to_bits);
    let drop: HashSet<[u64; 3]> = target.iter().map(key).collect();
    let kept = scene.points().iter().filter(|p| !drop.contains(&key(p))).copied().collect();
    Cow::Owned(PointCloud::with_cell_size(kept, scene.cell_size()).expect("subset of a finite cloud"))
}

/// At most `max` target points, chosen uniformly without replacement by `seed`.
pub fn subsample_target<T: Real>(points: &[Point3<T>], max: usize, seed: u64) -> Vec<Point3<T>> {
    if points.len() <= max {
        return points.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = index::sample(&mut rng, points.len(), max).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| points[i]).collect()
}

/// Samples, scores and filters candidates around a target cloud.
///
/// Candidates are scored in parallel; the best is the traversable one with the most
/// visible points, the earliest in sampling order winning ties.
pub fn decide_viewpoint_for_cloud<T: Real>(
    target: &[Point3<T>],
    center: &Point3<T>,
    occluders: &PointCloud<T>,
    grid: &OccupancyGrid<T>,
    params: &VvdParams<T>,
) -> Result<ViewpointDecision<T>, ViewpointError> {
    params.validate()?;
    if target.is_empty() {
        return Err(ViewpointError::EmptyTarget);
    }
    let target = subsample_target(target, params.max_target_points, params.seed);
    let tau = params.obstruction_distance;
    let step = params.effective_step();
    let mut candidates = sample_candidates(center, params);
    let counts: Vec<Result<(bool, usize), GeometryError>> = candidates
        .par_iter()
        .map(|c| {
            let ok = grid.is_traversable(&c.position, params.clearance);
            visible_count(&c.position, &target, occluders, tau, step).map(|n| (ok, n))
        })
        .collect();
    let total = T::of_usize(target.len());
    let mut best: Option<(usize, usize)> = None;
    for (i, (c, r)) in candidates.iter_mut().zip(counts).enumerate() {
        let (ok, n) = r?;
        c.traversable = ok;
        c.score = T::of_usize(n) / total;
        if ok && best.is_none_or(|(_, bn)| n > bn) {
            best = Some((i, n));
        }
    }
    let (i, _) = best.ok_or(ViewpointError::NoViewpoint)?;
    Ok(ViewpointDecision { best: candidates[i].clone(), candidates, target_points_used: target.len() })
}

/// Best viewpoint for a graph object. Points of the object's own cloud are removed from
/// `scene` before the line-of-sight tests.
pub fn decide_viewpoint<T: Real>(
    target: &ObjectNode<T>,
    scene: &PointCloud<T>,
    grid: &OccupancyGrid<T>,
    params: &VvdParams<T>,
) -> Result<ViewpointDecision<T>, ViewpointError> {
    let points = target.cloud.points();
    if points.is_empty() {
        return Err(ViewpointError::EmptyTarget);
    }
    let occluders = occluders_excluding(scene, points);
    decide_viewpoint_for_cloud(points, &target.position, &occluders, grid, params)
}

/// The traversable cell center closest (on the ground) to `center`, raised to camera
/// height. Lowest cell index wins ties.
pub fn nearest_traversable<T: Real>(
    grid: &OccupancyGrid<T>,
    center: &Point3<T>,
    clearance: T,
    camera_height: T,
) -> Option<Point3<T>> {
    let mut best: Option<(T, Point3<T>)> = None;
    for (cell, _) in grid.cells() {
        let mut p = grid.cell_center(cell);
        p.y = camera_height;
        if !grid.is_traversable(&p, clearance) {
            continue;
        }
        let d = p.ground_distance(center);
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, p));
        }
    }
    best.map(|(_, p)| p)
}
