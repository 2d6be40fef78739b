use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::geometry::{box_surface_points, Cell, CellState, OccupancyGrid, Point3, PointCloud};
use crate::reasoning::{fold_term, Goal};
use crate::scene_graph::{BBox, UNKNOWN_ROOM};
use crate::viewpoint::{subsample_target, visibility_score};

use super::SimError;

/// Scene file format written and read by this module.
pub const SCENE_FORMAT_VERSION: u32 = 1;

/// Points of a goal object used when scoring ground-truth viewpoints.
const SUCCESS_VISIBILITY_SAMPLES: usize = 48;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl BoxSpec {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        Self { min, max }
    }

    fn lo(&self) -> Point3<f64> {
        Point3::new(self.min[0], self.min[1], self.min[2]).min_components(&self.hi_raw())
    }

    fn hi_raw(&self) -> Point3<f64> {
        Point3::new(self.max[0], self.max[1], self.max[2])
    }

    fn hi(&self) -> Point3<f64> {
        self.hi_raw().max_components(&Point3::new(self.min[0], self.min[1], self.min[2]))
    }

    fn valid(&self) -> bool {
        self.min.iter().chain(&self.max).all(|v| v.is_finite())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomSpec {
    pub name: String,
    pub min: [f64; 2],
    pub max: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub id: u64,
    pub category: String,
    /// Parametric shape: surfaces of these boxes are sampled at load.
    #[serde(default)]
    pub boxes: Vec<BoxSpec>,
    /// Explicit points, used as-is.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartSpec {
    /// Ground position (x, z).
    pub position: [f64; 2],
    #[serde(default)]
    pub yaw: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalSpec {
    /// Scene object the goal resolves to.
    pub object: u64,
    pub goal: Goal,
}

/// On-disk scene description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub format_version: u32,
    pub name: String,
    /// Ground rectangle (x, z) covered by the occupancy grid.
    pub bounds: [[f64; 2]; 2],
    #[serde(default = "default_cell")]
    pub cell_size: f64,
    #[serde(default = "default_spacing")]
    pub sample_spacing: f64,
    /// Boxes whose bottom is below this height block the ground under them.
    #[serde(default = "default_agent_height")]
    pub agent_height: f64,
    /// Ground-truth viewpoints lie within this distance of the object's footprint.
    #[serde(default = "default_view_radius")]
    pub view_radius: f64,
    /// Minimum visible fraction of a goal object from a ground-truth viewpoint.
    #[serde(default = "default_min_visibility")]
    pub min_visibility: f64,
    /// Robot clearance radius for ground-truth viewpoints and navigation.
    #[serde(default = "default_clearance")]
    pub clearance: f64,
    #[serde(default)]
    pub rooms: Vec<RoomSpec>,
    #[serde(default)]
    pub walls: Vec<BoxSpec>,
    pub objects: Vec<ObjectSpec>,
    pub start: StartSpec,
    #[serde(default)]
    pub goals: Vec<GoalSpec>,
}

fn default_cell() -> f64 {
    0.25
}

fn default_spacing() -> f64 {
    0.1
}

fn default_agent_height() -> f64 {
    1.6
}

fn default_view_radius() -> f64 {
    2.0
}

fn default_min_visibility() -> f64 {
    0.5
}

fn default_clearance() -> f64 {
    0.2
}

/// A ground-truth object with its sampled cloud.
#[derive(Clone, Debug)]
pub struct SceneObject {
    pub id: u64,
    pub category: String,
    pub cloud: PointCloud<f64>,
    pub centroid: Point3<f64>,
    pub bbox: BBox<f64>,
    /// Ground rectangles (min x, min z, max x, max z) of the object's boxes.
    pub footprint: Vec<[f64; 4]>,
    pub room: String,
}

impl SceneObject {
    /// Ground distance from `p` to the nearest footprint rectangle, or to the cloud's
    /// bounding rectangle for point-only objects.
    pub fn footprint_distance(&self, p: &Point3<f64>) -> f64 {
        let rect_dist = |r: &[f64; 4]| {
            let dx = (r[0] - p.x).max(p.x - r[2]).max(0.0);
            let dz = (r[1] - p.z).max(p.z - r[3]).max(0.0);
            dx.hypot(dz)
        };
        if self.footprint.is_empty() {
            rect_dist(&[self.bbox.min.x, self.bbox.min.z, self.bbox.max.x, self.bbox.max.z])
        } else {
            self.footprint.iter().map(rect_dist).fold(f64::INFINITY, f64::min)
        }
    }
}

/// A loaded scene: clouds, ground-truth occupancy and ground-truth viewpoints.
#[derive(Clone, Debug)]
pub struct SyntheticScene {
    pub spec: SceneSpec,
    pub objects: Vec<SceneObject>,
    pub walls: PointCloud<f64>,
    /// Walls plus every object.
    pub all_points: PointCloud<f64>,
    pub grid: OccupancyGrid<f64>,
    success: BTreeMap<u64, Vec<Point3<f64>>>,
    occluders: Vec<OnceLock<PointCloud<f64>>>,
}

impl SyntheticScene {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let spec: SceneSpec = serde_json::from_str(text).map_err(|e| SimError::Scene(e.to_string()))?;
        Self::from_spec(spec)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Scene(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Samples clouds, rasterizes the grid and computes ground-truth viewpoints for every
    /// goal object.
    pub fn from_spec(spec: SceneSpec) -> Result<Self, SimError> {
        let bad = |m: String| Err(SimError::Scene(m));
        if spec.format_version != SCENE_FORMAT_VERSION {
            return bad(format!("unsupported scene format version {}", spec.format_version));
        }
        let [[x0, z0], [x1, z1]] = spec.bounds;
        if !(x1 > x0 && z1 > z0) || !(spec.cell_size > 0.0) || !(spec.sample_spacing > 0.0) {
            return bad("bounds, cell size and sample spacing must be positive".into());
        }
        let width = ((x1 - x0) / spec.cell_size).ceil() as usize;
        let depth = ((z1 - z0) / spec.cell_size).ceil() as usize;
        let mut grid = OccupancyGrid::new(Point3::new(x0, 0.0, z0), spec.cell_size, width, depth, CellState::Free)
            .map_err(|e| SimError::Scene(e.to_string()))?;

        let block = |b: &BoxSpec, grid: &mut OccupancyGrid<f64>| {
            let (lo, hi) = (b.lo(), b.hi());
            if lo.y < spec.agent_height {
                grid.fill_rect((lo.x, lo.z), (hi.x, hi.z), CellState::Occupied);
            }
        };

        let mut wall_points = Vec::new();
        for w in &spec.walls {
            if !w.valid() {
                return bad("non-finite wall box".into());
            }
            wall_points.extend(box_surface_points(w.lo(), w.hi(), spec.sample_spacing));
            block(w, &mut grid);
        }
        let walls = PointCloud::new(wall_points);

        let rooms = spec.rooms.clone();
        let mut objects = Vec::with_capacity(spec.objects.len());
        let mut seen = std::collections::BTreeSet::new();
        for o in &spec.objects {
            if !seen.insert(o.id) {
                return bad(format!("duplicate object id {}", o.id));
            }
            if fold_term(&o.category).is_empty() {
                return bad(format!("object {} has no category", o.id));
            }
            let spacing = o.spacing.unwrap_or(spec.sample_spacing);
            if !(spacing > 0.0) {
                return bad(format!("object {} has a non-positive spacing", o.id));
            }
            let mut pts: Vec<Point3<f64>> = o.points.iter().map(|p| Point3::new(p[0], p[1], p[2])).collect();
            let mut footprint = Vec::new();
            for b in &o.boxes {
                if !b.valid() {
                    return bad(format!("object {} has a non-finite box", o.id));
                }
                pts.extend(box_surface_points(b.lo(), b.hi(), spacing));
                block(b, &mut grid);
                let (lo, hi) = (b.lo(), b.hi());
                footprint.push([lo.x, lo.z, hi.x, hi.z]);
            }
            if pts.is_empty() || pts.iter().any(|p| !p.is_finite()) {
                return bad(format!("object {} has no usable points", o.id));
            }
            let bbox = BBox::from_points(&pts).expect("non-empty");
            let cloud = PointCloud::new(pts);
            let centroid = cloud.centroid().expect("non-empty");
            let room = room_at(&rooms, &centroid);
            objects.push(SceneObject {
                id: o.id,
                category: fold_term(&o.category),
                cloud,
                centroid,
                bbox,
                footprint,
                room,
            });
        }

        let mut all = walls.points().to_vec();
        for o in &objects {
            all.extend_from_slice(o.cloud.points());
        }
        let all_points = PointCloud::new(all);

        let occluders = objects.iter().map(|_| OnceLock::new()).collect();
        let mut scene = Self { spec, objects, walls, all_points, grid, success: BTreeMap::new(), occluders };
        let start = scene.start_position();
        if !scene.grid.is_traversable(&start, 0.0) {
            return bad("start position is not on a free cell".into());
        }
        let goal_objects: Vec<u64> = scene.spec.goals.iter().map(|g| g.object).collect();
        for id in goal_objects {
            if scene.object(id).is_none() {
                return bad(format!("goal refers to unknown object {id}"));
            }
            scene.ensure_success_viewpoints(id)?;
        }
        Ok(scene)
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn object(&self, id: u64) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn goals(&self) -> &[GoalSpec] {
        &self.spec.goals
    }

    /// Room containing the ground projection of `p`.
    pub fn room_of(&self, p: &Point3<f64>) -> String {
        room_at(&self.spec.rooms, p)
    }

    /// Start cell center at floor height.
    pub fn start_position(&self) -> Point3<f64> {
        let [x, z] = self.spec.start.position;
        match self.grid.cell_of(&Point3::new(x, 0.0, z)) {
            Some(c) => self.grid.cell_center(c),
            None => Point3::new(x, 0.0, z),
        }
    }

    /// Walls and all objects except the one with scene id `id`; cached per object.
    pub fn occluders_without(&self, id: u64) -> &PointCloud<f64> {
        let Some(i) = self.objects.iter().position(|o| o.id == id) else {
            return &self.all_points;
        };
        self.occluders[i].get_or_init(|| {
            let mut pts = self.walls.points().to_vec();
            for o in self.objects.iter().filter(|o| o.id != id) {
                pts.extend_from_slice(o.cloud.points());
            }
            PointCloud::new(pts)
        })
    }

    /// Ground-truth viewpoints of object `id` (cell centers at floor height), computed on
    /// first use.
    pub fn ensure_success_viewpoints(&mut self, id: u64) -> Result<&[Point3<f64>], SimError> {
        if !self.success.contains_key(&id) {
            let vps = self.compute_success_viewpoints(id)?;
            if vps.is_empty() {
                return Err(SimError::Scene(format!("object {id} has no ground-truth viewpoint")));
            }
            self.success.insert(id, vps);
        }
        Ok(&self.success[&id])
    }

    pub fn success_viewpoints(&self, id: u64) -> Option<&[Point3<f64>]> {
        self.success.get(&id).map(Vec::as_slice)
    }

    /// Exhaustive scan: free cells within the view radius of the object footprint from
    /// which, at camera height, enough of the object is in clear line of sight.
    pub fn compute_success_viewpoints(&self, id: u64) -> Result<Vec<Point3<f64>>, SimError> {
        let clearance = self.spec.clearance;
        let object = self.object(id).ok_or_else(|| SimError::Scene(format!("unknown object {id}")))?;
        let occluders = self.occluders_without(id);
        let target = subsample_target(object.cloud.points(), SUCCESS_VISIBILITY_SAMPLES, id);
        let camera_height = crate::viewpoint::VvdParams::<f64>::default().camera_height;
        let tau = crate::viewpoint::VvdParams::<f64>::default().obstruction_distance;
        let mut out = Vec::new();
        for (cell, state) in self.grid.cells() {
            if state != CellState::Free {
                continue;
            }
            let center = self.grid.cell_center(cell);
            if object.footprint_distance(&center) > self.spec.view_radius || !self.grid.is_traversable(&center, clearance) {
                continue;
            }
            let eye = Point3::new(center.x, camera_height, center.z);
            let score = visibility_score(&eye, &target, occluders, tau, tau / 2.0)
                .map_err(|e| SimError::Scene(e.to_string()))?;
            if score >= self.spec.min_visibility {
                out.push(center);
            }
        }
        Ok(out)
    }

    /// Ground distance from `p` to the nearest ground-truth viewpoint of `id`.
    pub fn distance_to_success(&self, id: u64, p: &Point3<f64>) -> Option<f64> {
        self.success.get(&id)?.iter().map(|v| v.ground_distance(p)).min_by(f64::total_cmp)
    }

    pub fn cell_of(&self, p: &Point3<f64>) -> Option<Cell> {
        self.grid.cell_of(p)
    }
}

fn room_at(rooms: &[RoomSpec], p: &Point3<f64>) -> String {
    rooms
        .iter()
        .find(|r| p.x >= r.min[0] && p.x <= r.max[0] && p.z >= r.min[1] && p.z <= r.max[1])
        .map_or_else(|| UNKNOWN_ROOM.to_string(), |r| r.name.clone())
}
