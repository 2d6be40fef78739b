//! Occlusion scenes where the spot nearest the target is a poor place to look from.
//!
//! Each template puts a small goal object where the closest traversable cell sees
//! nothing of it: behind the walls of an L-shaped corner, behind the back of a narrow
//! alcove, or beside a table it sits under. Variants rotate and shift the template,
//! relabel the target and draw a start from which the target is in view.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::nav::DistanceField;
use super::render::{object_in_view, SensorConfig};
use super::scene::{BoxSpec, GoalSpec, ObjectSpec, SceneSpec, StartSpec, SyntheticScene, SCENE_FORMAT_VERSION};
use super::SimError;
use crate::geometry::Point3;
use crate::reasoning::Goal;

/// Scene id of the goal object in every template.
pub const TARGET_ID: u64 = 1;

const HALF_EXTENT: f64 = 5.0;
const WALL_HEIGHT: f64 = 2.5;
const TARGET_CATEGORIES: [&str; 8] = ["backpack", "basket", "box", "bucket", "shoe", "bag", "trash can", "suitcase"];
const START_MIN_DISTANCE: f64 = 3.0;
const START_MAX_DISTANCE: f64 = 4.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Template {
    LWall,
    Alcove,
    UnderTable,
}

impl Template {
    pub const ALL: [Template; 3] = [Template::LWall, Template::Alcove, Template::UnderTable];

    pub fn name(self) -> &'static str {
        match self {
            Template::LWall => "l_wall",
            Template::Alcove => "alcove",
            Template::UnderTable => "under_table",
        }
    }
}

fn wall(min: [f64; 3], max: [f64; 3]) -> BoxSpec {
    BoxSpec::new(min, max)
}

fn object(id: u64, category: &str, boxes: Vec<BoxSpec>) -> ObjectSpec {
    ObjectSpec { id, category: category.to_string(), boxes, points: Vec::new(), spacing: Some(0.05) }
}

fn outer_walls() -> Vec<BoxSpec> {
    let (e, t, h) = (HALF_EXTENT, 0.1, WALL_HEIGHT);
    vec![
        wall([-e, 0.0, -e], [e, h, -e + t]),
        wall([-e, 0.0, e - t], [e, h, e]),
        wall([-e, 0.0, -e], [-e + t, h, e]),
        wall([e - t, 0.0, -e], [e, h, e]),
    ]
}

/// Template geometry around the origin with the goal object labelled `category` and a
/// fixed start.
pub fn template_spec(template: Template, category: &str) -> SceneSpec {
    let h = WALL_HEIGHT;
    let (walls, objects, start) = match template {
        Template::LWall => (
            vec![wall([-0.6, 0.0, -2.0], [-0.55, h, 0.6]), wall([-2.0, 0.0, -0.6], [0.6, h, -0.55])],
            vec![
                object(TARGET_ID, category, vec![BoxSpec::new([-0.15, 0.0, -0.15], [0.15, 0.4, 0.15])]),
                object(2, "bench", vec![BoxSpec::new([0.27, 0.0, -0.48], [1.2, 0.2, 1.2])]),
                object(3, "bench", vec![BoxSpec::new([-0.48, 0.0, 0.27], [0.2, 0.2, 1.2])]),
            ],
            [3.1, 2.1],
        ),
        Template::Alcove => (
            vec![
                wall([-0.45, 0.0, -0.5], [-0.35, h, 0.9]),
                wall([0.35, 0.0, -0.5], [0.45, h, 0.9]),
                wall([-0.45, 0.0, -0.5], [0.45, h, -0.4]),
            ],
            vec![object(TARGET_ID, category, vec![BoxSpec::new([-0.15, 0.0, -0.35], [0.15, 0.5, -0.05])])],
            [0.1, 3.6],
        ),
        Template::UnderTable => {
            let mut table = vec![BoxSpec::new([-0.48, 0.75, -0.48], [0.48, 0.8, 0.48])];
            for (x, z) in [(-0.43, -0.43), (0.43, -0.43), (-0.43, 0.43), (0.43, 0.43)] {
                table.push(BoxSpec::new([x - 0.03, 0.0, z - 0.03], [x + 0.03, 0.75, z + 0.03]));
            }
            (
                Vec::new(),
                vec![
                    object(TARGET_ID, category, vec![BoxSpec::new([-0.15, 0.0, -0.15], [0.15, 0.25, 0.15])]),
                    object(2, "table", table),
                ],
                [3.6, 0.1],
            )
        }
    };
    let mut all_walls = outer_walls();
    all_walls.extend(walls);
    SceneSpec {
        format_version: SCENE_FORMAT_VERSION,
        name: template.name().to_string(),
        bounds: [[-HALF_EXTENT, -HALF_EXTENT], [HALF_EXTENT, HALF_EXTENT]],
        cell_size: 0.25,
        sample_spacing: 0.1,
        agent_height: 1.6,
        view_radius: 2.0,
        min_visibility: 0.5,
        clearance: 0.2,
        rooms: Vec::new(),
        walls: all_walls,
        objects,
        start: StartSpec { position: start, yaw: 0.0 },
        goals: vec![GoalSpec { object: TARGET_ID, goal: Goal::category(category).expect("non-empty category") }],
    }
}

fn rotate(p: [f64; 2], quarter_turns: u8) -> [f64; 2] {
    (0..quarter_turns % 4).fold(p, |[x, z], _| [-z, x])
}

fn transform_box(b: &BoxSpec, quarter_turns: u8, shift: [f64; 2]) -> BoxSpec {
    let a = rotate([b.min[0], b.min[2]], quarter_turns);
    let c = rotate([b.max[0], b.max[2]], quarter_turns);
    BoxSpec::new(
        [a[0].min(c[0]) + shift[0], b.min[1], a[1].min(c[1]) + shift[1]],
        [a[0].max(c[0]) + shift[0], b.max[1], a[1].max(c[1]) + shift[1]],
    )
}

/// Rotates the template part of a spec about the origin and shifts it; the outer walls
/// stay put.
pub fn transform_spec(spec: &SceneSpec, quarter_turns: u8, shift: [f64; 2]) -> SceneSpec {
    let outer = outer_walls().len();
    let mut out = spec.clone();
    for w in out.walls.iter_mut().skip(outer) {
        *w = transform_box(w, quarter_turns, shift);
    }
    for o in &mut out.objects {
        for b in &mut o.boxes {
            *b = transform_box(b, quarter_turns, shift);
        }
        for p in &mut o.points {
            let [x, z] = rotate([p[0], p[2]], quarter_turns);
            *p = [x + shift[0], p[1], z + shift[1]];
        }
    }
    let [x, z] = rotate(out.start.position, quarter_turns);
    out.start.position = [x + shift[0], z + shift[1]];
    out.start.yaw += f64::from(quarter_turns % 4) * std::f64::consts::FRAC_PI_2;
    out
}

/// Cell centers from which the target is in view, far enough away and connected to its
/// ground-truth viewpoints, each with the yaw that faces the target.
pub fn start_candidates(scene: &SyntheticScene, target: u64, sensor: &SensorConfig) -> Vec<([f64; 2], f64)> {
    let Some(object) = scene.object(target) else {
        return Vec::new();
    };
    let Some(goal_cells) = scene.success_viewpoints(target).and_then(|v| v.first()).and_then(|p| scene.cell_of(p))
    else {
        return Vec::new();
    };
    let traversable = scene.grid.traversable_mask(scene.spec.clearance);
    let reach = DistanceField::new(&scene.grid, &traversable, goal_cells);
    let mut out = Vec::new();
    for (cell, _) in scene.grid.cells() {
        let i = scene.grid.index(cell);
        if !traversable[i] || !reach.distances()[i].is_finite() {
            continue;
        }
        let c = scene.grid.cell_center(cell);
        let dist = c.ground_distance(&object.centroid);
        if !(START_MIN_DISTANCE..=START_MAX_DISTANCE).contains(&dist) {
            continue;
        }
        let yaw = (object.centroid.z - c.z).atan2(object.centroid.x - c.x);
        let eye = Point3::new(c.x, sensor.camera_height, c.z);
        if object_in_view(scene, object, &eye, yaw, sensor) {
            out.push(([c.x, c.z], yaw));
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct SuiteScene {
    pub template: Template,
    pub variant: usize,
    pub scene: SyntheticScene,
}

/// `variants` seeded variants of every template. Variant 0 of each template is the
/// untransformed template with its fixed start.
pub fn last_mile_suite(variants: usize, seed: u64) -> Result<Vec<SuiteScene>, SimError> {
    let sensor = SensorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(variants * Template::ALL.len());
    for template in Template::ALL {
        for variant in 0..variants {
            let category = if variant == 0 { TARGET_CATEGORIES[0] } else { *TARGET_CATEGORIES.choose(&mut rng).expect("non-empty") };
            let base = template_spec(template, category);
            let mut spec = if variant == 0 {
                base
            } else {
                let turns = rng.random_range(0..4u8);
                let shift = [rng.random_range(-20..=20) as f64 * 0.05, rng.random_range(-20..=20) as f64 * 0.05];
                transform_spec(&base, turns, shift)
            };
            spec.name = format!("{}_{variant:02}", template.name());
            let mut scene = SyntheticScene::from_spec(spec)?;
            if variant > 0 {
                let starts = start_candidates(&scene, TARGET_ID, &sensor);
                let &(position, yaw) = starts
                    .choose(&mut rng)
                    .ok_or_else(|| SimError::Scene(format!("{} has no usable start", scene.name())))?;
                scene.spec.start = StartSpec { position, yaw };
            }
            out.push(SuiteScene { template, variant, scene });
        }
    }
    Ok(out)
}
