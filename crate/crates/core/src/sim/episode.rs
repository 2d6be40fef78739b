use log::debug;
use serde::{Deserialize, Serialize};

use super::frontier::{extract_frontiers, Frontier};
use super::nav::DistanceField;
use super::render::{frame_rng, object_in_view, render_frame, NoiseConfig, SensorConfig};
use super::scene::SyntheticScene;
use super::SimError;
use crate::geometry::{segment_clear, Cell, CellState, Point3, PointCloud};
use crate::key_subgraph::{
    assemble_key_prompt, compress, estimate_tokens, focus, full_graph_payload, greedy_prune, DEFAULT_FOCUS_K,
};
use crate::reasoning::{
    apply_response, assemble_query, Choice, DecisionMemory, FrontierPayload, Goal, GoalKind, GoalPayload, Outcome,
    Reasoner, ReasonerResponse, Vocabulary, DEFAULT_MEMORY_WINDOW,
};
use crate::scene_graph::{GraphConfig, ImageRef, ObjectId, Pose, SceneGraph};
use crate::viewpoint::{decide_viewpoint, VvdParams};

/// Transcript format written by the episode loop.
pub const TRANSCRIPT_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpisodeParams {
    /// Decision steps per goal.
    pub max_steps: u32,
    /// Success threshold: distance to the nearest ground-truth viewpoint (meters).
    pub success_distance: f64,
    /// Path length the agent may travel between decisions (meters).
    pub step_length: f64,
    pub focus_k: usize,
    pub memory_window: usize,
    pub use_vvd: bool,
    pub vvd: VvdParams<f64>,
    pub graph: GraphConfig<f64>,
    pub sensor: SensorConfig,
    pub noise: NoiseConfig,
    /// Frames rendered per step, evenly spread in heading.
    pub headings: u32,
    pub min_frontier_cluster: usize,
    /// Objects this close to a frontier appear in its snapshot.
    pub snapshot_range: f64,
    /// Stop as soon as the agent is within the success distance of a ground-truth viewpoint.
    pub oracle_stop: bool,
    pub seed: u64,
}

impl Default for EpisodeParams {
    fn default() -> Self {
        Self {
            max_steps: 50,
            success_distance: 0.25,
            step_length: 2.0,
            focus_k: DEFAULT_FOCUS_K,
            memory_window: DEFAULT_MEMORY_WINDOW,
            use_vvd: true,
            vvd: VvdParams::default(),
            graph: GraphConfig::default(),
            sensor: SensorConfig::default(),
            noise: NoiseConfig::default(),
            headings: 4,
            min_frontier_cluster: 3,
            snapshot_range: 3.0,
            oracle_stop: false,
            seed: 0,
        }
    }
}

impl EpisodeParams {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidParams(m.to_string()));
        if self.max_steps == 0 || self.headings == 0 || self.focus_k == 0 {
            return bad("max_steps, headings and focus_k must be positive");
        }
        if !(self.success_distance >= 0.0) || !(self.step_length > 0.0) || !(self.snapshot_range >= 0.0) {
            return bad("distances must be non-negative and step_length positive");
        }
        self.vvd.validate().map_err(|e| SimError::InvalidParams(e.to_string()))?;
        self.graph.validate().map_err(|e| SimError::InvalidParams(e.to_string()))?;
        self.noise.validate().map_err(|e| SimError::InvalidParams(e.to_string()))?;
        if self.sensor.embedding_dim != self.graph.embedding_dim {
            return bad("sensor and graph embedding dimensions differ");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub scene: String,
    pub goal_index: usize,
    pub goal_kind: GoalKind,
    pub target_object: u64,
    pub success: bool,
    /// Shortest path from the start to any cell within the success distance of a
    /// ground-truth viewpoint (meters).
    pub shortest_path: f64,
    pub agent_path: f64,
    pub steps: u32,
    pub stopped: bool,
    pub stop_position: [f64; 3],
    pub distance_to_success: Option<f64>,
    pub spl: f64,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameSummary {
    pub image: ImageRef,
    pub categories: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewpointRecord {
    pub score: f64,
    pub ring_index: usize,
    pub angle_index: usize,
    /// True when no ring candidate was usable and the nearest reachable spot was used.
    pub fallback: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u32,
    pub position: [f64; 3],
    pub heading: f64,
    pub frames: Vec<FrameSummary>,
    pub objects: usize,
    pub edges: usize,
    pub related: Vec<ObjectId>,
    pub focus_fallback: bool,
    pub key_images: usize,
    pub key_tokens: usize,
    pub full_tokens: usize,
    pub request_hash: String,
    pub response: ReasonerResponse,
    pub new_terms: Vec<String>,
    pub destination: Option<[f64; 3]>,
    pub viewpoint: Option<ViewpointRecord>,
    pub moved: f64,
    pub stopped: bool,
}

/// Replayable record of one goal episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTranscript {
    pub format_version: u32,
    pub scene: String,
    pub goal_index: usize,
    pub goal: Goal,
    pub target_object: u64,
    pub params: EpisodeParams,
    pub steps: Vec<StepRecord>,
    pub result: EpisodeResult,
}

#[derive(Clone, Debug)]
pub struct EpisodeOutput {
    pub result: EpisodeResult,
    pub transcript: EpisodeTranscript,
}

/// Agent state that persists across consecutive goals in one scene.
pub struct Agent<'s> {
    scene: &'s SyntheticScene,
    params: EpisodeParams,
    graph: SceneGraph<f64>,
    vocab: Vocabulary,
    memory: DecisionMemory,
    explored: Vec<bool>,
    traversable: Vec<bool>,
    position: Point3<f64>,
    heading: f64,
    next_frame: u64,
    decisions: u32,
}

fn arr(p: &Point3<f64>) -> [f64; 3] {
    [p.x, p.y, p.z]
}

impl<'s> Agent<'s> {
    pub fn new(scene: &'s SyntheticScene, params: EpisodeParams, vocab: Vocabulary) -> Result<Self, SimError> {
        params.validate()?;
        let graph = SceneGraph::new(params.graph.clone())?;
        let traversable = scene.grid.traversable_mask(scene.spec.clearance);
        let position = scene.start_position();
        let start = scene.grid.cell_of(&position).ok_or(SimError::OutOfBounds)?;
        if !traversable[scene.grid.index(start)] {
            return Err(SimError::NotTraversable);
        }
        Ok(Self {
            scene,
            heading: scene.spec.start.yaw,
            params,
            graph,
            vocab,
            memory: DecisionMemory::new(),
            explored: vec![false; scene.grid.len()],
            traversable,
            position,
            next_frame: 1,
            decisions: 0,
        })
    }

    pub fn graph(&self) -> &SceneGraph<f64> {
        &self.graph
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn memory(&self) -> &DecisionMemory {
        &self.memory
    }

    pub fn position(&self) -> Point3<f64> {
        self.position
    }

    fn cell(&self) -> Cell {
        self.scene.grid.cell_of(&self.position).expect("agent stays on the grid")
    }

    /// Renders every heading at the current position and folds the frames into the graph.
    fn perceive(&mut self) -> Result<Vec<FrameSummary>, SimError> {
        let scene = self.scene;
        let rooms = |p: &Point3<f64>| Some(scene.room_of(p));
        let mut out = Vec::new();
        for k in 0..self.params.headings {
            let yaw = self.heading + std::f64::consts::TAU * k as f64 / self.params.headings as f64;
            let frame_id = self.next_frame;
            self.next_frame += 1;
            let pose = Pose { position: self.position, yaw };
            let mut rng = frame_rng(self.params.seed, frame_id);
            let obs = render_frame(
                scene,
                &pose,
                frame_id,
                frame_id as f64,
                &self.params.sensor,
                &self.params.noise,
                &self.vocab,
                &mut rng,
            );
            self.graph.update(&obs, &self.vocab, &rooms)?;
            out.push(FrameSummary {
                image: obs.image_ref,
                categories: obs.detections.iter().map(|d| d.category.clone()).collect(),
            });
        }
        self.explore();
        Ok(out)
    }

    /// Marks every in-range cell with grid line of sight from the agent as explored.
    fn explore(&mut self) {
        let grid = &self.scene.grid;
        let range = self.params.sensor.range;
        let here = self.position;
        let step = grid.cell_size() / 2.0;
        for (cell, _) in grid.cells() {
            let c = grid.cell_center(cell);
            let dist = c.ground_distance(&here);
            if dist > range {
                continue;
            }
            let n = (dist / step).ceil() as usize;
            let mut visible = true;
            for i in 1..n {
                let t = i as f64 / n as f64;
                let q = Point3::new(here.x + (c.x - here.x) * t, 0.0, here.z + (c.z - here.z) * t);
                match grid.cell_of(&q) {
                    Some(qc) if qc == cell => break,
                    Some(qc) if grid.get(qc) == CellState::Occupied => {
                        visible = false;
                        break;
                    }
                    _ => {}
                }
            }
            if visible {
                self.explored[grid.index(cell)] = true;
            }
        }
    }

    fn frontiers(&self) -> Vec<Frontier> {
        let mut fs = extract_frontiers(&self.scene.grid, &self.explored, self.params.min_frontier_cluster);
        let h = self.params.sensor.camera_height;
        let tau = self.params.vvd.obstruction_distance;
        for f in &mut fs {
            let eye = Point3::new(f.representative.x, h, f.representative.z);
            for o in &self.scene.objects {
                if o.centroid.ground_distance(&eye) <= self.params.snapshot_range
                    && segment_clear(&eye, &o.centroid, &self.scene.walls, tau, tau / 2.0).unwrap_or(false)
                {
                    *f.snapshot.categories.entry(o.category.clone()).or_insert(0) += 1;
                }
            }
            f.snapshot.room = self.scene.room_of(&f.representative);
        }
        fs
    }

    /// Reachable cell whose center is closest (on the ground) to `desired`.
    fn nearest_reachable(&self, field: &DistanceField, desired: &Point3<f64>) -> Option<Cell> {
        let grid = &self.scene.grid;
        let dist = field.distances();
        (0..grid.len())
            .filter(|i| dist[*i].is_finite())
            .map(|i| {
                let c = grid.cell_at_index(i);
                (grid.cell_center(c).ground_distance(desired), dist[i], i, c)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)))
            .map(|(_, _, _, c)| c)
    }

    /// Follows the shortest path toward `dest` for at most one step length, halting early
    /// on a cell where `halt` holds.
    fn travel(&mut self, field: &DistanceField, dest: Cell, halt: impl Fn(&Point3<f64>) -> bool) -> (f64, bool) {
        let grid = &self.scene.grid;
        let Some(path) = field.path_to(dest) else {
            return (0.0, false);
        };
        let mut moved = 0.0;
        if halt(&self.position) {
            return (moved, true);
        }
        for w in path.windows(2) {
            let (a, b) = (grid.cell_center(w[0]), grid.cell_center(w[1]));
            let seg = a.ground_distance(&b);
            if moved + seg > self.params.step_length + 1e-9 {
                break;
            }
            moved += seg;
            self.heading = (b.z - a.z).atan2(b.x - a.x);
            self.position = b;
            if halt(&b) {
                return (moved, true);
            }
        }
        (moved, false)
    }

    /// Walls plus the clouds of every graph object except `target`.
    fn occluders_for(&self, target: ObjectId) -> PointCloud<f64> {
        let mut pts = self.scene.walls.points().to_vec();
        for (id, o) in self.graph.objects() {
            if *id != target {
                pts.extend_from_slice(o.cloud.points());
            }
        }
        PointCloud::new(pts)
    }

    /// Categories seen from the target's first ground-truth viewpoint, target first.
    fn image_summary(&self, target: u64) -> Vec<String> {
        let scene = self.scene;
        let Some(object) = scene.object(target) else {
            return Vec::new();
        };
        let Some(vp) = scene.success_viewpoints(target).and_then(|v| v.first()) else {
            return vec![object.category.clone()];
        };
        let eye = Point3::new(vp.x, self.params.sensor.camera_height, vp.z);
        let yaw = (object.centroid.z - eye.z).atan2(object.centroid.x - eye.x);
        let mut others: Vec<String> = scene
            .objects
            .iter()
            .filter(|o| o.id != target && object_in_view(scene, o, &eye, yaw, &self.params.sensor))
            .map(|o| o.category.clone())
            .filter(|c| *c != object.category)
            .collect();
        others.sort();
        others.dedup();
        let mut out = vec![object.category.clone()];
        out.extend(others);
        out
    }

    /// Path length from the current position to the nearest cell within `d` of a
    /// ground-truth viewpoint of `target`.
    fn shortest_to_success(&self, target: u64, d: f64) -> Result<f64, SimError> {
        let grid = &self.scene.grid;
        let vps = self.scene.success_viewpoints(target).ok_or(SimError::Disconnected)?;
        let field = DistanceField::new(grid, &self.traversable, self.cell());
        (0..grid.len())
            .filter(|i| field.distances()[*i].is_finite())
            .filter(|i| {
                let c = grid.cell_center(grid.cell_at_index(*i));
                vps.iter().any(|v| within(v.ground_distance(&c), d))
            })
            .map(|i| field.distances()[i])
            .min_by(f64::total_cmp)
            .ok_or(SimError::Disconnected)
    }

    /// Runs one goal of the scene until stop or the step budget.
    pub fn run_goal(&mut self, goal_index: usize, reasoner: &mut dyn Reasoner) -> Result<EpisodeOutput, SimError> {
        let spec = self.scene.goals().get(goal_index).ok_or(SimError::UnknownGoal(goal_index))?.clone();
        let target = spec.object;
        if self.scene.success_viewpoints(target).is_none() {
            return Err(SimError::Scene(format!("no ground-truth viewpoints for object {target}")));
        }
        let goal = GoalPayload {
            image_summary: if spec.goal.kind() == GoalKind::Image { self.image_summary(target) } else { Vec::new() },
            goal: spec.goal.clone(),
        };
        let d = self.params.success_distance;
        let shortest = self.shortest_to_success(target, d)?;
        let mut steps = Vec::new();
        let mut agent_path = 0.0;
        let mut stopped = false;
        let mut failure = None;
        let mut used = 0;

        for _ in 0..self.params.max_steps {
            used += 1;
            self.decisions += 1;
            let t = self.decisions;
            let position = arr(&self.position);
            let heading = self.heading;
            let frames = self.perceive()?;

            let compact = compress(&self.graph);
            let focused = match focus(&compact, &goal, reasoner, self.params.focus_k, t) {
                Ok(f) => f,
                Err(e) => {
                    failure = Some(format!("reasoner error: {e}"));
                    break;
                }
            };
            let key = greedy_prune(&self.graph, &focused.related)?;
            let payload = assemble_key_prompt(&key, &self.graph)?;
            let key_tokens = estimate_tokens(&serde_json::to_string(&payload).expect("serializes"));
            let full_tokens =
                estimate_tokens(&serde_json::to_string(&full_graph_payload(&self.graph)).expect("serializes"));
            let frontiers = self.frontiers();
            let frontier_payload: Vec<FrontierPayload> = frontiers
                .iter()
                .map(|f| FrontierPayload {
                    id: f.id,
                    position: arr(&f.representative),
                    room: f.snapshot.room.clone(),
                    categories: f.snapshot.categories.clone(),
                })
                .collect();
            let request = assemble_query(&payload, &self.memory, &frontier_payload, &goal, t, self.params.memory_window);
            let response = match reasoner.decide(&request) {
                Ok(r) => r,
                Err(e) => {
                    failure = Some(format!("reasoner error: {e}"));
                    break;
                }
            };
            let applied = apply_response(&response, &mut self.vocab, &mut self.memory, t)?;

            let mut viewpoint = None;
            let desired = match response.choice {
                Choice::Target(id) => self.graph.object(id).map(|node| {
                    if !self.params.use_vvd {
                        return node.position;
                    }
                    let mut vvd = self.params.vvd.clone();
                    vvd.seed = self.params.seed ^ u64::from(t);
                    match decide_viewpoint(node, &self.occluders_for(id), &self.scene.grid, &vvd) {
                        Ok(dec) => {
                            viewpoint = Some(ViewpointRecord {
                                score: dec.best.score,
                                ring_index: dec.best.ring_index,
                                angle_index: dec.best.angle_index,
                                fallback: false,
                            });
                            dec.best.position
                        }
                        Err(e) => {
                            debug!("viewpoint decision failed ({e}); using nearest reachable spot");
                            viewpoint =
                                Some(ViewpointRecord { score: 0.0, ring_index: 0, angle_index: 0, fallback: true });
                            node.position
                        }
                    }
                }),
                Choice::Frontier(fid) => frontiers.iter().find(|f| f.id == fid).map(|f| f.representative),
            };

            let field = DistanceField::new(&self.scene.grid, &self.traversable, self.cell());
            let dest = desired.and_then(|p| self.nearest_reachable(&field, &p));
            let mut moved = 0.0;
            let scene = self.scene;
            let oracle = self.params.oracle_stop;
            let halt = |p: &Point3<f64>| oracle && scene.distance_to_success(target, p).is_some_and(|x| within(x, d));
            match dest {
                None => self.memory.annotate(t, Outcome::Refuted)?,
                Some(cell) => {
                    let (m, halted) = self.travel(&field, cell, halt);
                    moved = m;
                    agent_path += moved;
                    stopped = halted;
                    if self.cell() == cell {
                        self.memory.annotate(t, Outcome::Confirmed)?;
                        stopped |= matches!(response.choice, Choice::Target(_));
                    }
                }
            }

            steps.push(StepRecord {
                step: t,
                position,
                heading,
                frames,
                objects: self.graph.object_count(),
                edges: self.graph.edge_count(),
                related: focused.related.iter().copied().collect(),
                focus_fallback: focused.fallback,
                key_images: payload.image_count(),
                key_tokens,
                full_tokens,
                request_hash: request.hash(),
                response,
                new_terms: applied.new_terms,
                destination: dest.map(|c| arr(&self.scene.grid.cell_center(c))),
                viewpoint,
                moved,
                stopped,
            });
            if stopped {
                break;
            }
        }

        let distance = self.scene.distance_to_success(target, &self.position);
        let success = failure.is_none() && distance.is_some_and(|x| within(x, d));
        let result = EpisodeResult {
            scene: self.scene.name().to_string(),
            goal_index,
            goal_kind: spec.goal.kind(),
            target_object: target,
            success,
            shortest_path: shortest,
            agent_path,
            steps: used,
            stopped,
            stop_position: arr(&self.position),
            distance_to_success: distance,
            spl: super::metrics::spl_term(success, shortest, agent_path),
            failure,
        };
        let transcript = EpisodeTranscript {
            format_version: TRANSCRIPT_FORMAT_VERSION,
            scene: self.scene.name().to_string(),
            goal_index,
            goal: spec.goal,
            target_object: target,
            params: self.params.clone(),
            steps,
            result: result.clone(),
        };
        Ok(EpisodeOutput { result, transcript })
    }
}

/// Distance test shared by live success checks and post-hoc thresholds.
pub fn within(distance: f64, d: f64) -> bool {
    distance <= d + 1e-9
}

/// One goal from a fresh agent.
pub fn run_episode(
    scene: &SyntheticScene,
    goal_index: usize,
    reasoner: &mut dyn Reasoner,
    params: &EpisodeParams,
) -> Result<EpisodeOutput, SimError> {
    let mut agent = Agent::new(scene, params.clone(), Vocabulary::scannet200())?;
    agent.run_goal(goal_index, reasoner)
}

/// Every scene goal in order with one agent, keeping its graph, vocabulary and memory.
pub fn run_lifelong(
    scene: &SyntheticScene,
    reasoner: &mut dyn Reasoner,
    params: &EpisodeParams,
) -> Result<Vec<EpisodeOutput>, SimError> {
    let mut agent = Agent::new(scene, params.clone(), Vocabulary::scannet200())?;
    (0..scene.goals().len()).map(|i| agent.run_goal(i, reasoner)).collect()
}
