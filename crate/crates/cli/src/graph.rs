use std::fmt::Write as _;
use std::path::Path;

use msgnav_core::geometry::Point3;
use msgnav_core::reasoning::Vocabulary;
use msgnav_core::scene_graph::{GraphStats, Pose, SceneGraph};
use msgnav_core::sim::{frame_rng, render_frame, NoiseConfig, SensorConfig, SyntheticScene};
use serde::{Deserialize, Serialize};

use crate::error::{read_text, to_pretty, write_text, CliError};

pub const TRAJECTORY_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryPose {
    /// Ground position `[x, z]` in meters.
    pub position: [f64; 2],
    /// Heading in radians about +y, zero along +x.
    pub yaw: f64,
}

/// Recorded camera poses; one frame is rendered per pose.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trajectory {
    pub format_version: u32,
    pub poses: Vec<TrajectoryPose>,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub seed: u64,
}

pub fn replay(scene: &SyntheticScene, trajectory: &Trajectory) -> Result<SceneGraph<f64>, CliError> {
    let sensor = SensorConfig::default();
    let vocab = Vocabulary::scannet200();
    let rooms = |p: &Point3<f64>| Some(scene.room_of(p));
    let mut graph = SceneGraph::default();
    for (i, pose) in trajectory.poses.iter().enumerate() {
        let frame_id = i as u64 + 1;
        let pose = Pose { position: Point3::new(pose.position[0], sensor.camera_height, pose.position[1]), yaw: pose.yaw };
        let mut rng = frame_rng(trajectory.seed, frame_id);
        let obs = render_frame(scene, &pose, frame_id, frame_id as f64, &sensor, &trajectory.noise, &vocab, &mut rng);
        graph.update(&obs, &vocab, &rooms).map_err(|e| CliError::runtime(format!("pose {i}"), e))?;
    }
    Ok(graph)
}

pub fn stats_text(scene: &str, stats: &GraphStats) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scene {scene}: {} frames, {} objects, {} edges, {} edge images", stats.frames, stats.objects, stats.edges, stats.image_refs);
    for (images, edges) in &stats.edge_image_histogram {
        let _ = writeln!(s, "  {edges:>4} edge(s) seen in {images} image(s)");
    }
    s
}

/// Replays `trajectory` in `scene` and writes `graph.json` and `stats.json` to `out`.
pub fn cmd_graph(scene: &Path, trajectory: &Path, out: &Path) -> Result<GraphStats, CliError> {
    let scene = SyntheticScene::load(scene).map_err(|e| CliError::Config(e.to_string()))?;
    let text = read_text(trajectory)?;
    let traj: Trajectory = serde_json::from_str(&text).map_err(|e| CliError::config(trajectory.display(), e))?;
    if traj.format_version != TRAJECTORY_FORMAT_VERSION {
        return Err(CliError::Config(format!("unsupported trajectory format_version {}", traj.format_version)));
    }
    traj.noise.validate().map_err(|e| CliError::config(trajectory.display(), e))?;
    let graph = replay(&scene, &traj)?;
    graph.validate().map_err(|e| CliError::runtime("graph", e))?;
    let stats = graph.stats();
    let mut snapshot = graph.to_json();
    snapshot.push('\n');
    write_text(&out.join("graph.json"), &snapshot)?;
    write_text(&out.join("stats.json"), &to_pretty(&stats))?;
    print!("{}", stats_text(scene.name(), &stats));
    Ok(stats)
}
