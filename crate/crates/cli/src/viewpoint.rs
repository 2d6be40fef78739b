use std::fmt::Write as _;
use std::path::Path;

use msgnav_core::sim::SyntheticScene;
use msgnav_core::viewpoint::{decide_viewpoint_for_cloud, ViewpointDecision, ViewpointError, VvdParams};
use serde::Serialize;

use crate::error::{read_text, to_pretty, write_text, CliError};

#[derive(Debug, Serialize)]
pub struct CandidateRow {
    pub ring_index: usize,
    pub angle_index: usize,
    pub ring_radius: f64,
    pub x: f64,
    pub z: f64,
    pub score: f64,
    pub traversable: bool,
    pub best: bool,
    pub distance_to_target: f64,
    /// Ground distance to the nearest ground-truth viewpoint of the target.
    pub distance_to_success: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct ViewpointReport {
    pub scene: String,
    pub target: u64,
    pub category: String,
    pub target_points_used: usize,
    pub params: VvdParams<f64>,
    pub candidates: Vec<CandidateRow>,
}

fn rows(scene: &SyntheticScene, target: u64, center: [f64; 2], d: &ViewpointDecision<f64>) -> Vec<CandidateRow> {
    d.candidates
        .iter()
        .map(|c| CandidateRow {
            ring_index: c.ring_index,
            angle_index: c.angle_index,
            ring_radius: c.ring_radius,
            x: c.position.x,
            z: c.position.z,
            score: c.score,
            traversable: c.traversable,
            best: c.ring_index == d.best.ring_index && c.angle_index == d.best.angle_index,
            distance_to_target: (c.position.x - center[0]).hypot(c.position.z - center[1]),
            distance_to_success: scene.distance_to_success(target, &c.position),
        })
        .collect()
}

pub fn table_text(report: &ViewpointReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scene {}  target {} ({})  {} target points", report.scene, report.target, report.category, report.target_points_used);
    let _ = writeln!(s, "{:>4} {:>5} {:>8} {:>8} {:>6} {:>5}", "ring", "angle", "x", "z", "score", "trav");
    for r in &report.candidates {
        let _ = writeln!(
            s,
            "{:>4} {:>5} {:>8.3} {:>8.3} {:>6.3} {:>5}{}",
            r.ring_index,
            r.angle_index,
            r.x,
            r.z,
            r.score,
            if r.traversable { "yes" } else { "no" },
            if r.best { "  <- best" } else { "" }
        );
    }
    s
}

fn plot_csv(report: &ViewpointReport) -> String {
    let mut s = String::from("ring_index,angle_index,ring_radius,x,z,score,traversable,best,distance_to_target,distance_to_success\n");
    for r in &report.candidates {
        let dsv = r.distance_to_success.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.ring_index, r.angle_index, r.ring_radius, r.x, r.z, r.score, r.traversable, r.best, r.distance_to_target, dsv
        );
    }
    s
}

/// Scores every ring candidate around a scene object and reports the chosen one.
pub fn cmd_viewpoint(
    scene: &Path,
    target: u64,
    params: Option<&Path>,
    json: Option<&Path>,
    plot: Option<&Path>,
) -> Result<ViewpointReport, CliError> {
    let scene = SyntheticScene::load(scene).map_err(|e| CliError::Config(e.to_string()))?;
    let params: VvdParams<f64> = match params {
        Some(p) => serde_json::from_str(&read_text(p)?).map_err(|e| CliError::config(p.display(), e))?,
        None => VvdParams::default(),
    };
    params.validate().map_err(|e| CliError::config("viewpoint parameters", e))?;
    let object = scene
        .object(target)
        .ok_or_else(|| CliError::Config(format!("scene {} has no object {target}", scene.name())))?;
    let decision = decide_viewpoint_for_cloud(
        object.cloud.points(),
        &object.centroid,
        scene.occluders_without(target),
        &scene.grid,
        &params,
    )
    .map_err(|e| match e {
        ViewpointError::NoViewpoint => CliError::Runtime(format!("object {target}: {e}")),
        other => CliError::config(format!("object {target}"), other),
    })?;
    let report = ViewpointReport {
        scene: scene.name().to_string(),
        target,
        category: object.category.clone(),
        target_points_used: decision.target_points_used,
        candidates: rows(&scene, target, [object.centroid.x, object.centroid.z], &decision),
        params,
    };
    if let Some(p) = json {
        write_text(p, &to_pretty(&report))?;
    }
    if let Some(p) = plot {
        write_text(p, &plot_csv(&report))?;
    }
    Ok(report)
}
