use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use msgnav_core::reasoning::{HttpReasoner, MockReasoner, MockScript, Reasoner};
use msgnav_core::sim::last_mile::last_mile_suite;
use msgnav_core::sim::{
    compute_metrics, run_episode, run_lifelong, EpisodeOutput, EpisodeResult, Metrics, SyntheticScene,
};
use serde::Serialize;

use crate::config::{ReasonerSpec, RunConfig};
use crate::error::{to_pretty, write_text, CliError};

pub const RESULTS_FORMAT_VERSION: u32 = 1;

#[derive(Serialize)]
struct ResultsDoc<'a> {
    format_version: u32,
    config: &'a RunConfig,
    episodes: Vec<&'a EpisodeResult>,
}

#[derive(Debug, Serialize)]
pub struct MetricsDoc {
    pub success_distance: f64,
    pub overall: Metrics,
    pub by_goal_kind: BTreeMap<String, Metrics>,
    pub reasoner_failures: usize,
}

fn load_scenes(config: &RunConfig) -> Result<Vec<SyntheticScene>, CliError> {
    if let Some(lm) = &config.last_mile {
        let suite = last_mile_suite(lm.variants, lm.seed).map_err(|e| CliError::runtime("last-mile suite", e))?;
        return Ok(suite.into_iter().map(|s| s.scene).collect());
    }
    config
        .scenes
        .iter()
        .map(|p| SyntheticScene::load(p).map_err(|e| CliError::Config(e.to_string())))
        .collect()
}

fn build_reasoner(spec: &ReasonerSpec, transcript: Option<PathBuf>) -> Result<Box<dyn Reasoner>, CliError> {
    Ok(match spec {
        ReasonerSpec::Oracle => Box::new(MockReasoner::new(MockScript::oracle_greedy())),
        ReasonerSpec::Mock(script) => Box::new(MockReasoner::new(script.clone())),
        ReasonerSpec::Http(http) => {
            let mut http = http.clone();
            http.transcript = transcript;
            Box::new(HttpReasoner::from_config(http).map_err(|e| CliError::runtime("reasoner transcript", e))?)
        }
    })
}

fn episode_name(index: usize, out: &EpisodeOutput) -> String {
    format!("{index:03}_{}_goal{}", out.result.scene, out.result.goal_index)
}

pub fn metrics_doc(results: &[EpisodeResult], success_distance: f64) -> Result<MetricsDoc, CliError> {
    let overall = compute_metrics(results).map_err(|e| CliError::runtime("metrics", e))?;
    let mut kinds: BTreeMap<String, Vec<EpisodeResult>> = BTreeMap::new();
    for r in results {
        kinds.entry(r.goal_kind.to_string()).or_default().push(r.clone());
    }
    let by_goal_kind = kinds
        .into_iter()
        .map(|(k, rs)| compute_metrics(&rs).map(|m| (k, m)))
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::runtime("metrics", e))?;
    let reasoner_failures = results.iter().filter(|r| is_reasoner_failure(r)).count();
    Ok(MetricsDoc { success_distance, overall, by_goal_kind, reasoner_failures })
}

fn is_reasoner_failure(r: &EpisodeResult) -> bool {
    r.failure.as_deref().is_some_and(|f| f.starts_with("reasoner error"))
}

fn summary_text(config: &RunConfig, outputs: &[EpisodeOutput], metrics: &MetricsDoc) -> String {
    let mut s = String::new();
    let vvd = if config.episode.use_vvd { "on" } else { "off" };
    let _ = writeln!(s, "reasoner {}  vvd {vvd}  seed {}  d = {} m", config.reasoner, config.episode.seed, metrics.success_distance);
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<28} {:>4} {:<9} {:>7} {:>5} {:>8} {:>8} {:>6}", "scene", "goal", "kind", "success", "steps", "l_s", "l_a", "spl");
    for o in outputs {
        let r = &o.result;
        let _ = writeln!(
            s,
            "{:<28} {:>4} {:<9} {:>7} {:>5} {:>8.2} {:>8.2} {:>6.3}{}",
            r.scene,
            r.goal_index,
            r.goal_kind.to_string(),
            if r.success { "yes" } else { "no" },
            r.steps,
            r.shortest_path,
            r.agent_path,
            r.spl,
            r.failure.as_deref().map(|f| format!("  [{f}]")).unwrap_or_default()
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<10} {:>8} {:>7} {:>7}", "split", "episodes", "SR %", "SPL %");
    let row = |s: &mut String, name: &str, m: &Metrics| {
        let _ = writeln!(s, "{:<10} {:>8} {:>7.1} {:>7.1}", name, m.episodes, m.sr * 100.0, m.spl * 100.0);
    };
    row(&mut s, "overall", &metrics.overall);
    for (k, m) in &metrics.by_goal_kind {
        row(&mut s, k, m);
    }
    if metrics.reasoner_failures > 0 {
        let _ = writeln!(s, "\n{} episode(s) ended on a reasoner error", metrics.reasoner_failures);
    }
    s
}

/// Runs every selected episode, then writes results, transcripts, metrics and a summary.
///
/// All inputs are loaded and checked before the output directory is touched.
pub fn cmd_run(config: &RunConfig) -> Result<MetricsDoc, CliError> {
    let spec = ReasonerSpec::parse(&config.reasoner, &config.http)?;
    let scenes = load_scenes(config)?;
    for scene in &scenes {
        if scene.goals().is_empty() {
            return Err(CliError::Config(format!("scene {} has no goals", scene.name())));
        }
        if let Some(g) = config.goal {
            if g >= scene.goals().len() {
                return Err(CliError::Config(format!("scene {} has no goal {g}", scene.name())));
            }
        }
    }
    let http_dir = matches!(spec, ReasonerSpec::Http(_)).then(|| config.out.join("http"));
    if let Some(dir) = &http_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::runtime(dir.display(), e))?;
    }
    let http_log = |name: &str| http_dir.as_ref().map(|d| d.join(format!("{name}.jsonl")));

    let mut outputs: Vec<EpisodeOutput> = Vec::new();
    for scene in &scenes {
        let sim_err = |e| CliError::runtime(format!("scene {}", scene.name()), e);
        if config.lifelong {
            let mut reasoner = build_reasoner(&spec, http_log(&format!("{}_lifelong", scene.name())))?;
            outputs.extend(run_lifelong(scene, reasoner.as_mut(), &config.episode).map_err(sim_err)?);
        } else {
            let goals: Vec<usize> = config.goal.map_or_else(|| (0..scene.goals().len()).collect(), |g| vec![g]);
            for g in goals {
                let mut reasoner = build_reasoner(&spec, http_log(&format!("{}_goal{g}", scene.name())))?;
                outputs.push(run_episode(scene, g, reasoner.as_mut(), &config.episode).map_err(sim_err)?);
            }
        }
        info!("scene {} done", scene.name());
    }

    let results: Vec<EpisodeResult> = outputs.iter().map(|o| o.result.clone()).collect();
    let metrics = metrics_doc(&results, config.episode.success_distance)?;
    write_outputs(&config.out, config, &outputs, &metrics)?;
    Ok(metrics)
}

fn write_outputs(out: &Path, config: &RunConfig, outputs: &[EpisodeOutput], metrics: &MetricsDoc) -> Result<(), CliError> {
    let doc = ResultsDoc {
        format_version: RESULTS_FORMAT_VERSION,
        config,
        episodes: outputs.iter().map(|o| &o.result).collect(),
    };
    write_text(&out.join("results.json"), &to_pretty(&doc))?;
    for (i, o) in outputs.iter().enumerate() {
        write_text(&out.join("transcripts").join(format!("{}.json", episode_name(i, o))), &to_pretty(&o.transcript))?;
    }
    write_text(&out.join("metrics.json"), &to_pretty(metrics))?;
    write_text(&out.join("summary.txt"), &summary_text(config, outputs, metrics))
}
