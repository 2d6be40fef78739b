use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use msgnav_core::sim::{EpisodeTranscript, TRANSCRIPT_FORMAT_VERSION};
use serde::Serialize;

use crate::error::{read_text, to_pretty, write_text, CliError};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Distribution {
    pub mean: f64,
    pub min: usize,
    pub p50: usize,
    pub p90: usize,
    pub max: usize,
}

impl Distribution {
    /// Nearest-rank percentiles over a non-empty sample.
    fn of(values: &[usize]) -> Self {
        let mut v = values.to_vec();
        v.sort_unstable();
        let rank = |p: f64| v[((p * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1];
        Self {
            mean: v.iter().sum::<usize>() as f64 / v.len() as f64,
            min: v[0],
            p50: rank(0.5),
            p90: rank(0.9),
            max: v[v.len() - 1],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StatsReport {
    pub transcripts: usize,
    pub queries: usize,
    pub images_per_query: Distribution,
    pub key_tokens: usize,
    pub full_tokens: usize,
    /// `1 − Σ key tokens / Σ full-graph tokens` over every query.
    pub token_reduction: f64,
    /// Mean of the per-query reductions.
    pub mean_query_reduction: f64,
}

/// Transcript files named by `paths`: files as given, directories by their `*.json`
/// entries (or those of a `transcripts/` subdirectory), sorted.
fn collect(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let dir = if p.join("transcripts").is_dir() { p.join("transcripts") } else { p.clone() };
            let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
                .map_err(|e| CliError::config(dir.display(), e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "json"))
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn load(path: &Path) -> Result<EpisodeTranscript, CliError> {
    let t: EpisodeTranscript = serde_json::from_str(&read_text(path)?).map_err(|e| CliError::config(path.display(), e))?;
    if t.format_version != TRANSCRIPT_FORMAT_VERSION {
        return Err(CliError::Config(format!("{}: unsupported transcript format_version {}", path.display(), t.format_version)));
    }
    Ok(t)
}

pub fn aggregate(transcripts: &[EpisodeTranscript]) -> Result<StatsReport, CliError> {
    let steps: Vec<_> = transcripts.iter().flat_map(|t| &t.steps).collect();
    if steps.is_empty() {
        return Err(CliError::Config("no reasoner queries in the given transcripts".into()));
    }
    let images: Vec<usize> = steps.iter().map(|s| s.key_images).collect();
    let key_tokens: usize = steps.iter().map(|s| s.key_tokens).sum();
    let full_tokens: usize = steps.iter().map(|s| s.full_tokens).sum();
    let per_query: f64 =
        steps.iter().map(|s| 1.0 - s.key_tokens as f64 / s.full_tokens.max(1) as f64).sum::<f64>() / steps.len() as f64;
    Ok(StatsReport {
        transcripts: transcripts.len(),
        queries: steps.len(),
        images_per_query: Distribution::of(&images),
        key_tokens,
        full_tokens,
        token_reduction: 1.0 - key_tokens as f64 / full_tokens.max(1) as f64,
        mean_query_reduction: per_query,
    })
}

pub fn report_text(r: &StatsReport) -> String {
    let mut s = String::new();
    let d = &r.images_per_query;
    let _ = writeln!(s, "{} transcript(s), {} reasoner queries", r.transcripts, r.queries);
    let _ = writeln!(s, "images per query: mean {:.2}  min {}  p50 {}  p90 {}  max {}", d.mean, d.min, d.p50, d.p90, d.max);
    let _ = writeln!(s, "tokens: key subgraph {}  full graph {}", r.key_tokens, r.full_tokens);
    let _ = writeln!(s, "token reduction: {:.1}% overall, {:.1}% mean per query", r.token_reduction * 100.0, r.mean_query_reduction * 100.0);
    s
}

pub fn cmd_stats(paths: &[PathBuf], json: Option<&Path>) -> Result<StatsReport, CliError> {
    let files = collect(paths)?;
    if files.is_empty() {
        return Err(CliError::Config("no transcripts given".into()));
    }
    let transcripts = files.iter().map(|f| load(f)).collect::<Result<Vec<_>, _>>()?;
    let report = aggregate(&transcripts)?;
    if let Some(p) = json {
        write_text(p, &to_pretty(&report))?;
    }
    Ok(report)
}
