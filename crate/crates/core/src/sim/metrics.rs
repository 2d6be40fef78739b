use serde::{Deserialize, Serialize};

use super::episode::EpisodeResult;
use super::SimError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub episodes: usize,
    /// Success rate.
    pub sr: f64,
    /// Success weighted by path length.
    pub spl: f64,
}

/// `S_i · l_s / max(l_s, l_a)`; zero for failures and one for a zero-length success.
pub fn spl_term(success: bool, shortest: f64, agent: f64) -> f64 {
    if !success {
        return 0.0;
    }
    let denom = shortest.max(agent);
    if denom > 0.0 {
        shortest / denom
    } else {
        1.0
    }
}

pub fn compute_metrics(results: &[EpisodeResult]) -> Result<Metrics, SimError> {
    if results.is_empty() {
        return Err(SimError::NoEpisodes);
    }
    let n = results.len() as f64;
    let sr = results.iter().filter(|r| r.success).count() as f64 / n;
    let spl = results.iter().map(|r| spl_term(r.success, r.shortest_path, r.agent_path)).sum::<f64>() / n;
    Ok(Metrics { episodes: results.len(), sr, spl })
}

/// Success rate when success means stopping within `d` of a ground-truth viewpoint.
pub fn success_rate_at(results: &[EpisodeResult], d: f64) -> Result<f64, SimError> {
    if results.is_empty() {
        return Err(SimError::NoEpisodes);
    }
    let hits = results.iter().filter(|r| r.distance_to_success.is_some_and(|x| x <= d + 1e-9)).count();
    Ok(hits as f64 / results.len() as f64)
}
