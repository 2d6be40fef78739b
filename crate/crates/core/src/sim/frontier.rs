use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::{Cell, CellState, OccupancyGrid, Point3};
use crate::reasoning::FrontierId;

/// What the agent would see looking through a frontier.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrontierSnapshot {
    pub categories: BTreeMap<String, u32>,
    pub room: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frontier {
    pub id: FrontierId,
    pub cells: Vec<Cell>,
    /// Center of the cluster cell closest to the cluster centroid.
    pub representative: Point3<f64>,
    pub snapshot: FrontierSnapshot,
}

/// Explored free cells with an unexplored in-grid 4-neighbour, clustered by
/// 8-connectivity. Clusters smaller than `min_cluster` are dropped; the rest are ordered
/// by size (largest first), then by lowest cell index, and numbered in that order.
pub fn extract_frontiers(grid: &OccupancyGrid<f64>, explored: &[bool], min_cluster: usize) -> Vec<Frontier> {
    let (w, d) = (grid.width(), grid.depth());
    let free = |i: usize| explored[i] && grid.get(grid.cell_at_index(i)) == CellState::Free;
    let is_frontier: Vec<bool> = (0..w * d)
        .map(|i| {
            if !free(i) {
                return false;
            }
            let (x, z) = (i % w, i / w);
            let unexplored = |nx: usize, nz: usize| !explored[nz * w + nx];
            (x > 0 && unexplored(x - 1, z))
                || (x + 1 < w && unexplored(x + 1, z))
                || (z > 0 && unexplored(x, z - 1))
                || (z + 1 < d && unexplored(x, z + 1))
        })
        .collect();

    let mut label = vec![usize::MAX; w * d];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for start in 0..w * d {
        if !is_frontier[start] || label[start] != usize::MAX {
            continue;
        }
        let id = clusters.len();
        let mut members = vec![start];
        label[start] = id;
        let mut head = 0;
        while head < members.len() {
            let u = members[head];
            head += 1;
            let (ux, uz) = ((u % w) as i64, (u / w) as i64);
            for dz in -1..=1 {
                for dx in -1..=1 {
                    let (vx, vz) = (ux + dx, uz + dz);
                    if vx < 0 || vz < 0 || vx as usize >= w || vz as usize >= d {
                        continue;
                    }
                    let v = vz as usize * w + vx as usize;
                    if is_frontier[v] && label[v] == usize::MAX {
                        label[v] = id;
                        members.push(v);
                    }
                }
            }
        }
        members.sort_unstable();
        clusters.push(members);
    }

    clusters.retain(|c| c.len() >= min_cluster.max(1));
    clusters.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    clusters
        .into_iter()
        .enumerate()
        .map(|(k, members)| {
            let cells: Vec<Cell> = members.iter().map(|i| grid.cell_at_index(*i)).collect();
            let n = cells.len() as f64;
            let (sx, sz) = cells.iter().fold((0.0, 0.0), |(sx, sz), c| (sx + c.ix as f64, sz + c.iz as f64));
            let (cx, cz) = (sx / n, sz / n);
            let rep = *cells
                .iter()
                .min_by(|a, b| {
                    let da = (a.ix as f64 - cx).powi(2) + (a.iz as f64 - cz).powi(2);
                    let db = (b.ix as f64 - cx).powi(2) + (b.iz as f64 - cz).powi(2);
                    da.total_cmp(&db)
                })
                .expect("clusters are non-empty");
            Frontier {
                id: FrontierId(k as u32),
                cells,
                representative: grid.cell_center(rep),
                snapshot: FrontierSnapshot::default(),
            }
        })
        .collect()
}
