use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::geometry::{Cell, OccupancyGrid, Point3};

use super::SimError;

/// Single-source shortest distances over traversable cells.
///
/// Moves go to the 8 neighbours; a diagonal move needs both orthogonal neighbours
/// traversable. Orthogonal moves cost one cell, diagonal ones `√2` cells.
#[derive(Clone, Debug)]
pub struct DistanceField {
    width: usize,
    source: usize,
    dist: Vec<f64>,
    parent: Vec<usize>,
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const NONE: usize = usize::MAX;

impl DistanceField {
    pub fn new(grid: &OccupancyGrid<f64>, traversable: &[bool], source: Cell) -> Self {
        let (w, d) = (grid.width(), grid.depth());
        let step = grid.cell_size();
        let diag = step * std::f64::consts::SQRT_2;
        let src = grid.index(source);
        let mut dist = vec![f64::INFINITY; w * d];
        let mut parent = vec![NONE; w * d];
        let mut heap = BinaryHeap::new();
        if traversable[src] {
            dist[src] = 0.0;
            heap.push(Entry(0.0, src));
        }
        let ok = |x: i64, z: i64| x >= 0 && z >= 0 && (x as usize) < w && (z as usize) < d && traversable[z as usize * w + x as usize];
        while let Some(Entry(du, u)) = heap.pop() {
            if du > dist[u] {
                continue;
            }
            let (ux, uz) = ((u % w) as i64, (u / w) as i64);
            for dz in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dz == 0 {
                        continue;
                    }
                    let (vx, vz) = (ux + dx, uz + dz);
                    if !ok(vx, vz) {
                        continue;
                    }
                    let diagonal = dx != 0 && dz != 0;
                    if diagonal && !(ok(ux + dx, uz) && ok(ux, uz + dz)) {
                        continue;
                    }
                    let v = vz as usize * w + vx as usize;
                    let nd = du + if diagonal { diag } else { step };
                    if nd < dist[v] {
                        dist[v] = nd;
                        parent[v] = u;
                        heap.push(Entry(nd, v));
                    }
                }
            }
        }
        Self { width: w, source: src, dist, parent }
    }

    pub fn distance(&self, grid: &OccupancyGrid<f64>, cell: Cell) -> Option<f64> {
        let d = self.dist[grid.index(cell)];
        d.is_finite().then_some(d)
    }

    pub fn distances(&self) -> &[f64] {
        &self.dist
    }

    /// Cells from the source to `cell`, both included.
    pub fn path_to(&self, cell: Cell) -> Option<Vec<Cell>> {
        let mut i = cell.iz * self.width + cell.ix;
        if !self.dist.get(i)?.is_finite() {
            return None;
        }
        let mut out = vec![cell];
        while i != self.source {
            i = self.parent[i];
            out.push(Cell::new(i % self.width, i / self.width));
        }
        out.reverse();
        Some(out)
    }
}

/// Grid shortest-path length between the cells containing `a` and `b`.
pub fn shortest_path(grid: &OccupancyGrid<f64>, clearance: f64, a: &Point3<f64>, b: &Point3<f64>) -> Result<f64, SimError> {
    let mask = grid.traversable_mask(clearance);
    shortest_path_masked(grid, &mask, a, b)
}

pub fn shortest_path_masked(
    grid: &OccupancyGrid<f64>,
    traversable: &[bool],
    a: &Point3<f64>,
    b: &Point3<f64>,
) -> Result<f64, SimError> {
    let ca = grid.cell_of(a).ok_or(SimError::OutOfBounds)?;
    let cb = grid.cell_of(b).ok_or(SimError::OutOfBounds)?;
    if !traversable[grid.index(ca)] || !traversable[grid.index(cb)] {
        return Err(SimError::NotTraversable);
    }
    DistanceField::new(grid, traversable, ca).distance(grid, cb).ok_or(SimError::Disconnected)
}
