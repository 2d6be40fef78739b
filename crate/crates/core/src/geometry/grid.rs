use serde::{Deserialize, Serialize};

use super::{GeometryError, Point3};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellState {
    Free,
    Occupied,
    Unknown,
}

impl CellState {
    fn symbol(self) -> char {
        match self {
            CellState::Free => '.',
            CellState::Occupied => '#',
            CellState::Unknown => '?',
        }
    }

    fn from_symbol(c: char) -> Option<Self> {
        match c {
            '.' => Some(CellState::Free),
            '#' => Some(CellState::Occupied),
            '?' => Some(CellState::Unknown),
            _ => None,
        }
    }
}

/// Integer cell coordinate: `ix` along x, `iz` along z.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub ix: usize,
    pub iz: usize,
}

impl Cell {
    pub const fn new(ix: usize, iz: usize) -> Self {
        Self { ix, iz }
    }
}

/// Ground-plane occupancy grid over (x, z). Cell `(ix, iz)` spans
/// `[origin.x + ix·c, origin.x + (ix+1)·c) × [origin.z + iz·c, origin.z + (iz+1)·c)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr<T>", into = "GridRepr<T>")]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct OccupancyGrid<T: Real> {
    origin: Point3<T>,
    cell_size: T,
    width: usize,
    depth: usize,
    cells: Vec<CellState>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
struct GridRepr<T> {
    origin: Point3<T>,
    cell_size: T,
    width: usize,
    depth: usize,
    /// One string per z row, `.` free, `#` occupied, `?` unknown.
    rows: Vec<String>,
}

impl<T: Real> TryFrom<GridRepr<T>> for OccupancyGrid<T> {
    type Error = GeometryError;
    fn try_from(r: GridRepr<T>) -> Result<Self, Self::Error> {
        let mut grid = OccupancyGrid::new(r.origin, r.cell_size, r.width, r.depth, CellState::Unknown)?;
        if r.rows.len() != r.depth {
            return Err(GeometryError::InvalidParameter("grid row count does not match depth"));
        }
        for (iz, row) in r.rows.iter().enumerate() {
            if row.chars().count() != r.width {
                return Err(GeometryError::InvalidParameter("grid row length does not match width"));
            }
            for (ix, c) in row.chars().enumerate() {
                let state = CellState::from_symbol(c)
                    .ok_or(GeometryError::InvalidParameter("unknown grid cell symbol"))?;
                grid.set(Cell::new(ix, iz), state);
            }
        }
        Ok(grid)
    }
}

impl<T: Real> From<OccupancyGrid<T>> for GridRepr<T> {
    fn from(g: OccupancyGrid<T>) -> Self {
        let rows = g
            .cells
            .chunks(g.width.max(1))
            .take(g.depth)
            .map(|row| row.iter().map(|c| c.symbol()).collect())
            .collect();
        GridRepr { origin: g.origin, cell_size: g.cell_size, width: g.width, depth: g.depth, rows }
    }
}

impl<T: Real> OccupancyGrid<T> {
    pub fn new(
        origin: Point3<T>,
        cell_size: T,
        width: usize,
        depth: usize,
        fill: CellState,
    ) -> Result<Self, GeometryError> {
        if !(cell_size > T::zero() && cell_size.is_finite()) {
            return Err(GeometryError::InvalidParameter("grid cell size must be positive"));
        }
        if !origin.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        Ok(Self { origin, cell_size, width, depth, cells: vec![fill; width * depth] })
    }

    #[inline]
    pub fn origin(&self) -> Point3<T> {
        self.origin
    }

    #[inline]
    pub fn cell_size(&self) -> T {
        self.cell_size
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn depth(&self) -> usize {
        self.depth
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    #[inline]
    pub fn index(&self, cell: Cell) -> usize {
        cell.iz * self.width + cell.ix
    }

    #[inline]
    pub fn cell_at_index(&self, i: usize) -> Cell {
        Cell::new(i % self.width, i / self.width)
    }

    #[inline]
    pub fn get(&self, cell: Cell) -> CellState {
        self.cells[self.index(cell)]
    }

    #[inline]
    pub fn set(&mut self, cell: Cell, state: CellState) {
        let i = self.index(cell);
        self.cells[i] = state;
    }

    pub fn cells(&self) -> impl Iterator<Item = (Cell, CellState)> + '_ {
        self.cells.iter().enumerate().map(|(i, s)| (self.cell_at_index(i), *s))
    }

    /// Signed cell coordinates of a ground position (may be out of bounds).
    fn raw_cell(&self, x: T, z: T) -> (i64, i64) {
        let ix = ((x - self.origin.x) / self.cell_size).floor().to_i64().unwrap_or(i64::MIN / 4);
        let iz = ((z - self.origin.z) / self.cell_size).floor().to_i64().unwrap_or(i64::MIN / 4);
        (ix, iz)
    }

    fn in_bounds(&self, ix: i64, iz: i64) -> Option<Cell> {
        (ix >= 0 && iz >= 0 && (ix as usize) < self.width && (iz as usize) < self.depth)
            .then(|| Cell::new(ix as usize, iz as usize))
    }

    /// The cell under the ground projection of `p`, if inside the grid.
    pub fn cell_of(&self, p: &Point3<T>) -> Option<Cell> {
        let (ix, iz) = self.raw_cell(p.x, p.z);
        self.in_bounds(ix, iz)
    }

    /// Cell center at the grid origin's height.
    pub fn cell_center(&self, cell: Cell) -> Point3<T> {
        let half = self.cell_size / T::two();
        Point3::new(
            self.origin.x + T::of_usize(cell.ix) * self.cell_size + half,
            self.origin.y,
            self.origin.z + T::of_usize(cell.iz) * self.cell_size + half,
        )
    }

    /// Marks every cell overlapping the ground rectangle `[min, max]` (x, z) with `state`.
    pub fn fill_rect(&mut self, min: (T, T), max: (T, T), state: CellState) {
        let (x0, z0) = self.raw_cell(min.0, min.1);
        let (x1, z1) = self.raw_cell(max.0, max.1);
        for iz in z0.max(0)..=z1.min(self.depth as i64 - 1) {
            for ix in x0.max(0)..=x1.min(self.width as i64 - 1) {
                self.set(Cell::new(ix as usize, iz as usize), state);
            }
        }
    }

    /// Distance from ground point (x, z) to the closed square of signed cell (ix, iz).
    fn rect_distance(&self, x: T, z: T, ix: i64, iz: i64) -> T {
        let x0 = self.origin.x + T::from_i64(ix).unwrap_or_else(T::zero) * self.cell_size;
        let z0 = self.origin.z + T::from_i64(iz).unwrap_or_else(T::zero) * self.cell_size;
        let dx = (x0 - x).max(x - (x0 + self.cell_size)).max(T::zero());
        let dz = (z0 - z).max(z - (z0 + self.cell_size)).max(T::zero());
        (dx * dx + dz * dz).sqrt()
    }

    /// True when the ground projection of `v` lies in a free cell and every cell whose
    /// square lies within `clearance` of it is inside the grid and free.
    pub fn is_traversable(&self, v: &Point3<T>, clearance: T) -> bool {
        if !v.is_finite() {
            return false;
        }
        match self.cell_of(v) {
            Some(c) if self.get(c) == CellState::Free => {}
            _ => return false,
        }
        let clearance = clearance.max(T::zero());
        let (x0, z0) = self.raw_cell(v.x - clearance, v.z - clearance);
        let (x1, z1) = self.raw_cell(v.x + clearance, v.z + clearance);
        for iz in z0..=z1 {
            for ix in x0..=x1 {
                if self.rect_distance(v.x, v.z, ix, iz) > clearance {
                    continue;
                }
                match self.in_bounds(ix, iz) {
                    Some(c) if self.get(c) == CellState::Free => {}
                    _ => return false,
                }
            }
        }
        true
    }

    /// Precomputed traversability of every cell center.
    pub fn traversable_mask(&self, clearance: T) -> Vec<bool> {
        (0..self.cells.len())
            .map(|i| self.is_traversable(&self.cell_center(self.cell_at_index(i)), clearance))
            .collect()
    }

    /// Same grid with origin and cell size multiplied by `s`.
    pub fn scaled(&self, s: T) -> Self {
        Self { origin: self.origin * s, cell_size: self.cell_size * s, ..self.clone() }
    }
}
