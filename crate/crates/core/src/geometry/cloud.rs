use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{GeometryError, Point3};
use crate::scalar::Real;

/// Default voxel edge of the spatial index, equal to the default obstruction distance.
pub const DEFAULT_INDEX_CELL: f64 = 0.1;

/// Largest number of voxels the clearance field may cover before it is skipped.
const MAX_FIELD_VOXELS: usize = 16_000_000;

type VoxelKey = [i64; 3];

/// Multiply-rotate hasher for voxel keys.
#[derive(Default)]
struct VoxelHasher(u64);

impl Hasher for VoxelHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.write_u64(u64::from(*b));
        }
    }

    fn write_i64(&mut self, v: i64) {
        self.write_u64(v as u64);
    }

    fn write_u64(&mut self, v: u64) {
        self.0 = (self.0.rotate_left(5) ^ v).wrapping_mul(0x51_7c_c1_b7_27_22_0a_95);
    }

    fn write_usize(&mut self, v: usize) {
        self.write_u64(v as u64);
    }
}

type VoxelMap = HashMap<VoxelKey, Vec<u32>, BuildHasherDefault<VoxelHasher>>;

/// Dense Chebyshev voxel-distance field over the bounding box of occupied voxels.
#[derive(Clone, Debug)]
struct ClearanceField {
    min: VoxelKey,
    dims: [i64; 3],
    dist: Vec<u8>,
}

impl ClearanceField {
    fn build(cells: &VoxelMap, min: VoxelKey, max: VoxelKey) -> Option<Self> {
        if cells.is_empty() {
            return None;
        }
        let dims = [max[0] - min[0] + 1, max[1] - min[1] + 1, max[2] - min[2] + 1];
        let total = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d as usize))?;
        if total > MAX_FIELD_VOXELS {
            return None;
        }
        let idx = |k: VoxelKey| {
            (((k[0] - min[0]) * dims[1] + (k[1] - min[1])) * dims[2] + (k[2] - min[2])) as usize
        };
        let mut dist = vec![u8::MAX; total];
        let mut frontier: Vec<VoxelKey> = Vec::with_capacity(cells.len());
        for k in cells.keys() {
            dist[idx(*k)] = 0;
            frontier.push(*k);
        }
        let mut level = 0u8;
        while !frontier.is_empty() && level < u8::MAX - 1 {
            level += 1;
            let mut next = Vec::new();
            for k in &frontier {
                for dx in -1..=1 {
                    for dy in -1..=1 {
                        for dz in -1..=1 {
                            let n = [k[0] + dx, k[1] + dy, k[2] + dz];
                            if (0..3).any(|a| n[a] < min[a] || n[a] > max[a]) {
                                continue;
                            }
                            let i = idx(n);
                            if dist[i] == u8::MAX {
                                dist[i] = level;
                                next.push(n);
                            }
                        }
                    }
                }
            }
            frontier = next;
        }
        Some(Self { min, dims, dist })
    }

    /// Chebyshev voxel distance from `k` to the nearest occupied voxel (a lower bound).
    fn voxel_distance(&self, k: VoxelKey) -> i64 {
        let mut outside = 0;
        let mut clamped = k;
        for a in 0..3 {
            let hi = self.min[a] + self.dims[a] - 1;
            clamped[a] = k[a].clamp(self.min[a], hi);
            outside = outside.max((k[a] - clamped[a]).abs());
        }
        let i = (((clamped[0] - self.min[0]) * self.dims[1] + (clamped[1] - self.min[1]))
            * self.dims[2]
            + (clamped[2] - self.min[2])) as usize;
        let inside = i64::from(self.dist[i]);
        outside.max(inside - outside)
    }
}

/// Ordered point set with a uniform voxel-hash index for proximity queries.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "CloudRepr<T>", into = "CloudRepr<T>")]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct PointCloud<T: Real> {
    points: Vec<Point3<T>>,
    cell: T,
    cells: VoxelMap,
    lo: VoxelKey,
    hi: VoxelKey,
    field: OnceLock<Option<ClearanceField>>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
struct CloudRepr<T> {
    cell_size: T,
    points: Vec<Point3<T>>,
}

impl<T: Real> TryFrom<CloudRepr<T>> for PointCloud<T> {
    type Error = GeometryError;
    fn try_from(r: CloudRepr<T>) -> Result<Self, Self::Error> {
        Self::with_cell_size(r.points, r.cell_size)
    }
}

impl<T: Real> From<PointCloud<T>> for CloudRepr<T> {
    fn from(c: PointCloud<T>) -> Self {
        CloudRepr { cell_size: c.cell, points: c.points }
    }
}

impl<T: Real> PartialEq for PointCloud<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cell == other.cell && self.points == other.points
    }
}

impl<T: Real> Default for PointCloud<T> {
    fn default() -> Self {
        Self::empty(T::of(DEFAULT_INDEX_CELL))
    }
}

impl<T: Real> PointCloud<T> {
    /// Builds a cloud indexed at [`DEFAULT_INDEX_CELL`].
    ///
    /// Panics on non-finite coordinates; use [`PointCloud::with_cell_size`] to get an error.
    pub fn new(points: Vec<Point3<T>>) -> Self {
        Self::with_cell_size(points, T::of(DEFAULT_INDEX_CELL)).expect("finite point cloud")
    }

    pub fn empty(cell: T) -> Self {
        Self {
            points: Vec::new(),
            cell,
            cells: VoxelMap::default(),
            lo: [i64::MAX; 3],
            hi: [i64::MIN; 3],
            field: OnceLock::new(),
        }
    }

    pub fn with_cell_size(points: Vec<Point3<T>>, cell: T) -> Result<Self, GeometryError> {
        if !(cell > T::zero() && cell.is_finite()) {
            return Err(GeometryError::InvalidParameter("index cell size must be positive"));
        }
        let mut cloud = Self::empty(cell);
        cloud.extend(points)?;
        Ok(cloud)
    }

    /// Re-indexes the same points with a different voxel edge.
    pub fn reindexed(&self, cell: T) -> Result<Self, GeometryError> {
        Self::with_cell_size(self.points.clone(), cell)
    }

    pub fn extend<I: IntoIterator<Item = Point3<T>>>(&mut self, points: I) -> Result<(), GeometryError> {
        for p in points {
            if !p.is_finite() {
                return Err(GeometryError::NonFinite);
            }
            let id = u32::try_from(self.points.len()).map_err(|_| GeometryError::TooLarge)?;
            let key = self.key(&p);
            for a in 0..3 {
                self.lo[a] = self.lo[a].min(key[a]);
                self.hi[a] = self.hi[a].max(key[a]);
            }
            self.cells.entry(key).or_default().push(id);
            self.points.push(p);
        }
        self.field = OnceLock::new();
        Ok(())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn points(&self) -> &[Point3<T>] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point3<T>> {
        self.points
    }

    #[inline]
    pub fn cell_size(&self) -> T {
        self.cell
    }

    #[inline]
    fn key(&self, p: &Point3<T>) -> VoxelKey {
        let k = |v: T| (v / self.cell).floor().to_i64().unwrap_or(i64::MAX / 4);
        [k(p.x), k(p.y), k(p.z)]
    }

    /// Arithmetic mean of all points.
    pub fn centroid(&self) -> Result<Point3<T>, GeometryError> {
        if self.points.is_empty() {
            return Err(GeometryError::EmptyCloud);
        }
        let sum = self.points.iter().fold(Point3::origin(), |acc, p| acc + *p);
        Ok(sum * (T::one() / T::of_usize(self.points.len())))
    }

    /// Exact Euclidean distance from `q` to the closest point.
    pub fn nearest_distance(&self, q: &Point3<T>) -> Result<T, GeometryError> {
        if self.points.is_empty() {
            return Err(GeometryError::EmptyCloud);
        }
        Ok(self.nearest_distance_squared(q).sqrt())
    }

    fn nearest_distance_squared(&self, q: &Point3<T>) -> T {
        let center = self.key(q);
        let (lo, hi) = (self.lo, self.hi);
        let max_ring = (0..3)
            .map(|a| (center[a] - lo[a]).abs().max((hi[a] - center[a]).abs()))
            .max()
            .unwrap_or(0);
        let mut best = T::infinity();
        let mut visited = 0usize;
        for r in 0..=max_ring {
            let shell = if r == 0 { 1 } else { ((2 * r + 1).pow(3) - (2 * r - 1).pow(3)) as usize };
            visited = visited.saturating_add(shell);
            if visited > self.points.len().max(64) {
                return self.linear_nearest_squared(q);
            }
            self.visit_shell(center, r, |ids| {
                for &i in ids {
                    let d = self.points[i as usize].distance_squared(q);
                    if d < best {
                        best = d;
                    }
                }
            });
            if r > 0 {
                let reach = (T::of_usize(r as usize) - T::of(1e-6)) * self.cell;
                if best <= reach * reach {
                    return best;
                }
            }
        }
        best
    }

    fn linear_nearest_squared(&self, q: &Point3<T>) -> T {
        self.points
            .iter()
            .map(|p| p.distance_squared(q))
            .fold(T::infinity(), |a, b| if b < a { b } else { a })
    }

    fn visit_shell(&self, c: VoxelKey, r: i64, mut f: impl FnMut(&[u32])) {
        for dx in -r..=r {
            for dy in -r..=r {
                for dz in -r..=r {
                    if dx.abs().max(dy.abs()).max(dz.abs()) != r {
                        continue;
                    }
                    if let Some(ids) = self.cells.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                        f(ids);
                    }
                }
            }
        }
    }

    /// True when some point lies strictly closer than `radius` to `q`.
    pub fn any_within(&self, q: &Point3<T>, radius: T) -> bool {
        if self.points.is_empty() || radius <= T::zero() {
            return false;
        }
        let r2 = radius * radius;
        let pad = radius * (T::one() + T::of(1e-9)) + self.cell * T::of(1e-9);
        let lo = self.key(&Point3::new(q.x - pad, q.y - pad, q.z - pad));
        let hi = self.key(&Point3::new(q.x + pad, q.y + pad, q.z + pad));
        for kx in lo[0]..=hi[0] {
            for ky in lo[1]..=hi[1] {
                for kz in lo[2]..=hi[2] {
                    if let Some(ids) = self.cells.get(&[kx, ky, kz]) {
                        if ids.iter().any(|&i| self.points[i as usize].distance_squared(q) < r2) {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    /// A cheap lower bound on [`PointCloud::nearest_distance`]; infinite for an empty cloud.
    pub fn clearance_lower_bound(&self, q: &Point3<T>) -> T {
        if self.points.is_empty() {
            return T::infinity();
        }
        match self.field.get_or_init(|| ClearanceField::build(&self.cells, self.lo, self.hi)) {
            Some(field) => {
                let n = field.voxel_distance(self.key(q));
                if n <= 1 {
                    T::zero()
                } else {
                    T::of_usize((n - 1) as usize) * self.cell
                }
            }
            None => T::zero(),
        }
    }

    pub fn translated(&self, t: Point3<T>) -> Self {
        let pts = self.points.iter().map(|p| *p + t).collect();
        Self::with_cell_size(pts, self.cell).expect("translation keeps points finite")
    }

    /// Scales every coordinate and the index cell by `s` (> 0).
    pub fn scaled(&self, s: T) -> Self {
        let pts = self.points.iter().map(|p| *p * s).collect();
        Self::with_cell_size(pts, self.cell * s).expect("positive scale keeps cloud valid")
    }
}

impl<T: Real> FromIterator<Point3<T>> for PointCloud<T> {
    fn from_iter<I: IntoIterator<Item = Point3<T>>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}
