use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{Point3, PointCloud};
use crate::scalar::Real;

/// Graph-unique object identifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectId(pub u64);

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Reference to a stored frame. Edges hold these, never pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ImageRef(pub u64);

impl fmt::Display for ImageRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "img{}", self.0)
    }
}

/// Unordered pair of distinct object ids, stored as `(low, high)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "[u64; 2]", into = "[u64; 2]")]
pub struct IdPair {
    low: ObjectId,
    high: ObjectId,
}

impl IdPair {
    /// `None` for a self pair.
    pub fn new(a: ObjectId, b: ObjectId) -> Option<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(Self { low: a, high: b }),
            std::cmp::Ordering::Greater => Some(Self { low: b, high: a }),
            std::cmp::Ordering::Equal => None,
        }
    }

    #[inline]
    pub fn low(&self) -> ObjectId {
        self.low
    }

    #[inline]
    pub fn high(&self) -> ObjectId {
        self.high
    }

    #[inline]
    pub fn contains(&self, id: ObjectId) -> bool {
        self.low == id || self.high == id
    }

    /// The endpoint that is not `id`, if `id` is an endpoint.
    pub fn other(&self, id: ObjectId) -> Option<ObjectId> {
        if id == self.low {
            Some(self.high)
        } else if id == self.high {
            Some(self.low)
        } else {
            None
        }
    }
}

impl TryFrom<[u64; 2]> for IdPair {
    type Error = String;
    fn try_from([a, b]: [u64; 2]) -> Result<Self, Self::Error> {
        IdPair::new(ObjectId(a), ObjectId(b)).ok_or_else(|| format!("self pair ({a}, {a})"))
    }
}

impl From<IdPair> for [u64; 2] {
    fn from(p: IdPair) -> Self {
        [p.low.0, p.high.0]
    }
}

impl fmt::Display for IdPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.low, self.high)
    }
}

/// Axis-aligned box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct BBox<T> {
    pub min: Point3<T>,
    pub max: Point3<T>,
}

impl<T: Real> BBox<T> {
    pub fn new(min: Point3<T>, max: Point3<T>) -> Self {
        Self { min: min.min_components(&max), max: min.max_components(&max) }
    }

    pub fn from_points(points: &[Point3<T>]) -> Option<Self> {
        let first = points.first()?;
        let (min, max) = points
            .iter()
            .fold((*first, *first), |(lo, hi), p| (lo.min_components(p), hi.max_components(p)));
        Some(Self { min, max })
    }

    pub fn union(&self, other: &Self) -> Self {
        Self { min: self.min.min_components(&other.min), max: self.max.max_components(&other.max) }
    }

    pub fn volume(&self) -> T {
        let d = self.max - self.min;
        d.x.max(T::zero()) * d.y.max(T::zero()) * d.z.max(T::zero())
    }

    pub fn intersection_volume(&self, other: &Self) -> T {
        let lo = self.min.max_components(&other.min);
        let hi = self.max.min_components(&other.max);
        BBox { min: lo, max: hi }.volume()
    }

    /// Volume intersection-over-union; 0 when both boxes are degenerate.
    pub fn iou(&self, other: &Self) -> T {
        let inter = self.intersection_volume(other);
        let union = self.volume() + other.volume() - inter;
        if union > T::zero() {
            inter / union
        } else if self == other {
            T::one()
        } else {
            T::zero()
        }
    }

    pub fn center(&self) -> Point3<T> {
        (self.min + self.max) * T::of(0.5)
    }
}

/// Camera position and heading (radians about the vertical axis).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct Pose<T> {
    pub position: Point3<T>,
    pub yaw: T,
}

/// Opaque reference to a per-frame instance mask. Carried along, never read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MaskRef {
    pub image: ImageRef,
    pub detection: u32,
}

/// One detector output inside a frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct Detection<T> {
    pub category: String,
    pub confidence: T,
    pub cloud: Vec<Point3<T>>,
    pub embedding: Vec<T>,
    pub bbox: BBox<T>,
}

/// Everything the detector reports for one RGB-D frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct FrameObservation<T> {
    pub frame_id: u64,
    pub timestamp: f64,
    pub camera_pose: Pose<T>,
    pub detections: Vec<Detection<T>>,
    pub image_ref: ImageRef,
}

/// A detection accepted into the frame-level object set, before id resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameObject<T: Real> {
    pub category: String,
    pub confidence: T,
    pub position: Point3<T>,
    pub bbox: BBox<T>,
    pub mask_ref: MaskRef,
    pub cloud: PointCloud<T>,
    pub embedding: Vec<T>,
    pub room: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryVote {
    pub count: u32,
    pub last_frame: u64,
}

/// One tracked object instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct ObjectNode<T: Real> {
    pub id: ObjectId,
    pub category: String,
    pub position: Point3<T>,
    pub bbox: BBox<T>,
    pub mask_ref: Option<MaskRef>,
    pub cloud: PointCloud<T>,
    pub embedding: Vec<T>,
    pub room: String,
    pub observations: u32,
    pub category_votes: BTreeMap<String, CategoryVote>,
    pub first_frame: u64,
    pub last_frame: u64,
}

impl<T: Real> ObjectNode<T> {
    /// Majority category, most recent vote winning ties.
    pub(crate) fn elect_category(&self) -> Option<&str> {
        self.category_votes
            .iter()
            .max_by(|a, b| (a.1.count, a.1.last_frame).cmp(&(b.1.count, b.1.last_frame)))
            .map(|(k, _)| k.as_str())
    }
}

/// Embedding cosine similarity; 0 when either vector has zero norm or lengths differ.
pub fn cosine_similarity<T: Real>(a: &[T], b: &[T]) -> T {
    if a.len() != b.len() || a.is_empty() {
        return T::zero();
    }
    let dot: T = a.iter().zip(b).map(|(x, y)| *x * *y).sum();
    let na: T = a.iter().map(|x| *x * *x).sum::<T>().sqrt();
    let nb: T = b.iter().map(|x| *x * *x).sum::<T>().sqrt();
    if na > T::zero() && nb > T::zero() {
        dot / (na * nb)
    } else {
        T::zero()
    }
}
