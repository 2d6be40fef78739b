use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::edges::EdgeStore;
use super::types::{
    cosine_similarity, BBox, CategoryVote, FrameObject, FrameObservation, IdPair, ImageRef, MaskRef,
    ObjectId, ObjectNode, Pose,
};
use super::GraphError;
use crate::geometry::{Point3, PointCloud};
use crate::reasoning::{fold_term, Vocabulary};
use crate::scalar::Real;

/// Snapshot format written by [`SceneGraph::to_json`].
pub const GRAPH_FORMAT_VERSION: u32 = 1;

/// Matching and adjacency thresholds. Serialized with every snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"), deny_unknown_fields)]
pub struct GraphConfig<T> {
    /// Co-occurring objects closer than this (meters) share an edge.
    pub adjacency_threshold: T,
    pub iou_min: T,
    /// Centroid distance (meters) under which two observations are spatially compatible.
    pub match_dist: T,
    /// Embedding cosine similarity that substitutes for a category match.
    pub sim_min: T,
    pub min_confidence: T,
    /// Voxel edge used to de-duplicate merged clouds.
    pub dedup_voxel: T,
    pub embedding_dim: usize,
}

impl<T: Real> Default for GraphConfig<T> {
    fn default() -> Self {
        Self {
            adjacency_threshold: T::of(2.0),
            iou_min: T::of(0.25),
            match_dist: T::of(0.5),
            sim_min: T::of(0.8),
            min_confidence: T::of(0.3),
            dedup_voxel: T::of(0.05),
            embedding_dim: 16,
        }
    }
}

impl<T: Real> GraphConfig<T> {
    pub fn validate(&self) -> Result<(), GraphError> {
        let positive = |v: T| v > T::zero() && v.is_finite();
        if !positive(self.adjacency_threshold) || !positive(self.match_dist) || !positive(self.dedup_voxel) {
            return Err(GraphError::InvalidConfig("distances must be positive"));
        }
        if self.embedding_dim == 0 {
            return Err(GraphError::InvalidConfig("embedding_dim must be at least 1"));
        }
        for v in [self.iou_min, self.sim_min, self.min_confidence] {
            if !(v >= -T::one() && v <= T::one()) {
                return Err(GraphError::InvalidConfig("similarity thresholds must lie in [-1, 1]"));
            }
        }
        Ok(())
    }
}

/// Maps a position to a room label.
pub trait RoomLookup<T: Real> {
    fn room_at(&self, p: &Point3<T>) -> Option<String>;
}

impl<T: Real, F> RoomLookup<T> for F
where
    F: Fn(&Point3<T>) -> Option<String>,
{
    fn room_at(&self, p: &Point3<T>) -> Option<String> {
        self(p)
    }
}

/// Room lookup that labels everything `"unknown"`.
pub struct NoRooms;

impl<T: Real> RoomLookup<T> for NoRooms {
    fn room_at(&self, _p: &Point3<T>) -> Option<String> {
        None
    }
}

pub const UNKNOWN_ROOM: &str = "unknown";

/// Metadata of a stored frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct FrameRecord<T> {
    pub image: ImageRef,
    pub frame_id: u64,
    pub timestamp: f64,
    pub camera_pose: Pose<T>,
    pub objects: Vec<ObjectId>,
}

/// Result of filtering one frame's detections.
#[derive(Clone, Debug, Default)]
pub struct Extraction<T: Real> {
    pub objects: Vec<FrameObject<T>>,
    pub dropped_low_confidence: usize,
    pub dropped_unknown_category: usize,
}

/// Accepted frame-object → graph-node assignments.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MatchResult {
    /// `(frame object index, existing id)`, ordered by frame object index.
    pub matches: Vec<(usize, ObjectId)>,
    /// Frame object indices to insert as new nodes, ascending.
    pub unmatched: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateReport {
    pub frame_id: u64,
    pub accepted: usize,
    pub dropped_low_confidence: usize,
    pub dropped_unknown_category: usize,
    pub matched: usize,
    pub inserted: usize,
    pub pairs: usize,
    pub new_pairs: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub objects: usize,
    pub edges: usize,
    pub frames: usize,
    pub image_refs: usize,
    /// images-per-edge → number of edges
    pub edge_image_histogram: BTreeMap<usize, usize>,
}

/// The evolving multi-modal scene graph: objects, image-labelled edges and the frame store.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphSnapshot<T>", into = "GraphSnapshot<T>")]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct SceneGraph<T: Real> {
    config: GraphConfig<T>,
    objects: BTreeMap<ObjectId, ObjectNode<T>>,
    edges: EdgeStore,
    frames: BTreeMap<ImageRef, FrameRecord<T>>,
    next_id: u64,
    last_frame: Option<u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"), deny_unknown_fields)]
struct GraphSnapshot<T: Real> {
    format_version: u32,
    config: GraphConfig<T>,
    next_id: u64,
    last_frame: Option<u64>,
    objects: Vec<ObjectNode<T>>,
    edge_store: EdgeStore,
    frames: Vec<FrameRecord<T>>,
}

impl<T: Real> From<SceneGraph<T>> for GraphSnapshot<T> {
    fn from(g: SceneGraph<T>) -> Self {
        GraphSnapshot {
            format_version: GRAPH_FORMAT_VERSION,
            config: g.config,
            next_id: g.next_id,
            last_frame: g.last_frame,
            objects: g.objects.into_values().collect(),
            edge_store: g.edges,
            frames: g.frames.into_values().collect(),
        }
    }
}

impl<T: Real> TryFrom<GraphSnapshot<T>> for SceneGraph<T> {
    type Error = GraphError;
    fn try_from(s: GraphSnapshot<T>) -> Result<Self, Self::Error> {
        if s.format_version != GRAPH_FORMAT_VERSION {
            return Err(GraphError::UnsupportedVersion(s.format_version));
        }
        let g = SceneGraph {
            config: s.config,
            objects: s.objects.into_iter().map(|o| (o.id, o)).collect(),
            edges: s.edge_store,
            frames: s.frames.into_iter().map(|f| (f.image, f)).collect(),
            next_id: s.next_id,
            last_frame: s.last_frame,
        };
        g.validate()?;
        Ok(g)
    }
}

impl<T: Real> Default for SceneGraph<T> {
    fn default() -> Self {
        Self::new(GraphConfig::default()).expect("default config is valid")
    }
}

fn voxel_key<T: Real>(p: &Point3<T>, voxel: T) -> [i64; 3] {
    let k = |v: T| (v / voxel).floor().to_i64().unwrap_or(i64::MAX);
    [k(p.x), k(p.y), k(p.z)]
}

/// Keeps the first point of every `voxel`-sized cell not already in `seen`.
fn dedup_into<T: Real>(points: &[Point3<T>], voxel: T, seen: &mut HashSet<[i64; 3]>) -> Vec<Point3<T>> {
    points.iter().filter(|p| seen.insert(voxel_key(p, voxel))).copied().collect()
}

/// Filters a frame's detections into frame-level objects.
///
/// Detections below `min_confidence` or with a category outside `vocab` are dropped and
/// counted. Room labels come from `rooms`.
pub fn extract_frame_objects<T: Real>(
    obs: &FrameObservation<T>,
    vocab: &Vocabulary,
    config: &GraphConfig<T>,
    rooms: &dyn RoomLookup<T>,
) -> Result<Extraction<T>, GraphError> {
    let mut out = Extraction::default();
    for (i, det) in obs.detections.iter().enumerate() {
        if det.cloud.is_empty() {
            return Err(GraphError::InvalidObservation(format!("detection {i} has an empty cloud")));
        }
        if det.embedding.len() != config.embedding_dim {
            return Err(GraphError::InvalidObservation(format!(
                "detection {i} embedding has dimension {}, expected {}",
                det.embedding.len(),
                config.embedding_dim
            )));
        }
        if !(det.confidence >= config.min_confidence) {
            out.dropped_low_confidence += 1;
            continue;
        }
        if !vocab.contains(&det.category) {
            out.dropped_unknown_category += 1;
            continue;
        }
        let mut seen = HashSet::new();
        let points = dedup_into(&det.cloud, config.dedup_voxel, &mut seen);
        let cloud = PointCloud::with_cell_size(points, T::of(crate::geometry::DEFAULT_INDEX_CELL))?;
        let position = cloud.centroid()?;
        let room = rooms.room_at(&position).unwrap_or_else(|| UNKNOWN_ROOM.to_string());
        out.objects.push(FrameObject {
            category: fold_term(&det.category),
            confidence: det.confidence,
            position,
            bbox: det.bbox,
            mask_ref: MaskRef { image: obs.image_ref, detection: i as u32 },
            cloud,
            embedding: det.embedding.clone(),
            room,
        });
    }
    Ok(out)
}

/// All unordered pairs of distinct ids whose frame positions lie within `theta`.
pub fn co_occurring_pairs<T: Real>(resolved: &[(ObjectId, Point3<T>)], theta: T) -> BTreeSet<IdPair> {
    let mut pairs = BTreeSet::new();
    for (i, (a, pa)) in resolved.iter().enumerate() {
        for (b, pb) in &resolved[i + 1..] {
            if let Some(pair) = IdPair::new(*a, *b) {
                if pa.distance(pb) <= theta {
                    pairs.insert(pair);
                }
            }
        }
    }
    pairs
}

impl<T: Real> SceneGraph<T> {
    /// The empty graph.
    pub fn new(config: GraphConfig<T>) -> Result<Self, GraphError> {
        config.validate()?;
        Ok(Self {
            config,
            objects: BTreeMap::new(),
            edges: EdgeStore::new(),
            frames: BTreeMap::new(),
            next_id: 0,
            last_frame: None,
        })
    }

    pub fn config(&self) -> &GraphConfig<T> {
        &self.config
    }

    pub fn objects(&self) -> &BTreeMap<ObjectId, ObjectNode<T>> {
        &self.objects
    }

    pub fn object(&self, id: ObjectId) -> Option<&ObjectNode<T>> {
        self.objects.get(&id)
    }

    pub fn edges(&self) -> &EdgeStore {
        &self.edges
    }

    pub fn frames(&self) -> &BTreeMap<ImageRef, FrameRecord<T>> {
        &self.frames
    }

    pub fn frame(&self, image: ImageRef) -> Option<&FrameRecord<T>> {
        self.frames.get(&image)
    }

    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    pub fn last_frame(&self) -> Option<u64> {
        self.last_frame
    }

    /// N_o
    pub fn object_count(&self) -> usize {
        self.objects.len()
    }

    /// N_e
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Matches frame objects against existing nodes.
    ///
    /// A pair is eligible when the categories agree or embeddings are similar enough, and
    /// the boxes overlap enough or the centroids are close enough. Eligible pairs are
    /// assigned greedily by descending `0.5·IoU + 0.5·cosine`, one node per frame object
    /// and one frame object per node.
    pub fn match_objects(&self, frame_objs: &[FrameObject<T>]) -> MatchResult {
        let half = T::of(0.5);
        let mut candidates: Vec<(T, usize, ObjectId)> = Vec::new();
        for (fi, fo) in frame_objs.iter().enumerate() {
            for node in self.objects.values() {
                let cos = cosine_similarity(&fo.embedding, &node.embedding);
                let semantic = fo.category == node.category || cos >= self.config.sim_min;
                if !semantic {
                    continue;
                }
                let iou = fo.bbox.iou(&node.bbox);
                let spatial = iou >= self.config.iou_min || fo.position.distance(&node.position) <= self.config.match_dist;
                if spatial {
                    candidates.push((half * iou + half * cos, fi, node.id));
                }
            }
        }
        candidates.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        let mut taken_frame = vec![false; frame_objs.len()];
        let mut taken_node = HashSet::new();
        let mut matches = Vec::new();
        for (_, fi, id) in candidates {
            if !taken_frame[fi] && !taken_node.contains(&id) {
                taken_frame[fi] = true;
                taken_node.insert(id);
                matches.push((fi, id));
            }
        }
        matches.sort();
        let unmatched = (0..frame_objs.len()).filter(|i| !taken_frame[*i]).collect();
        MatchResult { matches, unmatched }
    }

    /// Folds matched frame objects into their nodes and inserts the unmatched ones.
    ///
    /// Returns the resolved `(id, frame position)` of every frame object in input order.
    pub fn merge_objects(
        &mut self,
        frame_objs: Vec<FrameObject<T>>,
        result: &MatchResult,
        frame_id: u64,
    ) -> Result<Vec<(ObjectId, Point3<T>)>, GraphError> {
        for (fi, id) in &result.matches {
            if !self.objects.contains_key(id) {
                return Err(GraphError::Integrity(format!("match references missing object {id}")));
            }
            if *fi >= frame_objs.len() {
                return Err(GraphError::Integrity(format!("match references missing frame object {fi}")));
            }
        }
        if let Some(fi) = result.unmatched.iter().find(|fi| **fi >= frame_objs.len()) {
            return Err(GraphError::Integrity(format!("unmatched index {fi} out of range")));
        }
        let mut assigned: Vec<Option<ObjectId>> = vec![None; frame_objs.len()];
        for (fi, id) in &result.matches {
            assigned[*fi] = Some(*id);
        }
        let mut resolved = Vec::with_capacity(frame_objs.len());
        for (fi, fo) in frame_objs.into_iter().enumerate() {
            let position = fo.position;
            let id = match assigned[fi] {
                Some(id) => {
                    self.merge_into(id, fo, frame_id)?;
                    id
                }
                None if result.unmatched.contains(&fi) => self.insert(fo, frame_id)?,
                None => continue,
            };
            resolved.push((id, position));
        }
        Ok(resolved)
    }

    fn merge_into(&mut self, id: ObjectId, fo: FrameObject<T>, frame_id: u64) -> Result<(), GraphError> {
        let voxel = self.config.dedup_voxel;
        let node = self.objects.get_mut(&id).expect("checked by caller");
        let mut seen: HashSet<[i64; 3]> = node.cloud.points().iter().map(|p| voxel_key(p, voxel)).collect();
        let fresh = dedup_into(fo.cloud.points(), voxel, &mut seen);
        node.cloud.extend(fresh)?;
        node.position = node.cloud.centroid()?;
        node.bbox = node.bbox.union(&fo.bbox);
        let n = T::of(f64::from(node.observations));
        let inv = T::one() / (n + T::one());
        for (e, x) in node.embedding.iter_mut().zip(&fo.embedding) {
            *e = (*e * n + *x) * inv;
        }
        node.observations += 1;
        let vote = node.category_votes.entry(fo.category).or_insert(CategoryVote { count: 0, last_frame: frame_id });
        vote.count += 1;
        vote.last_frame = frame_id;
        if let Some(c) = node.elect_category() {
            node.category = c.to_string();
        }
        node.room = fo.room;
        node.mask_ref = Some(fo.mask_ref);
        node.last_frame = frame_id;
        Ok(())
    }

    fn insert(&mut self, fo: FrameObject<T>, frame_id: u64) -> Result<ObjectId, GraphError> {
        let id = ObjectId(self.next_id);
        self.next_id += 1;
        let mut votes = BTreeMap::new();
        votes.insert(fo.category.clone(), CategoryVote { count: 1, last_frame: frame_id });
        self.objects.insert(
            id,
            ObjectNode {
                id,
                category: fo.category,
                position: fo.position,
                bbox: fo.bbox,
                mask_ref: Some(fo.mask_ref),
                cloud: fo.cloud,
                embedding: fo.embedding,
                room: fo.room,
                observations: 1,
                category_votes: votes,
                first_frame: frame_id,
                last_frame: frame_id,
            },
        );
        Ok(id)
    }

    /// Integrates one frame: extract → match → merge → co-occurring pairs → edges.
    pub fn update(
        &mut self,
        obs: &FrameObservation<T>,
        vocab: &Vocabulary,
        rooms: &dyn RoomLookup<T>,
    ) -> Result<UpdateReport, GraphError> {
        if let Some(last) = self.last_frame {
            if obs.frame_id <= last {
                return Err(GraphError::NonMonotoneFrame { last, got: obs.frame_id });
            }
        }
        if self.frames.contains_key(&obs.image_ref) {
            return Err(GraphError::DuplicateImage(obs.image_ref));
        }
        let extraction = extract_frame_objects(obs, vocab, &self.config, rooms)?;
        let accepted = extraction.objects.len();
        let matching = self.match_objects(&extraction.objects);
        let resolved = self.merge_objects(extraction.objects, &matching, obs.frame_id)?;
        let pairs = co_occurring_pairs(&resolved, self.config.adjacency_threshold);
        let new_pairs = self.edges.update_edges(&pairs, obs.image_ref);
        let mut ids: Vec<ObjectId> = resolved.iter().map(|(id, _)| *id).collect();
        ids.sort();
        ids.dedup();
        self.frames.insert(
            obs.image_ref,
            FrameRecord {
                image: obs.image_ref,
                frame_id: obs.frame_id,
                timestamp: obs.timestamp,
                camera_pose: obs.camera_pose,
                objects: ids,
            },
        );
        self.last_frame = Some(obs.frame_id);
        Ok(UpdateReport {
            frame_id: obs.frame_id,
            accepted,
            dropped_low_confidence: extraction.dropped_low_confidence,
            dropped_unknown_category: extraction.dropped_unknown_category,
            matched: matching.matches.len(),
            inserted: matching.unmatched.len(),
            pairs: pairs.len(),
            new_pairs,
        })
    }

    pub fn stats(&self) -> GraphStats {
        GraphStats {
            objects: self.objects.len(),
            edges: self.edges.len(),
            frames: self.frames.len(),
            image_refs: self.edges.total_image_refs(),
            edge_image_histogram: self.edges.image_count_histogram(),
        }
    }

    /// Full invariant scan.
    pub fn validate(&self) -> Result<(), GraphError> {
        self.config.validate()?;
        let integrity = |m: String| Err(GraphError::Integrity(m));
        for (id, node) in &self.objects {
            if *id != node.id {
                return integrity(format!("object keyed {id} carries id {}", node.id));
            }
            if id.0 >= self.next_id {
                return integrity(format!("object {id} not below next_id {}", self.next_id));
            }
            if node.embedding.len() != self.config.embedding_dim {
                return integrity(format!("object {id} embedding dimension {}", node.embedding.len()));
            }
            let c = node.cloud.centroid().map_err(|_| GraphError::Integrity(format!("object {id} has an empty cloud")))?;
            let scale = T::one().max(c.norm());
            let tol = T::of(1e-6).max(T::epsilon() * T::of(1e3)) * scale;
            if node.position.distance(&c) > tol {
                return integrity(format!("object {id} position is not the cloud centroid"));
            }
        }
        self.edges.check_consistency().map_err(GraphError::Integrity)?;
        for (pair, images) in self.edges.edges() {
            for end in [pair.low(), pair.high()] {
                if !self.objects.contains_key(&end) {
                    return integrity(format!("edge {pair} references missing object {end}"));
                }
            }
            if let Some(image) = images.iter().find(|i| !self.frames.contains_key(i)) {
                return integrity(format!("edge {pair} references unknown frame {image}"));
            }
        }
        for (image, rec) in &self.frames {
            if *image != rec.image {
                return integrity(format!("frame keyed {image} carries {}", rec.image));
            }
            if self.last_frame.is_some_and(|l| rec.frame_id > l) {
                return integrity(format!("frame {image} is newer than last_frame"));
            }
        }
        Ok(())
    }

    /// Canonical JSON snapshot.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        serde_json::from_str(text).map_err(|e| GraphError::Snapshot(e.to_string()))
    }

    /// Hex SHA-256 of the canonical snapshot.
    pub fn snapshot_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

/// Helper for constructing detections from a cloud.
pub fn detection_bbox<T: Real>(cloud: &[Point3<T>]) -> Option<BBox<T>> {
    BBox::from_points(cloud)
}
