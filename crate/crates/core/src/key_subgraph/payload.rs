use serde::{Deserialize, Serialize};

use super::prune::KeySubgraph;
use super::KeyError;
use crate::scalar::Real;
use crate::scene_graph::{IdPair, ImageRef, ObjectId, ObjectNode, SceneGraph};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayloadObject {
    pub id: ObjectId,
    pub category: String,
    pub position: [f64; 3],
    pub room: String,
}

impl PayloadObject {
    fn of<T: Real>(node: &ObjectNode<T>) -> Self {
        let round = |v: f64| (v * 100.0).round() / 100.0;
        let [x, y, z] = node.position.to_array_f64();
        Self { id: node.id, category: node.category.clone(), position: [round(x), round(y), round(z)], room: node.room.clone() }
    }
}

/// A selected frame and the pairs it certifies.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayloadImage {
    pub image: ImageRef,
    pub frame_id: u64,
    pub pairs: Vec<IdPair>,
}

/// Key-subgraph section of a reasoner request.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyPayload {
    pub related: Vec<ObjectId>,
    pub objects: Vec<PayloadObject>,
    pub images: Vec<PayloadImage>,
}

impl KeyPayload {
    pub fn image_count(&self) -> usize {
        self.images.len()
    }
}

pub fn assemble_key_prompt<T: Real>(key: &KeySubgraph, graph: &SceneGraph<T>) -> Result<KeyPayload, KeyError> {
    let objects = key
        .key_objects
        .iter()
        .map(|id| graph.object(*id).map(PayloadObject::of).ok_or(KeyError::UnknownObject(*id)))
        .collect::<Result<_, _>>()?;
    let images = key
        .selection
        .iter()
        .map(|image| {
            let frame = graph.frame(*image).ok_or(KeyError::MissingFrame(*image))?;
            Ok(PayloadImage { image: *image, frame_id: frame.frame_id, pairs: key.pairs_of(*image) })
        })
        .collect::<Result<_, KeyError>>()?;
    Ok(KeyPayload { related: key.related_objects.iter().copied().collect(), objects, images })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayloadEdge {
    pub pair: IdPair,
    pub images: Vec<ImageRef>,
}

/// Every object and every edge with all of its images: the unpruned baseline.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FullGraphPayload {
    pub objects: Vec<PayloadObject>,
    pub edges: Vec<PayloadEdge>,
}

pub fn full_graph_payload<T: Real>(graph: &SceneGraph<T>) -> FullGraphPayload {
    FullGraphPayload {
        objects: graph.objects().values().map(PayloadObject::of).collect(),
        edges: graph
            .edges()
            .edges()
            .map(|(pair, images)| PayloadEdge { pair: *pair, images: images.iter().copied().collect() })
            .collect(),
    }
}

/// Rough prompt-token count: one token per four characters, rounded up.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}
