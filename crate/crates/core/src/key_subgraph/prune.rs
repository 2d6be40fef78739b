use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::KeyError;
use crate::scalar::Real;
use crate::scene_graph::{EdgeStore, IdPair, ImageRef, ObjectId, SceneGraph};

/// Related objects, their neighbours, and one certifying image per relevant pair.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeySubgraph {
    pub key_objects: BTreeSet<ObjectId>,
    pub key_edges: BTreeMap<IdPair, ImageRef>,
    pub related_objects: BTreeSet<ObjectId>,
    /// Images in the order the cover picked them.
    pub selection: Vec<ImageRef>,
}

impl KeySubgraph {
    pub fn image_count(&self) -> usize {
        self.selection.len()
    }

    /// Pairs certified by `image`, ascending.
    pub fn pairs_of(&self, image: ImageRef) -> Vec<IdPair> {
        self.key_edges.iter().filter(|(_, i)| **i == image).map(|(p, _)| *p).collect()
    }
}

/// Greedy cover over the graph's edge store, ordering tied images by frame id.
pub fn greedy_prune<T: Real>(graph: &SceneGraph<T>, related: &BTreeSet<ObjectId>) -> Result<KeySubgraph, KeyError> {
    if let Some(missing) = related.iter().find(|id| graph.object(**id).is_none()) {
        return Err(KeyError::UnknownObject(*missing));
    }
    greedy_prune_store(graph.edges(), related, |image| graph.frame(image).map(|f| f.frame_id))
}

/// Filter then cover.
///
/// The universe is every stored pair with at least one endpoint in `related`. Each round
/// picks the image whose associated pairs cover the most still-uncovered pairs; ties go
/// to the oldest frame, then to the lowest image reference. Images without a known
/// frame sort after all others.
pub fn greedy_prune_store<F>(
    edges: &EdgeStore,
    related: &BTreeSet<ObjectId>,
    frame_of: F,
) -> Result<KeySubgraph, KeyError>
where
    F: Fn(ImageRef) -> Option<u64>,
{
    let mut key_objects = related.clone();
    let mut uncovered = BTreeSet::new();
    let mut candidates = BTreeSet::new();
    for (pair, images) in edges.edges() {
        if related.contains(&pair.low()) || related.contains(&pair.high()) {
            uncovered.insert(*pair);
            key_objects.insert(pair.low());
            key_objects.insert(pair.high());
            candidates.extend(images.iter().copied());
        }
    }

    let mut order: Vec<(u64, ImageRef)> =
        candidates.into_iter().map(|i| (frame_of(i).unwrap_or(u64::MAX), i)).collect();
    order.sort_unstable();

    let mut key_edges = BTreeMap::new();
    let mut selection = Vec::new();
    while !uncovered.is_empty() {
        let mut best: Option<(usize, ImageRef)> = None;
        for (_, image) in &order {
            let gain = edges.pairs_of(image).map_or(0, |ps| ps.iter().filter(|p| uncovered.contains(*p)).count());
            if gain > best.map_or(0, |b| b.0) {
                best = Some((gain, *image));
            }
        }
        let Some((_, image)) = best else {
            let pair = uncovered.first().copied().unwrap_or_else(|| unreachable!());
            return Err(KeyError::Integrity(format!("pair {pair} has no image in the association map")));
        };
        for pair in edges.pairs_of(&image).into_iter().flatten() {
            if uncovered.remove(pair) {
                key_edges.insert(*pair, image);
            }
        }
        selection.push(image);
    }

    Ok(KeySubgraph { key_objects, key_edges, related_objects: related.clone(), selection })
}
