use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;
use crate::scene_graph::{IdPair, ObjectId, SceneGraph};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompactNode {
    pub id: ObjectId,
    pub category: String,
}

/// Ids and categories plus an undirected adjacency list. Carries no image data.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompactGraph {
    pub nodes: Vec<CompactNode>,
    pub adjacency: BTreeMap<ObjectId, Vec<ObjectId>>,
}

impl CompactGraph {
    pub fn contains(&self, id: ObjectId) -> bool {
        self.nodes.binary_search_by_key(&id, |n| n.id).is_ok()
    }

    pub fn category_of(&self, id: ObjectId) -> Option<&str> {
        self.nodes.binary_search_by_key(&id, |n| n.id).ok().map(|i| self.nodes[i].category.as_str())
    }

    /// The pair set encoded by the adjacency list.
    pub fn pairs(&self) -> BTreeSet<IdPair> {
        self.adjacency
            .iter()
            .flat_map(|(a, ns)| ns.iter().filter_map(move |b| IdPair::new(*a, *b)))
            .collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.adjacency.iter().all(|(a, ns)| {
            ns.iter().all(|b| self.adjacency.get(b).is_some_and(|back| back.binary_search(a).is_ok()))
        })
    }
}

pub fn compress<T: Real>(graph: &SceneGraph<T>) -> CompactGraph {
    let nodes = graph.objects().values().map(|o| CompactNode { id: o.id, category: o.category.clone() }).collect();
    let adjacency = graph
        .edges()
        .neighbors()
        .into_iter()
        .map(|(id, ns)| (id, ns.into_iter().collect()))
        .collect();
    CompactGraph { nodes, adjacency }
}
