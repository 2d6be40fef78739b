use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::types::{IdPair, ImageRef, ObjectId};

/// Pair → images in which the pair co-occurs, plus the inverse image → pairs map.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "EdgeRepr", into = "EdgeRepr")]
pub struct EdgeStore {
    edges: BTreeMap<IdPair, BTreeSet<ImageRef>>,
    assoc: BTreeMap<ImageRef, BTreeSet<IdPair>>,
}

#[derive(Serialize, Deserialize)]
struct EdgeEntry {
    pair: IdPair,
    images: Vec<ImageRef>,
}

#[derive(Serialize, Deserialize)]
struct AssocEntry {
    image: ImageRef,
    pairs: Vec<IdPair>,
}

#[derive(Serialize, Deserialize)]
struct EdgeRepr {
    edges: Vec<EdgeEntry>,
    assoc: Vec<AssocEntry>,
}

impl From<EdgeStore> for EdgeRepr {
    fn from(s: EdgeStore) -> Self {
        EdgeRepr {
            edges: s
                .edges
                .into_iter()
                .map(|(pair, images)| EdgeEntry { pair, images: images.into_iter().collect() })
                .collect(),
            assoc: s
                .assoc
                .into_iter()
                .map(|(image, pairs)| AssocEntry { image, pairs: pairs.into_iter().collect() })
                .collect(),
        }
    }
}

impl TryFrom<EdgeRepr> for EdgeStore {
    type Error = String;
    fn try_from(r: EdgeRepr) -> Result<Self, Self::Error> {
        let store = EdgeStore {
            edges: r.edges.into_iter().map(|e| (e.pair, e.images.into_iter().collect())).collect(),
            assoc: r.assoc.into_iter().map(|a| (a.image, a.pairs.into_iter().collect())).collect(),
        };
        store.check_consistency()?;
        Ok(store)
    }
}

impl EdgeStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of stored pairs.
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains_pair(&self, pair: &IdPair) -> bool {
        self.edges.contains_key(pair)
    }

    pub fn images_of(&self, pair: &IdPair) -> Option<&BTreeSet<ImageRef>> {
        self.edges.get(pair)
    }

    pub fn pairs_of(&self, image: &ImageRef) -> Option<&BTreeSet<IdPair>> {
        self.assoc.get(image)
    }

    pub fn edges(&self) -> impl Iterator<Item = (&IdPair, &BTreeSet<ImageRef>)> {
        self.edges.iter()
    }

    pub fn assoc(&self) -> impl Iterator<Item = (&ImageRef, &BTreeSet<IdPair>)> {
        self.assoc.iter()
    }

    pub fn pairs(&self) -> impl Iterator<Item = &IdPair> {
        self.edges.keys()
    }

    /// Records that every pair in `pairs` co-occurs in `image`.
    ///
    /// New pairs start with `{image}`; existing pairs gain `image` with set semantics.
    /// Returns how many pairs were new.
    pub fn update_edges<'a, I>(&mut self, pairs: I, image: ImageRef) -> usize
    where
        I: IntoIterator<Item = &'a IdPair>,
    {
        let mut fresh = 0;
        for pair in pairs {
            let images = self.edges.entry(*pair).or_insert_with(|| {
                fresh += 1;
                BTreeSet::new()
            });
            images.insert(image);
            self.assoc.entry(image).or_default().insert(*pair);
        }
        fresh
    }

    /// Total image references across all edges.
    pub fn total_image_refs(&self) -> usize {
        self.edges.values().map(BTreeSet::len).sum()
    }

    /// Histogram: number of images per edge → number of edges.
    pub fn image_count_histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for images in self.edges.values() {
            *h.entry(images.len()).or_insert(0) += 1;
        }
        h
    }

    pub(crate) fn neighbors(&self) -> BTreeMap<ObjectId, BTreeSet<ObjectId>> {
        let mut adj: BTreeMap<ObjectId, BTreeSet<ObjectId>> = BTreeMap::new();
        for pair in self.edges.keys() {
            adj.entry(pair.low()).or_default().insert(pair.high());
            adj.entry(pair.high()).or_default().insert(pair.low());
        }
        adj
    }

    /// Full scan of the edge/assoc invariants.
    pub fn check_consistency(&self) -> Result<(), String> {
        for (pair, images) in &self.edges {
            if images.is_empty() {
                return Err(format!("edge {pair} has no images"));
            }
            for image in images {
                if !self.assoc.get(image).is_some_and(|p| p.contains(pair)) {
                    return Err(format!("edge {pair} lists {image} but assoc does not"));
                }
            }
        }
        for (image, pairs) in &self.assoc {
            if pairs.is_empty() {
                return Err(format!("assoc {image} is empty"));
            }
            for pair in pairs {
                if !self.edges.get(pair).is_some_and(|i| i.contains(image)) {
                    return Err(format!("assoc {image} lists {pair} but edge does not"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(a: u64, b: u64) -> IdPair {
        IdPair::new(ObjectId(a), ObjectId(b)).unwrap()
    }

    #[test]
    fn new_pair_gets_singleton_image_set() {
        let mut s = EdgeStore::new();
        let fresh = s.update_edges(&[pair(1, 2)], ImageRef(7));
        assert_eq!(fresh, 1);
        assert_eq!(s.images_of(&pair(1, 2)).unwrap().iter().copied().collect::<Vec<_>>(), vec![ImageRef(7)]);
        assert!(s.pairs_of(&ImageRef(7)).unwrap().contains(&pair(1, 2)));
    }

    #[test]
    fn existing_pair_grows_with_set_semantics() {
        let mut s = EdgeStore::new();
        s.update_edges(&[pair(1, 2)], ImageRef(1));
        assert_eq!(s.update_edges(&[pair(1, 2)], ImageRef(2)), 0);
        s.update_edges(&[pair(1, 2)], ImageRef(2));
        assert_eq!(s.images_of(&pair(1, 2)).unwrap().len(), 2);
        assert_eq!(s.len(), 1);
        s.check_consistency().unwrap();
    }

    #[test]
    fn triangle_frame_has_three_pairs() {
        let mut s = EdgeStore::new();
        s.update_edges(&[pair(1, 2), pair(1, 3), pair(2, 3)], ImageRef(4));
        assert_eq!(s.pairs_of(&ImageRef(4)).unwrap().len(), 3);
    }

    #[test]
    fn inconsistent_snapshot_is_rejected() {
        let text = r#"{"edges":[{"pair":[1,2],"images":[3]}],"assoc":[]}"#;
        assert!(serde_json::from_str::<EdgeStore>(text).is_err());
        let ok = r#"{"edges":[{"pair":[1,2],"images":[3]}],"assoc":[{"image":3,"pairs":[[1,2]]}]}"#;
        assert!(serde_json::from_str::<EdgeStore>(ok).is_ok());
    }
}
