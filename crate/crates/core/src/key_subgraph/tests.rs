use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use super::*;
use crate::geometry::Point3;
use crate::reasoning::{
    FocusMode, Goal, GoalPayload, MockReasoner, MockScript, Reasoner, ReasonerError, ReasonerRequest,
    ReasonerResponse, Vocabulary,
};
use crate::scene_graph::{
    BBox, Detection, EdgeStore, FrameObservation, IdPair, ImageRef, NoRooms, ObjectId, Pose, SceneGraph,
};

fn detection(category: &str, center: Point3<f64>, slot: usize) -> Detection<f64> {
    let cloud: Vec<Point3<f64>> = (-1..=1)
        .flat_map(|i| (-1..=1).map(move |j| center + Point3::new(i as f64 * 0.1, 0.0, j as f64 * 0.1)))
        .collect();
    let mut embedding = vec![0.0; 16];
    embedding[slot % 16] = 1.0;
    Detection { category: category.into(), confidence: 0.9, bbox: BBox::from_points(&cloud).unwrap(), cloud, embedding }
}

fn observe(graph: &mut SceneGraph<f64>, frame_id: u64, dets: Vec<Detection<f64>>) {
    let obs = FrameObservation {
        frame_id,
        timestamp: frame_id as f64,
        camera_pose: Pose { position: Point3::origin(), yaw: 0.0 },
        detections: dets,
        image_ref: ImageRef(100 + frame_id),
    };
    graph.update(&obs, &Vocabulary::from_seed(["chair", "table", "lamp", "sofa"]), &NoRooms).unwrap();
}

/// chair(0)–table(1) seen together in frame 1, table(1)–lamp(2) in frame 2.
fn chain() -> SceneGraph<f64> {
    let mut g = SceneGraph::<f64>::default();
    let (chair, table, lamp) = (Point3::new(0.0, 0.5, 0.0), Point3::new(1.0, 0.5, 0.0), Point3::new(2.5, 0.5, 0.0));
    observe(&mut g, 1, vec![detection("chair", chair, 0), detection("table", table, 1)]);
    observe(&mut g, 2, vec![detection("table", table, 1), detection("lamp", lamp, 2)]);
    g
}

fn ids(v: &[u64]) -> BTreeSet<ObjectId> {
    v.iter().copied().map(ObjectId).collect()
}

fn category_goal(term: &str) -> GoalPayload {
    Goal::category(term).unwrap().into()
}

struct Fixed(Vec<ObjectId>);

impl Reasoner for Fixed {
    fn focus(&mut self, _: &FocusRequest) -> Result<Vec<ObjectId>, ReasonerError> {
        Ok(self.0.clone())
    }

    fn decide(&mut self, request: &ReasonerRequest) -> Result<ReasonerResponse, ReasonerError> {
        Err(ReasonerError::Exhausted(request.step))
    }
}

#[test]
fn compress_empty_graph() {
    let c = compress(&SceneGraph::<f64>::default());
    assert!(c.nodes.is_empty() && c.adjacency.is_empty());
}

#[test]
fn compress_chain_adjacency() {
    let g = chain();
    let c = compress(&g);
    assert_eq!(c.nodes.len(), 3);
    assert_eq!(c.adjacency[&ObjectId(1)], vec![ObjectId(0), ObjectId(2)]);
    assert_eq!(c.category_of(ObjectId(2)), Some("lamp"));
    assert!(c.is_symmetric());
    let json = serde_json::to_string(&c).unwrap();
    assert!(!json.contains("image"), "compact graph carries no image data: {json}");
}

#[test]
fn focus_returns_scripted_ids() {
    let c = compress(&chain());
    let mut r = Fixed(vec![ObjectId(0), ObjectId(2)]);
    let f = focus(&c, &category_goal("lamp"), &mut r, 5, 1).unwrap();
    assert_eq!(f.related, ids(&[0, 2]));
    assert!(f.discarded.is_empty() && !f.fallback);
}

#[test]
fn focus_discards_unknown_and_excess_ids() {
    let c = compress(&chain());
    let mut r = Fixed(vec![ObjectId(9), ObjectId(1), ObjectId(1), ObjectId(0), ObjectId(2)]);
    let f = focus(&c, &category_goal("lamp"), &mut r, 2, 1).unwrap();
    assert_eq!(f.related, ids(&[0, 1]));
    assert_eq!(f.discarded, vec![ObjectId(9), ObjectId(1), ObjectId(2)]);
}

#[test]
fn focus_falls_back_to_category_match() {
    let c = compress(&chain());
    let mut r = Fixed(vec![ObjectId(42)]);
    let f = focus(&c, &category_goal("table"), &mut r, 5, 1).unwrap();
    assert!(f.fallback);
    assert_eq!(f.related, ids(&[1]));
}

#[test]
fn fallback_ranks_exact_before_word_match() {
    let c = CompactGraph {
        nodes: vec![
            CompactNode { id: ObjectId(0), category: "coffee table".into() },
            CompactNode { id: ObjectId(1), category: "lamp".into() },
            CompactNode { id: ObjectId(2), category: "table".into() },
            CompactNode { id: ObjectId(3), category: "tablet".into() },
        ],
        adjacency: BTreeMap::new(),
    };
    assert_eq!(fallback_focus(&c, &category_goal("table"), 1), ids(&[2]));
    assert_eq!(fallback_focus(&c, &category_goal("table"), 5), ids(&[0, 2]));
    let language: GoalPayload = Goal::language("the lamp by the window").unwrap().into();
    assert_eq!(fallback_focus(&c, &language, 5), ids(&[1]));
}

#[test]
fn mock_focus_modes() {
    let c = compress(&chain());
    let mut goal_match = MockReasoner::new(MockScript::oracle_greedy());
    let f = focus(&c, &category_goal("lamp"), &mut goal_match, 5, 3).unwrap();
    assert_eq!(f.related, ids(&[1, 2]));
    assert_eq!(goal_match.focus_requests()[0].step, 3);
    let mut none = MockReasoner::new(MockScript { focus: FocusMode::None, ..MockScript::default() });
    assert!(focus(&c, &category_goal("lamp"), &mut none, 5, 1).unwrap().fallback);
}

#[test]
fn prune_over_graph_rejects_unknown_related() {
    assert_eq!(greedy_prune(&chain(), &ids(&[7])), Err(KeyError::UnknownObject(ObjectId(7))));
}

#[test]
fn prune_and_payload_follow_the_cover() {
    let g = chain();
    let key = greedy_prune(&g, &ids(&[2])).unwrap();
    assert_eq!(key.key_objects, ids(&[1, 2]));
    assert_eq!(key.selection, vec![ImageRef(102)]);
    let payload = assemble_key_prompt(&key, &g).unwrap();
    assert_eq!(payload.image_count(), 1);
    assert_eq!(payload.images[0].frame_id, 2);
    assert_eq!(payload.images[0].pairs, vec![IdPair::new(ObjectId(1), ObjectId(2)).unwrap()]);
    assert_eq!(payload.objects.iter().map(|o| o.category.as_str()).collect::<Vec<_>>(), ["table", "lamp"]);

    let all = greedy_prune(&g, &ids(&[0, 1, 2])).unwrap();
    assert_eq!(assemble_key_prompt(&all, &g).unwrap().image_count(), 2);
}

#[test]
fn empty_key_payload_has_objects_only() {
    let g = chain();
    let key = greedy_prune(&g, &BTreeSet::new()).unwrap();
    let payload = assemble_key_prompt(&key, &g).unwrap();
    assert!(payload.images.is_empty() && payload.objects.is_empty());
}

#[test]
fn missing_frame_is_an_error() {
    let g = chain();
    let mut key = greedy_prune(&g, &ids(&[0])).unwrap();
    key.selection.push(ImageRef(999));
    assert_eq!(assemble_key_prompt(&key, &g), Err(KeyError::MissingFrame(ImageRef(999))));
}

#[test]
fn images_without_frames_still_cover() {
    let mut s = EdgeStore::new();
    s.update_edges(&[IdPair::new(ObjectId(1), ObjectId(2)).unwrap()], ImageRef(3));
    let k = greedy_prune_store(&s, &ids(&[1]), |_| None).unwrap();
    assert_eq!(k.selection, vec![ImageRef(3)]);
}

#[test]
fn token_estimate_rounds_up() {
    assert_eq!(estimate_tokens(""), 0);
    assert_eq!(estimate_tokens("abcd"), 1);
    assert_eq!(estimate_tokens("abcde"), 2);
    let g = chain();
    let full = full_graph_payload(&g);
    assert_eq!((full.objects.len(), full.edges.len()), (3, 2));
}

fn store_strategy() -> impl Strategy<Value = (Vec<(u64, u64, u64)>, BTreeSet<u64>)> {
    (
        prop::collection::vec((0u64..6, 0u64..6, 0u64..12), 1..30),
        prop::collection::btree_set(0u64..6, 0..4),
    )
}

fn build_store(raw: &[(u64, u64, u64)]) -> EdgeStore {
    let mut s = EdgeStore::new();
    for &(a, b, i) in raw {
        if let Some(p) = IdPair::new(ObjectId(a), ObjectId(b)) {
            s.update_edges([&p], ImageRef(i));
        }
    }
    s
}

fn optimum(s: &EdgeStore, universe: &BTreeSet<IdPair>) -> usize {
    let images: Vec<&BTreeSet<IdPair>> = s.assoc().map(|(_, ps)| ps).collect();
    (0u32..1 << images.len())
        .filter(|mask| {
            universe.iter().all(|p| (0..images.len()).any(|i| mask & (1 << i) != 0 && images[i].contains(p)))
        })
        .map(u32::count_ones)
        .min()
        .unwrap() as usize
}

proptest! {
    #[test]
    fn compress_matches_edge_domain(frames in prop::collection::vec(prop::collection::btree_set(0u64..8, 0..5), 0..6)) {
        let mut g = SceneGraph::<f64>::default();
        let cats = ["chair", "table", "lamp", "sofa"];
        for (f, objects) in frames.iter().enumerate() {
            let dets = objects
                .iter()
                .map(|&o| detection(cats[o as usize % 4], Point3::new(o as f64 * 0.9, 0.5, 0.0), o as usize))
                .collect();
            observe(&mut g, f as u64 + 1, dets);
        }
        let c = compress(&g);
        prop_assert!(c.is_symmetric());
        let dom: BTreeSet<IdPair> = g.edges().pairs().copied().collect();
        prop_assert_eq!(c.pairs(), dom);
        prop_assert_eq!(c.nodes.len(), g.object_count());
        for ns in c.adjacency.values() {
            prop_assert!(ns.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(ns.iter().all(|n| c.contains(*n)));
        }
    }

    #[test]
    fn greedy_cover_is_complete_and_near_optimal((raw, related) in store_strategy()) {
        let s = build_store(&raw);
        let related: BTreeSet<ObjectId> = related.into_iter().map(ObjectId).collect();
        let key = greedy_prune_store(&s, &related, |i| Some(i.0 % 3)).unwrap();
        let universe: BTreeSet<IdPair> =
            s.pairs().filter(|p| related.contains(&p.low()) || related.contains(&p.high())).copied().collect();
        prop_assert_eq!(key.key_edges.keys().copied().collect::<BTreeSet<_>>(), universe.clone());
        for (p, i) in &key.key_edges {
            prop_assert!(s.pairs_of(i).is_some_and(|ps| ps.contains(p)));
            prop_assert!(related.contains(&p.low()) || related.contains(&p.high()));
        }
        prop_assert!(key.related_objects.is_subset(&key.key_objects));
        prop_assert!(key.image_count() <= universe.len());
        let opt = optimum(&s, &universe) as f64;
        prop_assert!(key.image_count() as f64 <= (12f64.ln() + 1.0) * opt);
        let again = greedy_prune_store(&s, &related, |i| Some(i.0 % 3)).unwrap();
        prop_assert_eq!(again, key);
    }

    #[test]
    fn focus_stays_inside_graph(ret in prop::collection::vec(0u64..10, 0..8), k in 1usize..6) {
        let c = compress(&chain());
        let mut r = Fixed(ret.into_iter().map(ObjectId).collect());
        let f = focus(&c, &category_goal("chair"), &mut r, k, 1).unwrap();
        prop_assert!(f.related.len() <= k);
        prop_assert!(f.related.iter().all(|id| c.contains(*id)));
    }
}
