use proptest::prelude::*;

use super::*;
use crate::geometry::{Point3, PointCloud};
use crate::reasoning::Vocabulary;

const DIM: usize = 16;

fn embedding(seed: u64) -> Vec<f64> {
    // one-hot-ish deterministic vector
    let mut e = vec![0.0; DIM];
    e[(seed as usize) % DIM] = 1.0;
    e[(seed as usize * 7 + 3) % DIM] += 0.5;
    e
}

/// A 5×5×5 lattice of points with spacing 0.1 around `center`.
fn cube(center: Point3<f64>) -> Vec<Point3<f64>> {
    let mut pts = Vec::new();
    for i in -2..=2 {
        for j in -2..=2 {
            for k in -2..=2 {
                pts.push(center + Point3::new(i as f64 * 0.1, j as f64 * 0.1, k as f64 * 0.1));
            }
        }
    }
    pts
}

fn det(category: &str, center: Point3<f64>, seed: u64) -> Detection<f64> {
    let cloud = cube(center);
    Detection {
        category: category.to_string(),
        confidence: 0.9,
        bbox: detection_bbox(&cloud).unwrap(),
        cloud,
        embedding: embedding(seed),
    }
}

fn frame(id: u64, detections: Vec<Detection<f64>>) -> FrameObservation<f64> {
    FrameObservation {
        frame_id: id,
        timestamp: id as f64 * 0.5,
        camera_pose: Pose { position: Point3::new(0.0, 1.5, 0.0), yaw: 0.0 },
        detections,
        image_ref: ImageRef(1000 + id),
    }
}

fn vocab() -> Vocabulary {
    Vocabulary::from_seed(["chair", "table", "sofa", "lamp", "plant", "tv"])
}

fn frame_objects(graph: &SceneGraph<f64>, obs: &FrameObservation<f64>) -> Vec<FrameObject<f64>> {
    extract_frame_objects(obs, &vocab(), graph.config(), &NoRooms).unwrap().objects
}

#[test]
fn extract_empty_frame() {
    let g = SceneGraph::<f64>::default();
    assert!(frame_objects(&g, &frame(1, vec![])).is_empty());
}

#[test]
fn extract_drops_low_confidence() {
    let g = SceneGraph::<f64>::default();
    let mut low = det("lamp", Point3::new(3.0, 0.5, 0.0), 3);
    low.confidence = 0.1;
    let obs = frame(1, vec![det("chair", Point3::origin(), 1), low, det("table", Point3::new(1.0, 0.5, 0.0), 2)]);
    let ex = extract_frame_objects(&obs, &vocab(), g.config(), &NoRooms).unwrap();
    assert_eq!(ex.objects.len(), 2);
    assert_eq!(ex.dropped_low_confidence, 1);
}

#[test]
fn extract_respects_vocabulary_growth() {
    let g = SceneGraph::<f64>::default();
    let obs = frame(1, vec![det("Wicker Hamper", Point3::origin(), 4)]);
    let mut v = vocab();
    let ex = extract_frame_objects(&obs, &v, g.config(), &NoRooms).unwrap();
    assert!(ex.objects.is_empty());
    assert_eq!(ex.dropped_unknown_category, 1);
    v.propose("wicker hamper", 1);
    let ex = extract_frame_objects(&obs, &v, g.config(), &NoRooms).unwrap();
    assert_eq!(ex.objects.len(), 1);
    assert_eq!(ex.objects[0].category, "wicker hamper");
}

#[test]
fn extract_assigns_rooms() {
    let g = SceneGraph::<f64>::default();
    let rooms = |p: &Point3<f64>| Some(if p.x < 2.0 { "kitchen".to_string() } else { "hall".to_string() });
    let obs = frame(1, vec![det("chair", Point3::origin(), 1), det("sofa", Point3::new(4.0, 0.0, 0.0), 2)]);
    let ex = extract_frame_objects(&obs, &vocab(), g.config(), &rooms).unwrap();
    assert_eq!(ex.objects[0].room, "kitchen");
    assert_eq!(ex.objects[1].room, "hall");
}

#[test]
fn extract_rejects_wrong_embedding_dimension() {
    let g = SceneGraph::<f64>::default();
    let mut d = det("chair", Point3::origin(), 1);
    d.embedding.pop();
    let err = extract_frame_objects(&frame(1, vec![d]), &vocab(), g.config(), &NoRooms).unwrap_err();
    assert!(matches!(err, GraphError::InvalidObservation(_)));
}

#[test]
fn match_against_empty_graph_inserts_all() {
    let g = SceneGraph::<f64>::default();
    let obs = frame(1, vec![det("chair", Point3::origin(), 1), det("table", Point3::new(1.0, 0.0, 0.0), 2)]);
    let m = g.match_objects(&frame_objects(&g, &obs));
    assert!(m.matches.is_empty());
    assert_eq!(m.unmatched, vec![0, 1]);
}

#[test]
fn exact_reobservation_matches_same_id() {
    let mut g = SceneGraph::<f64>::default();
    let v = vocab();
    g.update(&frame(1, vec![det("chair", Point3::new(1.0, 0.5, 1.0), 1)]), &v, &NoRooms).unwrap();
    let obs = frame(2, vec![det("chair", Point3::new(1.0, 0.5, 1.0), 1)]);
    let m = g.match_objects(&frame_objects(&g, &obs));
    assert_eq!(m.matches, vec![(0, ObjectId(0))]);
}

/// Sweeps the spatial gate: inside `match_dist` matches, twice it with disjoint boxes does not.
#[test]
fn match_distance_threshold_sweep() {
    let v = vocab();
    let base = Point3::new(0.0, 0.5, 0.0);
    let make = |shift: f64| {
        let mut g = SceneGraph::<f64>::default();
        g.update(&frame(1, vec![det("chair", base, 1)]), &v, &NoRooms).unwrap();
        let md = g.config().match_dist;
        let obs = frame(2, vec![det("chair", base + Point3::new(shift * md, 0.0, 0.0), 1)]);
        let fos = frame_objects(&g, &obs);
        let iou = fos[0].bbox.iou(&g.object(ObjectId(0)).unwrap().bbox);
        (g.match_objects(&fos), iou)
    };
    let (near, _) = make(0.5);
    assert_eq!(near.matches.len(), 1);
    let (far, iou) = make(2.0);
    assert_eq!(iou, 0.0);
    assert!(far.matches.is_empty());
    assert_eq!(far.unmatched, vec![0]);
}

#[test]
fn similar_embedding_substitutes_for_category() {
    let mut g = SceneGraph::<f64>::default();
    let v = vocab();
    g.update(&frame(1, vec![det("chair", Point3::origin(), 1)]), &v, &NoRooms).unwrap();
    let obs = frame(2, vec![det("sofa", Point3::origin(), 1)]);
    assert_eq!(g.match_objects(&frame_objects(&g, &obs)).matches.len(), 1);
    let obs = frame(2, vec![det("sofa", Point3::origin(), 2)]);
    assert!(g.match_objects(&frame_objects(&g, &obs)).matches.is_empty());
}

#[test]
fn greedy_assignment_is_one_to_one() {
    let mut g = SceneGraph::<f64>::default();
    let v = vocab();
    g.update(&frame(1, vec![det("chair", Point3::origin(), 1)]), &v, &NoRooms).unwrap();
    // two candidate observations of the same chair; the better-overlapping one wins
    let obs = frame(
        2,
        vec![det("chair", Point3::new(0.2, 0.0, 0.0), 1), det("chair", Point3::new(0.05, 0.0, 0.0), 1)],
    );
    let m = g.match_objects(&frame_objects(&g, &obs));
    assert_eq!(m.matches, vec![(1, ObjectId(0))]);
    assert_eq!(m.unmatched, vec![0]);
}

#[test]
fn merging_identical_observation_is_idempotent() {
    let mut g = SceneGraph::<f64>::default();
    let v = vocab();
    let obs1 = frame(1, vec![det("chair", Point3::new(1.0, 0.5, 1.0), 1)]);
    g.update(&obs1, &v, &NoRooms).unwrap();
    let before = g.object(ObjectId(0)).unwrap().clone();
    g.update(&frame(2, obs1.detections.clone()), &v, &NoRooms).unwrap();
    let after = g.object(ObjectId(0)).unwrap();
    assert_eq!(after.position, before.position);
    assert_eq!(after.bbox, before.bbox);
    assert_eq!(after.category, before.category);
    assert_eq!(after.cloud.len(), before.cloud.len());
    assert_eq!(after.observations, 2);
}

#[test]
fn merged_cloud_is_deduplicated_union() {
    let mut g = SceneGraph::<f64>::default();
    let v = vocab();
    let a = Point3::new(0.0, 0.5, 0.0);
    let b = Point3::new(0.23, 0.5, 0.0);
    g.update(&frame(1, vec![det("chair", a, 1)]), &v, &NoRooms).unwrap();
    g.update(&frame(2, vec![det("chair", b, 1)]), &v, &NoRooms).unwrap();
    assert_eq!(g.object_count(), 1);
    let node = g.object(ObjectId(0)).unwrap();
    let n = cube(a).len();
    assert!(node.cloud.len() <= 2 * n);
    assert!(node.cloud.len() > n);
    // recompute the centroid independently
    let pts = node.cloud.points();
    let (mut sx, mut sy, mut sz) = (0.0, 0.0, 0.0);
    for p in pts {
        sx += p.x;
        sy += p.y;
        sz += p.z;
    }
    let k = pts.len() as f64;
    let expect = Point3::new(sx / k, sy / k, sz / k);
    assert!(node.position.distance(&expect) < 1e-9);
    assert_eq!(node.bbox, detection_bbox(&cube(a)).unwrap().union(&detection_bbox(&cube(b)).unwrap()));
}

#[test]
fn unmatched_insertions_bump_object_count() {
    let mut g = SceneGraph::<f64>::default();
    let v = vocab();
    g.update(&frame(1, vec![det("chair", Point3::origin(), 1)]), &v, &NoRooms).unwrap();
    let k = 3;
    let dets = (0..k).map(|i| det("lamp", Point3::new(5.0 + 3.0 * i as f64, 0.0, 0.0), 9)).collect();
    let report = g.update(&frame(2, dets), &v, &NoRooms).unwrap();
    assert_eq!(report.inserted, k);
    assert_eq!(g.object_count(), 1 + k);
    assert_eq!(g.next_id(), 1 + k as u64);
}

#[test]
fn merge_with_missing_id_is_integrity_error() {
    let mut g = SceneGraph::<f64>::default();
    let obs = frame(1, vec![det("chair", Point3::origin(), 1)]);
    let fos = frame_objects(&g, &obs);
    let bogus = MatchResult { matches: vec![(0, ObjectId(42))], unmatched: vec![] };
    assert!(matches!(g.merge_objects(fos, &bogus, 1), Err(GraphError::Integrity(_))));
}

#[test]
fn category_majority_with_recency_tiebreak() {
    let mut g = SceneGraph::<f64>::default();
    let v = vocab();
    let p = Point3::origin();
    g.update(&frame(1, vec![det("chair", p, 1)]), &v, &NoRooms).unwrap();
    g.update(&frame(2, vec![det("sofa", p, 1)]), &v, &NoRooms).unwrap();
    assert_eq!(g.object(ObjectId(0)).unwrap().category, "sofa", "1:1 tie goes to the latest");
    g.update(&frame(3, vec![det("chair", p, 1)]), &v, &NoRooms).unwrap();
    g.update(&frame(4, vec![det("sofa", p, 1)]), &v, &NoRooms).unwrap();
    g.update(&frame(5, vec![det("chair", p, 1)]), &v, &NoRooms).unwrap();
    assert_eq!(g.object(ObjectId(0)).unwrap().category, "chair");
}

#[test]
fn co_occurrence_threshold() {
    let theta = 2.0;
    let single = [(ObjectId(1), Point3::origin())];
    assert!(co_occurring_pairs(&single, theta).is_empty());
    let near = [(ObjectId(1), Point3::origin()), (ObjectId(2), Point3::new(0.9 * theta, 0.0, 0.0))];
    assert_eq!(co_occurring_pairs(&near, theta).len(), 1);
    let far = [(ObjectId(1), Point3::origin()), (ObjectId(2), Point3::new(1.1 * theta, 0.0, 0.0))];
    assert!(co_occurring_pairs(&far, theta).is_empty());
}

#[test]
fn cluster_yields_all_pairs() {
    for n in 1..9u64 {
        let objs: Vec<_> = (0..n)
            .map(|i| (ObjectId(i), Point3::new(0.1 * i as f64, 0.0, 0.05 * (i % 3) as f64)))
            .collect();
        let mut brute = std::collections::BTreeSet::new();
        for a in 0..n {
            for b in (a + 1)..n {
                brute.insert(IdPair::new(ObjectId(a), ObjectId(b)).unwrap());
            }
        }
        assert_eq!(co_occurring_pairs(&objs, 2.0), brute);
        assert_eq!(brute.len() as u64, n * (n.saturating_sub(1)) / 2);
    }
}

#[test]
fn empty_observation_on_empty_graph() {
    let mut g = SceneGraph::<f64>::default();
    g.update(&frame(1, vec![]), &vocab(), &NoRooms).unwrap();
    assert_eq!(g.object_count(), 0);
    assert_eq!(g.edge_count(), 0);
    g.validate().unwrap();
}

#[test]
fn two_frames_of_same_adjacent_pair() {
    let mut g = SceneGraph::<f64>::default();
    let v = vocab();
    let dets = vec![det("chair", Point3::origin(), 1), det("table", Point3::new(1.0, 0.0, 0.0), 2)];
    g.update(&frame(1, dets.clone()), &v, &NoRooms).unwrap();
    g.update(&frame(2, dets), &v, &NoRooms).unwrap();
    assert_eq!(g.object_count(), 2);
    assert_eq!(g.edge_count(), 1);
    let pair = IdPair::new(ObjectId(0), ObjectId(1)).unwrap();
    assert_eq!(g.edges().images_of(&pair).unwrap().len(), 2);
    assert_eq!(g.frames().len(), 2);
}

#[test]
fn out_of_order_frame_is_rejected() {
    let mut g = SceneGraph::<f64>::default();
    g.update(&frame(5, vec![]), &vocab(), &NoRooms).unwrap();
    let err = g.update(&frame(5, vec![]), &vocab(), &NoRooms).unwrap_err();
    assert_eq!(err, GraphError::NonMonotoneFrame { last: 5, got: 5 });
    assert!(g.update(&frame(3, vec![]), &vocab(), &NoRooms).is_err());
}

#[test]
fn snapshot_round_trip_is_lossless() {
    let mut g = SceneGraph::<f64>::default();
    let v = vocab();
    g.update(&frame(1, vec![det("chair", Point3::new(0.13, 0.5, 0.7), 1), det("tv", Point3::new(1.0, 1.0, 0.3), 5)]), &v, &NoRooms)
        .unwrap();
    g.update(&frame(2, vec![det("chair", Point3::new(0.17, 0.5, 0.71), 1)]), &v, &NoRooms).unwrap();
    let text = g.to_json();
    assert!(text.contains("\"format_version\": 1"));
    assert!(text.contains("\"adjacency_threshold\": 2.0"));
    let back = SceneGraph::<f64>::from_json(&text).unwrap();
    assert_eq!(back, g);
    assert_eq!(back.to_json(), text);
}

#[test]
fn snapshot_with_dangling_edge_is_rejected() {
    let mut g = SceneGraph::<f64>::default();
    let v = vocab();
    let dets = vec![det("chair", Point3::origin(), 1), det("table", Point3::new(1.0, 0.0, 0.0), 2)];
    g.update(&frame(1, dets), &v, &NoRooms).unwrap();
    let mut value: serde_json::Value = serde_json::from_str(&g.to_json()).unwrap();
    value["objects"].as_array_mut().unwrap().pop();
    assert!(SceneGraph::<f64>::from_json(&value.to_string()).is_err());
}

#[test]
fn works_in_single_precision() {
    let mut g = SceneGraph::<f32>::default();
    let cloud: Vec<Point3<f32>> = cube(Point3::new(0.3, 0.5, 0.1)).iter().map(|p| p.cast()).collect();
    let d = Detection {
        category: "chair".into(),
        confidence: 1.0f32,
        bbox: detection_bbox(&cloud).unwrap(),
        cloud,
        embedding: vec![1.0; DIM],
    };
    let obs = FrameObservation {
        frame_id: 1,
        timestamp: 0.0,
        camera_pose: Pose { position: Point3::origin(), yaw: 0.0 },
        detections: vec![d.clone(), d],
        image_ref: ImageRef(1),
    };
    g.update(&obs, &vocab(), &NoRooms).unwrap();
    g.validate().unwrap();
    assert_eq!(g.object_count(), 2);
    assert_eq!(SceneGraph::<f32>::from_json(&g.to_json()).unwrap(), g);
}

#[test]
fn point_cloud_helpers_agree() {
    let g = SceneGraph::<f64>::default();
    let fos = frame_objects(&g, &frame(1, vec![det("chair", Point3::new(2.0, 0.2, 1.0), 1)]));
    let c = PointCloud::new(cube(Point3::new(2.0, 0.2, 1.0))).centroid().unwrap();
    assert!(fos[0].position.distance(&c) < 1e-12);
}

fn arb_frames() -> impl Strategy<Value = Vec<Vec<(usize, usize, f64, f64)>>> {
    // per frame: (category index, embedding seed, x, z)
    prop::collection::vec(prop::collection::vec((0usize..4, 0usize..4, 0.0..6.0f64, 0.0..6.0f64), 0..5), 1..25)
}

fn replay(frames: &[Vec<(usize, usize, f64, f64)>]) -> SceneGraph<f64> {
    let cats = ["chair", "table", "sofa", "lamp"];
    let v = vocab();
    let mut g = SceneGraph::<f64>::default();
    let mut last_count = 0;
    for (t, dets) in frames.iter().enumerate() {
        let dets = dets
            .iter()
            .map(|(c, s, x, z)| det(cats[*c], Point3::new(*x, 0.4, *z), *s as u64))
            .collect();
        g.update(&frame(t as u64 + 1, dets), &v, &NoRooms).unwrap();
        g.validate().unwrap();
        assert!(g.object_count() >= last_count);
        last_count = g.object_count();
    }
    g
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn updates_preserve_invariants_and_are_deterministic(frames in arb_frames()) {
        let a = replay(&frames);
        let b = replay(&frames);
        prop_assert_eq!(a.to_json(), b.to_json());
        for (pair, _) in a.edges().edges() {
            prop_assert!(a.object(pair.low()).is_some() && a.object(pair.high()).is_some());
        }
    }
}
