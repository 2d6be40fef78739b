use std::collections::{BTreeMap, VecDeque};
use std::path::Path;

use msgnav_core::key_subgraph::KeyPayload;
use msgnav_core::reasoning::{
    apply_response, assemble_query, Choice, DecisionMemory, FrontierId, FrontierPayload, Goal, GoalPayload,
    HttpConfig, HttpReasoner, HttpReply, MockReasoner, MockScript, OnExhausted, Outcome, Reasoner, ReasonerError,
    ReasonerRequest, ReasonerResponse, Transport, Vocabulary,
};
use msgnav_core::scene_graph::ObjectId;
use msgnav_core::sim::{run_lifelong, EpisodeParams, SyntheticScene};
use proptest::prelude::*;
use serde_json::Value;

fn data(rel: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn schema(name: &str) -> jsonschema::Validator {
    let text = std::fs::read_to_string(data(&format!("data/schema/{name}"))).unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn goal() -> GoalPayload {
    Goal::category("chair").unwrap().into()
}

fn frontier(id: u32) -> FrontierPayload {
    FrontierPayload { id: FrontierId(id), position: [1.0, 0.0, 2.0], room: "hall".into(), categories: BTreeMap::new() }
}

fn request(step: u32) -> ReasonerRequest {
    assemble_query(&KeyPayload::default(), &DecisionMemory::new(), &[frontier(1)], &goal(), step, 10)
}

struct Scripted {
    replies: VecDeque<Result<HttpReply, String>>,
    bodies: Vec<String>,
}

impl Scripted {
    fn new(replies: impl IntoIterator<Item = Result<HttpReply, String>>) -> Self {
        Self { replies: replies.into_iter().collect(), bodies: Vec::new() }
    }
}

impl Transport for Scripted {
    fn post(&mut self, _: &str, _: &[(String, String)], body: &str) -> Result<HttpReply, String> {
        self.bodies.push(body.to_string());
        self.replies.pop_front().unwrap_or_else(|| Err("no more replies".into()))
    }
}

fn http_config() -> HttpConfig {
    serde_json::from_value(serde_json::json!({
        "endpoint": "http://127.0.0.1:9/v1/chat/completions",
        "model": "test-model",
        "api_key_env": "MSGNAV_TEST_KEY_NEVER_SET",
        "max_retries": 2,
        "backoff_ms": 1
    }))
    .unwrap()
}

fn ok_reply() -> Result<HttpReply, String> {
    Ok(HttpReply { status: 200, body: std::fs::read_to_string(data("tests/data/reply_ok.json")).unwrap() })
}

fn chat(content: &str) -> Result<HttpReply, String> {
    Ok(HttpReply { status: 200, body: serde_json::json!({"choices": [{"message": {"content": content}}]}).to_string() })
}

#[test]
fn canned_reply_parses() {
    let mut r = HttpReasoner::with_transport(http_config(), Scripted::new([ok_reply()])).unwrap().with_sleep(|_| {});
    let resp = r.decide(&request(1)).unwrap();
    assert_eq!(resp, ReasonerResponse::frontier(FrontierId(1))
        .with_vocab(["wicker hamper"])
        .with_rationale("laundry items cluster near the nook"));
    assert_eq!(r.attempts().len(), 1);
}

#[test]
fn server_error_then_success_is_retried() {
    let t = Scripted::new([Ok(HttpReply { status: 503, body: "busy".into() }), ok_reply()]);
    let (tx, rx) = std::sync::mpsc::channel();
    let mut r = HttpReasoner::with_transport(http_config(), t).unwrap().with_sleep(move |d| tx.send(d).unwrap());
    assert!(matches!(r.decide(&request(1)).unwrap().choice, Choice::Frontier(FrontierId(1))));
    let slept: Vec<_> = rx.try_iter().collect();
    let statuses: Vec<_> = r.attempts().iter().map(|a| (a.attempt, a.status)).collect();
    assert_eq!(statuses, vec![(1, Some(503)), (2, Some(200))]);
    assert_eq!(slept.len(), 1);
}

#[test]
fn missing_choice_is_a_protocol_error() {
    let reply = "```json\n{\"rationale\": \"unsure\"}\n```";
    let mut r = HttpReasoner::with_transport(http_config(), Scripted::new([chat(reply), chat(reply), chat(reply)]))
        .unwrap()
        .with_sleep(|_| {});
    match r.decide(&request(1)) {
        Err(ReasonerError::Protocol { raw, .. }) => assert!(raw.contains("unsure")),
        other => panic!("expected a protocol error, got {other:?}"),
    }
    assert_eq!(r.attempts().len(), 3);
}

#[test]
fn transport_failures_exhaust_retries() {
    let t = Scripted::new([Err("refused".to_string()), Err("refused".to_string()), Err("refused".to_string())]);
    let mut r = HttpReasoner::with_transport(http_config(), t).unwrap().with_sleep(|_| {});
    assert_eq!(r.decide(&request(1)), Err(ReasonerError::Transport { message: "refused".into(), retryable: false }));
}

#[test]
fn transcript_file_records_attempts() {
    let dir = std::env::temp_dir().join(format!("msgnav-http-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("transcript.jsonl");
    let _ = std::fs::remove_file(&path);
    let mut config = http_config();
    config.transcript = Some(path.clone());
    let t = Scripted::new([Ok(HttpReply { status: 500, body: String::new() }), ok_reply()]);
    let mut r = HttpReasoner::with_transport(config, t).unwrap().with_sleep(|_| {});
    r.decide(&request(4)).unwrap();
    drop(r);
    let lines: Vec<Value> =
        std::fs::read_to_string(&path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1]["attempt"]["step"], 4);
    assert!(lines[1]["reply"].as_str().unwrap().contains("wicker hamper"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn scripted_sequence_drives_two_decisions() {
    let script = MockScript {
        sequence: vec![ReasonerResponse::frontier(FrontierId(1)), ReasonerResponse::target(ObjectId(4))],
        ..MockScript::default()
    };
    let run = || {
        let mut m = MockReasoner::new(script.clone());
        let out = [m.decide(&request(1)).unwrap(), m.decide(&request(2)).unwrap()];
        assert_eq!(m.requests().iter().map(|r| r.step).collect::<Vec<_>>(), [1, 2]);
        assert_eq!(m.decide(&request(3)), Err(ReasonerError::Exhausted(3)));
        out
    };
    let first = run();
    assert_eq!(first[0].choice, Choice::Frontier(FrontierId(1)));
    assert_eq!(first[1].choice, Choice::Target(ObjectId(4)));
    assert_eq!(run(), first);

    let mut repeat = MockReasoner::new(MockScript { on_exhausted: OnExhausted::RepeatLast, ..script.clone() });
    repeat.decide(&request(1)).unwrap();
    repeat.decide(&request(2)).unwrap();
    assert_eq!(repeat.decide(&request(3)).unwrap().choice, Choice::Target(ObjectId(4)));
}

#[test]
fn malformed_script_is_rejected() {
    assert!(MockScript::from_json(r#"{"sequence": [{"target_id": 1, "frontier_id": 2}]}"#).is_err());
    assert!(MockScript::from_json(r#"{"unknown": 1}"#).is_err());
    assert!(MockScript::load(Path::new("/nonexistent/script.json")).is_err());
}

#[test]
fn bundled_scripts_parse() {
    let oracle = MockScript::load(&data("data/scripts/oracle_greedy.json")).unwrap();
    assert_eq!(oracle, MockScript::oracle_greedy());
    MockScript::load(&data("data/scripts/demo_mock.json")).unwrap();
}

#[test]
fn empty_request_keeps_every_section() {
    let req = assemble_query(&KeyPayload::default(), &DecisionMemory::new(), &[], &goal(), 0, 10);
    let v: Value = serde_json::from_str(&req.to_json()).unwrap();
    for key in ["schema_version", "step", "goal", "key_subgraph", "memory", "frontiers"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let fixture: ReasonerRequest =
        serde_json::from_str(&std::fs::read_to_string(data("tests/data/request_min.json")).unwrap()).unwrap();
    assert_eq!(req, fixture);
    assert!(schema("request.schema.json").is_valid(&v));
}

#[test]
fn memory_window_keeps_latest_entries() {
    let mut m = DecisionMemory::new();
    for s in 1..=3 {
        m.record(s, ReasonerResponse::frontier(FrontierId(s)).with_rationale(format!("r{s}"))).unwrap();
    }
    m.annotate(2, Outcome::Refuted).unwrap();
    let req = assemble_query(&KeyPayload::default(), &m, &[], &goal(), 4, 2);
    let got: Vec<_> = req.memory.iter().map(|r| (r.step, r.frontier_id, r.outcome)).collect();
    assert_eq!(got, vec![(2, Some(FrontierId(2)), Outcome::Refuted), (3, Some(FrontierId(3)), Outcome::Pending)]);
    assert_eq!(m.len(), 3);
}

#[test]
fn episode_requests_match_schema() {
    let scene = SyntheticScene::load(&data("data/scenes/apartment.json")).unwrap();
    let mut m = MockReasoner::new(MockScript::oracle_greedy());
    run_lifelong(&scene, &mut m, &EpisodeParams::default()).unwrap();
    let request_schema = schema("request.schema.json");
    let response_schema = schema("response.schema.json");
    assert!(!m.requests().is_empty());
    assert!(m.requests().iter().any(|r| !r.key_subgraph.images.is_empty()));
    for req in m.requests() {
        let v: Value = serde_json::from_str(&req.to_json()).unwrap();
        let errors: Vec<String> = request_schema.iter_errors(&v).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "step {}: {errors:?}", req.step);
        assert_eq!(req.hash(), serde_json::from_value::<ReasonerRequest>(v).unwrap().hash());
    }
    let resp = serde_json::to_value(ReasonerResponse::target(ObjectId(3)).with_vocab(["rug"])).unwrap();
    assert!(response_schema.is_valid(&resp));
    assert!(!response_schema.is_valid(&serde_json::json!({"target_id": 1, "frontier_id": 2})));
    assert!(!response_schema.is_valid(&serde_json::json!({"rationale": "?"})));
}

fn response_strategy() -> impl Strategy<Value = ReasonerResponse> {
    let terms = prop::collection::vec(prop::sample::select(vec!["Chair", "rug", " Rug ", "hat stand", "KAYAK", ""]), 0..4);
    (any::<bool>(), 0u32..6, terms).prop_map(|(target, id, terms)| {
        let r = if target { ReasonerResponse::target(ObjectId(id.into())) } else { ReasonerResponse::frontier(FrontierId(id)) };
        r.with_vocab(terms)
    })
}

proptest! {
    #[test]
    fn vocabulary_and_memory_only_grow(steps in prop::collection::vec((0u32..3, response_strategy()), 1..25)) {
        let mut vocab = Vocabulary::from_seed(["chair", "lamp"]);
        let mut memory = DecisionMemory::new();
        let mut step = 0;
        for (gap, response) in steps {
            step += gap;
            let (v0, m0) = (vocab.clone(), memory.clone());
            match apply_response(&response, &mut vocab, &mut memory, step) {
                Ok(applied) => {
                    prop_assert_eq!(memory.len(), m0.len() + usize::from(applied.recorded));
                    prop_assert_eq!(vocab.len(), v0.len() + applied.new_terms.len());
                    let (v1, m1) = (vocab.clone(), memory.clone());
                    let again = apply_response(&response, &mut vocab, &mut memory, step).unwrap();
                    prop_assert!(again.new_terms.is_empty() && !again.recorded);
                    prop_assert_eq!(&vocab, &v1);
                    prop_assert_eq!(&memory, &m1);
                }
                Err(_) => {
                    prop_assert_eq!(&vocab, &v0);
                    prop_assert_eq!(&memory, &m0);
                }
            }
            prop_assert!(vocab.is_superset_of(&v0));
            prop_assert!(memory.extends(&m0));
            prop_assert!(vocab.contains("chair") && vocab.contains("lamp"));
            let steps: Vec<u32> = memory.entries().iter().map(|e| e.step).collect();
            prop_assert!(steps.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn request_assembly_is_pure(step in 0u32..100, window in 0usize..5, n in 0u32..6) {
        let mut m = DecisionMemory::new();
        for s in 0..n {
            m.record(s, ReasonerResponse::frontier(FrontierId(s))).unwrap();
        }
        let frontiers: Vec<_> = (0..n).map(frontier).collect();
        let a = assemble_query(&KeyPayload::default(), &m, &frontiers, &goal(), step, window);
        let b = assemble_query(&KeyPayload::default(), &m.clone(), &frontiers.clone(), &goal(), step, window);
        prop_assert_eq!(a.to_json(), b.to_json());
        prop_assert_eq!(a.memory.len(), window.min(n as usize));
    }
}
