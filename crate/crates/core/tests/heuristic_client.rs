mod support;

use std::io::{BufRead, BufReader, Write};
use std::thread;
use std::time::Duration;

use serde_json::{json, Value};
use tdc::encode::{encode, EDGE_FEATURES, NODE_FEATURES};
use tdc::format::parse_dtnu;
use tdc::heuristic::{
    rank_children, Heuristic, HeuristicError, HeuristicOrder, SidecarClient, PROTOCOL,
};
use tdc::search::{solve, solve_with, Decision, DtnuState, SearchConfig};

/// In-process sidecar: answers the handshake, then replies to each request
/// with `respond(request)`; `None` makes it stop answering.
fn mock(respond: impl Fn(&Value) -> Option<Value> + Send + 'static) -> SidecarClient {
    let (req_rx, req_tx) = std::io::pipe().unwrap();
    let (rep_rx, mut rep_tx) = std::io::pipe().unwrap();
    thread::spawn(move || {
        for line in BufReader::new(req_rx).lines() {
            let msg: Value = serde_json::from_str(&line.unwrap()).unwrap();
            let reply = if msg.get("hello").is_some() {
                assert_eq!(msg["version"], PROTOCOL);
                Some(json!({"ok": true, "model_id": "mock"}))
            } else {
                respond(&msg)
            };
            match reply {
                Some(r) => {
                    writeln!(rep_tx, "{r}").unwrap();
                }
                None => thread::sleep(Duration::from_secs(60)),
            }
        }
    });
    let mut client =
        SidecarClient::over(BufReader::new(rep_rx), req_tx, Duration::from_millis(300));
    client.handshake().unwrap();
    client
}

/// Ranks the wait node first, then controllables by descending index.
fn prefer_late(msg: &Value) -> Option<Value> {
    let active: Vec<u64> = msg["active"]
        .as_array()?
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    let n = msg["nodes"].as_array()?.len() as f64;
    let probs: serde_json::Map<String, Value> = active
        .iter()
        .map(|i| (i.to_string(), json!((*i as f64 + 1.0) / (n + 1.0))))
        .collect();
    Some(json!({"id": msg["id"], "probs": probs}))
}

fn instance() -> tdc::model::Dtnu {
    parse_dtnu(support::GAMMA_PRIME.as_bytes()).unwrap()
}

#[test]
fn handshake_and_requests_are_well_formed() {
    let d = instance();
    let g = encode(&d, &DtnuState::root(&d));
    let mut client = mock(|msg| {
        let nodes = msg["nodes"].as_array().unwrap();
        assert!(nodes
            .iter()
            .all(|r| r.as_array().unwrap().len() == NODE_FEATURES));
        let rows = msg["edge_features"].as_array().unwrap();
        assert_eq!(rows.len(), msg["edges"].as_array().unwrap().len());
        assert!(rows
            .iter()
            .all(|r| r.as_array().unwrap().len() == EDGE_FEATURES));
        prefer_late(msg)
    });
    assert_eq!(client.model_id, "mock");
    let ranking = client.rank(&g).unwrap();
    let keys: Vec<usize> = ranking.probabilities.keys().copied().collect();
    assert_eq!(keys, g.active);
    assert!(!client.is_degraded());
}

#[test]
fn ranking_orders_children() {
    let d = instance();
    let g = encode(&d, &DtnuState::root(&d));
    let mut client = mock(prefer_late);
    let (order, degraded) = rank_children(&g, &mut client);
    assert!(!degraded);
    assert_eq!(order[0], Decision::Wait);
    assert_eq!(order.len(), g.active.len());
}

#[test]
fn guided_search_agrees_with_unguided() {
    let d = instance();
    let mut client = mock(prefer_late);
    let mut order = HeuristicOrder::new(&mut client, 15);
    let guided = solve_with(&d, SearchConfig::default(), &mut order);
    assert!(order.calls > 0);
    assert!(!order.degraded);
    assert_eq!(guided.verdict, solve(&d, SearchConfig::default()).verdict);
}

#[test]
fn silent_sidecar_times_out_and_degrades() {
    let d = instance();
    let g = encode(&d, &DtnuState::root(&d));
    let mut client = mock(|_| None);
    assert!(matches!(client.rank(&g), Err(HeuristicError::Timeout(_))));
    assert!(client.is_degraded());
    assert!(matches!(client.rank(&g), Err(HeuristicError::Degraded)));

    let (order, degraded) = rank_children(&g, &mut client);
    assert!(degraded);
    assert_eq!(order, DtnuState::root(&d).decisions(&d));
}

#[test]
fn malformed_replies_degrade() {
    let d = instance();
    let g = encode(&d, &DtnuState::root(&d));
    let mut client = mock(|msg| Some(json!({"id": msg["id"], "probs": {"0": 2.5}})));
    let (order, degraded) = rank_children(&g, &mut client);
    assert!(degraded);
    assert_eq!(order, DtnuState::root(&d).decisions(&d));

    let mut client = mock(|_| Some(json!({"id": 999, "probs": {}})));
    assert!(matches!(client.rank(&g), Err(HeuristicError::Malformed(_))));
}

#[test]
fn search_survives_a_dead_sidecar() {
    let d = instance();
    let mut client = mock(|_| None);
    let mut order = HeuristicOrder::new(&mut client, 15);
    let r = solve_with(&d, SearchConfig::default(), &mut order);
    assert!(order.degraded);
    assert_eq!(r.verdict, solve(&d, SearchConfig::default()).verdict);
}

#[test]
fn missing_program_fails_to_spawn() {
    assert!(SidecarClient::spawn_command_line("/nonexistent/sidecar --flag").is_err());
    assert!(SidecarClient::spawn_command_line("   ").is_err());
}

#[test]
fn external_process_sidecar() {
    if std::process::Command::new("python3")
        .arg("--version")
        .output()
        .is_err()
    {
        eprintln!("python3 not available; skipping");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("sidecar.py");
    std::fs::write(
        &script,
        r#"import json, sys
for line in sys.stdin:
    msg = json.loads(line)
    if "hello" in msg:
        print(json.dumps({"ok": True, "model_id": "py"}), flush=True)
    else:
        print(json.dumps({"id": msg["id"], "probs": {str(i): 0.5 for i in msg["active"]}}), flush=True)
"#,
    )
    .unwrap();
    let d = instance();
    let g = encode(&d, &DtnuState::root(&d));
    let mut client =
        SidecarClient::spawn_command_line(&format!("python3 {}", script.display())).unwrap();
    assert_eq!(client.model_id, "py");
    // ties keep creation order
    let (order, degraded) = rank_children(&g, &mut client);
    assert!(!degraded);
    assert_eq!(order, DtnuState::root(&d).decisions(&d));
}
