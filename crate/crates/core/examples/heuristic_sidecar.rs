//! Guides the search with an external heuristic process. Started without
//! arguments, this example launches a copy of itself as the sidecar; with
//! `--serve` it speaks the sidecar protocol on stdin/stdout, scoring the
//! wait node high and controllables by their degree in the graph.
//!
//! ```text
//! cargo run --example heuristic_sidecar
//! ```

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde_json::{json, Value};
use tdc::format::parse_dtnu;
use tdc::heuristic::{HeuristicOrder, SidecarClient};
use tdc::search::{solve, solve_with, SearchConfig};

fn serve() {
    let stdin = std::io::stdin();
    let mut stdout = std::io::stdout();
    for line in stdin.lock().lines() {
        let msg: Value = serde_json::from_str(&line.unwrap()).unwrap();
        let reply = if msg.get("hello").is_some() {
            json!({"ok": true, "model_id": "degree-v1"})
        } else {
            let n = msg["nodes"].as_array().unwrap().len();
            let wait = n - 1;
            let mut degree = vec![0u32; n];
            for e in msg["edges"].as_array().unwrap() {
                degree[e[0].as_u64().unwrap() as usize] += 1;
            }
            let max = *degree.iter().max().unwrap_or(&1) as f64 + 1.0;
            let probs: BTreeMap<String, f64> = msg["active"]
                .as_array()
                .unwrap()
                .iter()
                .map(|i| {
                    let i = i.as_u64().unwrap() as usize;
                    let p = if i == wait {
                        1.0
                    } else {
                        degree[i] as f64 / max
                    };
                    (i.to_string(), p)
                })
                .collect();
            json!({"id": msg["id"], "probs": probs})
        };
        writeln!(stdout, "{reply}").unwrap();
        stdout.flush().unwrap();
    }
}

const INSTANCE: &str = r#"{
  "format": "tdc-dtnu/1",
  "controllables": ["a1", "a2", "a3"],
  "uncontrollables": ["u1"],
  "constraints": [
    [{"type": "distance", "lhs": "a2", "rhs": "u1", "interval": [1, 4]}],
    [{"type": "distance", "lhs": "a3", "rhs": "a2", "interval": [0, 2]}],
    [{"type": "bounded", "timepoint": "a1", "interval": [0, 10]}]
  ],
  "contingencies": [],
  "activated": [{"target": "u1", "interval": [0, 1]}]
}"#;

fn main() {
    if std::env::args().any(|a| a == "--serve") {
        return serve();
    }
    let me = std::env::current_exe().unwrap();
    let mut client = SidecarClient::spawn(me.to_str().unwrap(), &["--serve".to_string()])
        .expect("sidecar starts");
    println!("sidecar model: {}", client.model_id);

    let d = parse_dtnu(INSTANCE.as_bytes()).unwrap();
    let mut order = HeuristicOrder::new(&mut client, 15);
    let guided = solve_with(&d, SearchConfig::default(), &mut order);
    let (calls, degraded) = (order.calls, order.degraded);
    let plain = solve(&d, SearchConfig::default());
    println!(
        "guided: {} in {} expansions ({calls} heuristic calls{})",
        guided.verdict.label(),
        guided.stats.expansions,
        if degraded { ", degraded" } else { "" }
    );
    println!(
        "unguided: {} in {} expansions",
        plain.verdict.label(),
        plain.stats.expansions
    );
}
