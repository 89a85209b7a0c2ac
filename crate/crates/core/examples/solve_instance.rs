//! Solves one instance file and prints the verdict and strategy. Without an
//! argument a built-in instance is used: `a` has to follow `u` by 1 to 4
//! time units, and `u` happens somewhere in `[0, 1]`.
//!
//! ```text
//! cargo run --example solve_instance -- [instance.json]
//! ```

use tdc::format::parse_dtnu;
use tdc::search::{solve, SearchConfig, Verdict};

const BUILT_IN: &str = r#"{
  "format": "tdc-dtnu/1",
  "controllables": ["a"],
  "uncontrollables": ["u"],
  "constraints": [[{"type": "distance", "lhs": "a", "rhs": "u", "interval": [1, 4]}]],
  "contingencies": [],
  "activated": [{"target": "u", "interval": [0, 1]}]
}"#;

fn main() {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read(&path).unwrap_or_else(|e| panic!("{path}: {e}")),
        None => BUILT_IN.as_bytes().to_vec(),
    };
    let d = parse_dtnu(&text).expect("valid instance");
    let r = solve(&d, SearchConfig::default());
    println!("verdict: {}", r.verdict.label());
    println!(
        "{} expansions, {} nodes created, peak {} live",
        r.stats.expansions, r.stats.nodes_created, r.stats.peak_nodes
    );
    if let Verdict::Tdc(s) = r.verdict {
        print!("{s}");
    }
}
