//! An instance that is dynamically controllable but not under timed
//! strategies: `a1` waits at least 1 after `u1`, `a2` at least 5 after `a1`
//! and at most 6 after `u1`, and `u1` may occur anywhere in `[0, 1]`.
//!
//! Only a strategy that reacts to `u1` after an arbitrarily short delay
//! works. Timed strategies wait for fixed durations, so the checker proves
//! that none exists.

use tdc::format::parse_dtnu;
use tdc::search::{solve, SearchConfig};

const GAMMA_PRIME: &str = r#"{
  "format": "tdc-dtnu/1",
  "controllables": ["a1", "a2"],
  "uncontrollables": ["u1"],
  "constraints": [
    [{"type": "distance", "lhs": "a1", "rhs": "u1", "interval": [1, "inf"]}],
    [{"type": "distance", "lhs": "a2", "rhs": "a1", "interval": [5, "inf"]}],
    [{"type": "distance", "lhs": "a2", "rhs": "u1", "interval": [0, 6]}]
  ],
  "contingencies": [],
  "activated": [{"target": "u1", "interval": [0, 1]}]
}"#;

fn main() {
    let d = parse_dtnu(GAMMA_PRIME.as_bytes()).unwrap();
    let r = solve(&d, SearchConfig::default());
    println!(
        "verdict: {} after {} expansions ({} memo hits) in {:?}",
        r.verdict.label(),
        r.stats.expansions,
        r.stats.memo_hits,
        r.stats.elapsed
    );
}
