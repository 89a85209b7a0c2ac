//! Generates random instances and solves each one.
//!
//! ```text
//! cargo run --release --example generate_and_solve -- [count] [min_ctrl] [max_ctrl] [timeout_s] [seed]
//! ```

use std::time::Duration;

use tdc::gen::{generate_dtnu, GenParams};
use tdc::search::{solve, SearchConfig, Verdict};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: u64| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(default);
    let count = arg(0, 20);
    let params = GenParams {
        n_controllables: arg(1, 5) as u32..=arg(2, 8) as u32,
        seed: arg(4, 1),
        ..GenParams::default()
    };
    let config = SearchConfig {
        timeout: Some(Duration::from_secs(arg(3, 5))),
        max_expansions: None,
    };

    let mut tally = [0; 3];
    for i in 0..count {
        let d = generate_dtnu(&params, &mut params.instance_rng(i));
        let r = solve(&d, config);
        let slot = match r.verdict {
            Verdict::Tdc(_) => 0,
            Verdict::NotTdc => 1,
            Verdict::Timeout => 2,
        };
        tally[slot] += 1;
        println!(
            "#{i:<4} |A|={:<3} |U|={} {:<8} {:>9.3}s {:>9} expansions",
            d.n_controllables(),
            d.n_uncontrollables(),
            r.verdict.label(),
            r.stats.elapsed.as_secs_f64(),
            r.stats.expansions
        );
    }
    println!(
        "tdc {} / not_tdc {} / timeout {}",
        tally[0], tally[1], tally[2]
    );
}
