//! Solves generated instances and replays each strategy many times against
//! random and worst-case environments.
//!
//! ```text
//! cargo run --release --example simulate_strategy -- [instances] [runs] [seed]
//! ```

use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tdc::gen::{generate_dtnu, GenParams};
use tdc::search::{solve, SearchConfig, Verdict};
use tdc::simulate::{simulate_execution, Sampler};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: u64| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(default);
    let (wanted, runs) = (arg(0, 10), arg(1, 1000));
    let params = GenParams {
        n_controllables: 5..=8,
        seed: arg(2, 1),
        ..GenParams::default()
    };
    let config = SearchConfig {
        timeout: Some(Duration::from_secs(2)),
        max_expansions: None,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let (mut solved, mut index, mut failures) = (0, 0, 0);
    while solved < wanted {
        let d = generate_dtnu(&params, &mut params.instance_rng(index));
        index += 1;
        let Verdict::Tdc(strategy) = solve(&d, config).verdict else {
            continue;
        };
        solved += 1;
        for sampler in [Sampler::Uniform, Sampler::Endpoints] {
            for _ in 0..runs {
                match simulate_execution(&d, &strategy, sampler, &mut rng) {
                    Ok(trace) if trace.satisfied => {}
                    Ok(trace) => {
                        failures += 1;
                        let c = &d.constraints[trace.violated.unwrap()];
                        eprintln!("instance {}: violated {:?}", index - 1, c);
                    }
                    Err(e) => {
                        failures += 1;
                        eprintln!("instance {}: {e}", index - 1);
                    }
                }
            }
        }
        println!(
            "instance {:<4} strategy of {} steps replayed",
            index - 1,
            strategy.size()
        );
    }
    println!("{solved} strategies, {failures} failed runs");
}
