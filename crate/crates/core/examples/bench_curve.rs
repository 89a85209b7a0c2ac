//! Benchmarks unguided and randomly ordered search on a generated batch and
//! prints both solved-vs-time curves.
//!
//! ```text
//! cargo run --release --example bench_curve -- [count] [timeout_s]
//! ```

use std::time::Duration;

use tdc::bench::{curve_csv, run_bench, solved_curve, BenchConfig, Clock, Ordering};
use tdc::gen::{generate_dtnu, GenParams};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let count: u64 = args.first().and_then(|s| s.parse().ok()).unwrap_or(20);
    let timeout = Duration::from_secs_f64(args.get(1).and_then(|s| s.parse().ok()).unwrap_or(2.0));

    let params = GenParams {
        n_controllables: 6..=10,
        seed: 4,
        ..GenParams::default()
    };
    let instances: Vec<_> = (0..count)
        .map(|i| {
            (
                format!("i{i}"),
                Ok(generate_dtnu(&params, &mut params.instance_rng(i))),
            )
        })
        .collect();

    for ordering in [Ordering::Unguided, Ordering::Random] {
        let cfg = BenchConfig {
            timeout,
            ordering: ordering.clone(),
            clock: Clock::Expansions {
                per_second: 100_000,
            },
            seed: 1,
            jobs: 0,
        };
        let records = run_bench(&instances, &cfg);
        let curve = solved_curve(&records, timeout);
        println!("# {}", ordering.id());
        print!("{}", curve_csv(&curve));
    }
}
