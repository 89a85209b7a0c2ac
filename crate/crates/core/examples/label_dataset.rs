//! Builds a small labeled dataset, writes it, reads it back and splits it
//! into training and validation sets.
//!
//! ```text
//! cargo run --release --example label_dataset -- [count] [out.jsonl]
//! ```

use std::io::BufReader;
use std::time::Duration;

use tdc::gen::{
    build_dataset, read_dataset, split_train_validation, write_dataset, GenParams, LabelConfig,
};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let count: u64 = args.first().and_then(|s| s.parse().ok()).unwrap_or(12);
    let out = args.get(1).cloned().unwrap_or_else(|| {
        std::env::temp_dir()
            .join("tdc-dataset.jsonl")
            .display()
            .to_string()
    });

    let params = GenParams {
        n_controllables: 4..=6,
        seed: 8,
        ..GenParams::default()
    };
    // expansion budgets keep the labels reproducible
    let cfg = LabelConfig {
        explorations: 5,
        timeout: Duration::from_secs(60),
        max_expansions: Some(5_000),
    };
    let records = build_dataset(count, &params, &cfg);
    let mut file = std::fs::File::create(&out).expect("create dataset file");
    write_dataset(&mut file, &records).expect("write dataset");

    let back = read_dataset(BufReader::new(std::fs::File::open(&out).unwrap())).expect("read back");
    let positive: usize = back
        .iter()
        .flat_map(|r| r.example.labels.values())
        .filter(|y| **y == 1)
        .count();
    let labels: usize = back.iter().map(|r| r.example.labels.len()).sum();
    let (train, val) = split_train_validation(back);
    println!("{out}: {labels} labels, {positive} positive");
    println!(
        "{} training and {} validation examples",
        train.len(),
        val.len()
    );
}
