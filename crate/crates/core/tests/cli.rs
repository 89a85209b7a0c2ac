mod support;

use std::path::Path;
use std::process::{Command, Output};

const TDC: &str = env!("CARGO_BIN_EXE_tdc");

fn tdc(args: &[&str]) -> Output {
    Command::new(TDC)
        .args(args)
        .env_remove("TDC_SEED")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn solve_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let gamma = write(dir.path(), "gamma.json", support::GAMMA_PRIME);
    let out = tdc(&["solve", &gamma]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("verdict: not_tdc"));

    let out = tdc(&["solve", &gamma, "--max-expansions", "1"]);
    assert_eq!(out.status.code(), Some(2));

    let trivial = write(dir.path(), "trivial.json", support::TRIVIAL);
    let strategy = dir.path().join("s.json");
    let out = tdc(&[
        "solve",
        &trivial,
        "--strategy-out",
        strategy.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let s = tdc::search::Strategy::from_json(&std::fs::read(&strategy).unwrap()).unwrap();
    assert_eq!(s.size(), 1);

    let out = tdc(&[
        "simulate",
        &trivial,
        strategy.to_str().unwrap(),
        "--runs",
        "20",
    ]);
    assert_eq!(out.status.code(), Some(0));

    assert_eq!(tdc(&["solve", "/nonexistent.json"]).status.code(), Some(3));
    let bad = write(dir.path(), "bad.json", "{\"format\":\"tdc-dtnu/2\"}");
    assert_eq!(tdc(&["solve", &bad]).status.code(), Some(3));
    assert_eq!(tdc(&["frobnicate"]).status.code(), Some(3));
}

#[test]
fn generate_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = tdc(&[
            "generate",
            "--count",
            "5",
            "--seed",
            "7",
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    for i in 0..5 {
        let name = format!("instance-{i:04}.json");
        let x = std::fs::read(a.path().join(&name)).unwrap();
        let y = std::fs::read(b.path().join(&name)).unwrap();
        assert_eq!(x, y);
        tdc::format::parse_dtnu(&x).unwrap();
    }

    // the seed also comes from the environment
    let c = tempfile::tempdir().unwrap();
    let out = Command::new(TDC)
        .args([
            "generate",
            "--count",
            "1",
            "--out",
            c.path().to_str().unwrap(),
        ])
        .env("TDC_SEED", "7")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        std::fs::read(c.path().join("instance-0000.json")).unwrap(),
        std::fs::read(a.path().join("instance-0000.json")).unwrap()
    );
}

#[test]
fn missing_output_directory_is_an_error() {
    let out = tdc(&["generate", "--count", "1", "--out", "/nonexistent/dir"]);
    assert_eq!(out.status.code(), Some(3));
    let out = tdc(&[
        "label",
        "--count",
        "1",
        "--out",
        "/nonexistent/dir/data.jsonl",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn label_writes_a_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.jsonl");
    let out = tdc(&[
        "label",
        "--count",
        "3",
        "--nu",
        "2",
        "--max-expansions",
        "500",
        "--min-controllables",
        "3",
        "--max-controllables",
        "4",
        "--out",
        data.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let file = std::fs::File::open(&data).unwrap();
    let records = tdc::gen::read_dataset(std::io::BufReader::new(file)).unwrap();
    assert_eq!(records.len(), 3);
}

#[test]
fn bench_with_expansion_clock_is_reproducible() {
    let inst = tempfile::tempdir().unwrap();
    let out = tdc(&[
        "generate",
        "--count",
        "6",
        "--seed",
        "3",
        "--min-controllables",
        "4",
        "--max-controllables",
        "6",
        "--out",
        inst.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let res = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for run in 0..2 {
        let csv = res.path().join(format!("run{run}.csv"));
        let out = tdc(&[
            "bench",
            inst.path().to_str().unwrap(),
            "--timeout",
            "1",
            "--clock",
            "expansions",
            "--expansions-per-second",
            "2000",
            "--config",
            "random",
            "--seed",
            "5",
            "--out",
            csv.to_str().unwrap(),
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let curve = res.path().join(format!("run{run}.csv.curve.csv"));
        outputs.push((std::fs::read(&csv).unwrap(), std::fs::read(curve).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert_eq!(text.lines().next(), Some(tdc::bench::RECORD_HEADER));
    assert_eq!(text.lines().count(), 7);
}
