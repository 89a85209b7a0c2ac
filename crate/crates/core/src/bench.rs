//! Batch solving with per-instance records and a solved-vs-time curve.

use std::fmt::Write as _;
use std::io;
use std::path::Path;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::format::parse_dtnu;
use crate::heuristic::{HeuristicOrder, SidecarClient};
use crate::model::Dtnu;
use crate::search::{solve_with, CreationOrder, SearchConfig, ShuffledOrder, Verdict};

/// How branches are ordered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ordering {
    Unguided,
    /// Random d-OR order, seeded per instance.
    Random,
    /// A sidecar heuristic consulted up to the given d-OR depth.
    Heuristic {
        command: String,
        depth: usize,
    },
}

impl Ordering {
    pub fn id(&self) -> String {
        match self {
            Ordering::Unguided => "unguided".into(),
            Ordering::Random => "random".into(),
            Ordering::Heuristic { depth, .. } => format!("heuristic-d{depth}"),
        }
    }
}

/// What the time column and the budget measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clock {
    Wall,
    /// Node expansions converted to seconds at a fixed rate; the budget is
    /// `timeout × rate` expansions. Runs are reproducible byte for byte.
    Expansions {
        per_second: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchConfig {
    pub timeout: Duration,
    pub ordering: Ordering,
    pub clock: Clock,
    pub seed: u64,
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchVerdict {
    Tdc,
    NotTdc,
    Timeout,
    Error,
}

impl BenchVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            BenchVerdict::Tdc => "tdc",
            BenchVerdict::NotTdc => "not_tdc",
            BenchVerdict::Timeout => "timeout",
            BenchVerdict::Error => "error",
        }
    }

    pub fn is_solved(self) -> bool {
        matches!(self, BenchVerdict::Tdc | BenchVerdict::NotTdc)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub instance: String,
    pub verdict: BenchVerdict,
    pub seconds: f64,
    pub expansions: u64,
    pub config: String,
    pub seed: u64,
    /// Error text, or `degraded` when the heuristic fell back.
    pub note: String,
}

pub const RECORD_HEADER: &str = "instance,verdict,seconds,expansions,config,seed,note";
pub const CURVE_HEADER: &str = "seconds,solved";

/// Instance files (`*.json`) of `dir`, sorted by file name.
pub fn load_dir(dir: &Path) -> io::Result<Vec<(String, Result<Dtnu, String>)>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    Ok(paths
        .into_iter()
        .map(|p| {
            let name = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let parsed = std::fs::read(&p)
                .map_err(|e| e.to_string())
                .and_then(|bytes| parse_dtnu(&bytes).map_err(|e| e.to_string()));
            (name, parsed)
        })
        .collect())
}

fn run_one(index: usize, name: &str, d: &Dtnu, cfg: &BenchConfig) -> BenchRecord {
    let search = match cfg.clock {
        Clock::Wall => SearchConfig {
            timeout: Some(cfg.timeout),
            max_expansions: None,
        },
        Clock::Expansions { per_second } => SearchConfig {
            timeout: None,
            max_expansions: Some((cfg.timeout.as_secs_f64() * per_second as f64) as u64),
        },
    };
    let mut note = String::new();
    let result = match &cfg.ordering {
        Ordering::Unguided => solve_with(d, search, &mut CreationOrder),
        Ordering::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(index as u64);
            solve_with(d, search, &mut ShuffledOrder(rng))
        }
        Ordering::Heuristic { command, depth } => {
            match SidecarClient::spawn_command_line(command) {
                Ok(mut client) => {
                    let mut order = HeuristicOrder::new(&mut client, *depth);
                    let r = solve_with(d, search, &mut order);
                    if order.degraded {
                        note = "degraded".into();
                    }
                    r
                }
                Err(e) => {
                    note = format!("degraded: {e}");
                    solve_with(d, search, &mut CreationOrder)
                }
            }
        }
    };
    let verdict = match result.verdict {
        Verdict::Tdc(_) => BenchVerdict::Tdc,
        Verdict::NotTdc => BenchVerdict::NotTdc,
        Verdict::Timeout => BenchVerdict::Timeout,
    };
    let seconds = match cfg.clock {
        Clock::Wall => result.stats.elapsed.as_secs_f64(),
        Clock::Expansions { per_second } => result.stats.expansions as f64 / per_second as f64,
    };
    BenchRecord {
        instance: name.to_string(),
        verdict,
        seconds,
        expansions: result.stats.expansions,
        config: cfg.ordering.id(),
        seed: cfg.seed,
        note,
    }
}

/// Solves every instance on a worker pool; records keep the input order.
pub fn run_bench(
    instances: &[(String, Result<Dtnu, String>)],
    cfg: &BenchConfig,
) -> Vec<BenchRecord> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .expect("thread pool");
    pool.install(|| {
        instances
            .par_iter()
            .enumerate()
            .map(|(i, (name, parsed))| match parsed {
                Ok(d) => run_one(i, name, d, cfg),
                Err(e) => BenchRecord {
                    instance: name.clone(),
                    verdict: BenchVerdict::Error,
                    seconds: 0.0,
                    expansions: 0,
                    config: cfg.ordering.id(),
                    seed: cfg.seed,
                    note: e.clone(),
                },
            })
            .collect()
    })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn records_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(RECORD_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{:.6},{},{},{},{}",
            csv_field(&r.instance),
            r.verdict.as_str(),
            r.seconds,
            r.expansions,
            csv_field(&r.config),
            r.seed,
            csv_field(&r.note)
        );
    }
    out
}

/// `(X, Y)`: Y instances were solved within X seconds. Starts at `(0, 0)`,
/// steps at each solve time, and ends at the timeout.
pub fn solved_curve(records: &[BenchRecord], timeout: Duration) -> Vec<(f64, usize)> {
    let mut times: Vec<f64> = records
        .iter()
        .filter(|r| r.verdict.is_solved())
        .map(|r| r.seconds)
        .collect();
    times.sort_by(f64::total_cmp);
    let mut curve = vec![(0.0, 0)];
    for (k, t) in times.iter().enumerate() {
        match curve.last_mut() {
            Some(last) if last.0 == *t => last.1 = k + 1,
            _ => curve.push((*t, k + 1)),
        }
    }
    let end = timeout.as_secs_f64().max(curve.last().map_or(0.0, |p| p.0));
    let solved = times.len();
    if curve.last().is_some_and(|p| p.0 < end) {
        curve.push((end, solved));
    }
    curve
}

pub fn curve_csv(curve: &[(f64, usize)]) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for (x, y) in curve {
        let _ = writeln!(out, "{x:.6},{y}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(verdict: BenchVerdict, seconds: f64) -> BenchRecord {
        BenchRecord {
            instance: "i".into(),
            verdict,
            seconds,
            expansions: 0,
            config: "unguided".into(),
            seed: 0,
            note: String::new(),
        }
    }

    #[test]
    fn curve_is_a_monotone_step_function() {
        let records = vec![
            record(BenchVerdict::Tdc, 2.0),
            record(BenchVerdict::Timeout, 30.0),
            record(BenchVerdict::NotTdc, 0.5),
            record(BenchVerdict::Tdc, 0.5),
            record(BenchVerdict::Error, 0.0),
        ];
        let curve = solved_curve(&records, Duration::from_secs(30));
        assert_eq!(curve, vec![(0.0, 0), (0.5, 2), (2.0, 3), (30.0, 3)]);
        assert!(curve
            .windows(2)
            .all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1));
    }

    #[test]
    fn csv_escapes_notes() {
        let mut r = record(BenchVerdict::Error, 0.0);
        r.note = "bad, \"quoted\"".into();
        let text = records_csv(&[r]);
        assert!(text.ends_with(",\"bad, \"\"quoted\"\"\"\n"));
        assert!(text.starts_with(RECORD_HEADER));
    }
}
