//! The `tdc` command line.
//!
//! Exit codes: 0 controllable (or every simulation satisfied), 1 not
//! controllable (or some simulation failed), 2 timeout, 3 error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bench::{self, BenchConfig, Clock, Ordering};
use crate::format::{parse_dtnu, serialize_dtnu};
use crate::gen::{build_dataset, generate_dtnu, write_dataset, GenParams, LabelConfig};
use crate::heuristic::{HeuristicOrder, SidecarClient};
use crate::model::Dtnu;
use crate::search::{solve_with, CreationOrder, SearchConfig, SearchResult, Strategy, Verdict};
use crate::simulate::{simulate_execution, Sampler};

pub const EXIT_TDC: i32 = 0;
pub const EXIT_NOT_TDC: i32 = 1;
pub const EXIT_TIMEOUT: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "tdc",
    version,
    about = "Time-based dynamic controllability checking for DTNUs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide controllability of one instance.
    Solve(SolveArgs),
    /// Write random instances to a directory.
    Generate(GenerateArgs),
    /// Generate and label instances into a tdc-dataset/1 file.
    Label(LabelArgs),
    /// Solve every instance of a directory.
    ///
    /// Records CSV columns: instance, verdict (tdc | not_tdc | timeout |
    /// error), seconds, expansions, config, seed, note. Curve CSV columns:
    /// seconds, solved (instances proven either way within that time).
    Bench(BenchArgs),
    /// Replay a strategy against random environments.
    Simulate(SimulateArgs),
}

#[derive(Debug, clap::Args)]
pub struct SolveArgs {
    pub file: PathBuf,
    /// Seconds before giving up.
    #[arg(long, default_value_t = 30.0)]
    pub timeout: f64,
    /// Give up after this many node expansions.
    #[arg(long)]
    pub max_expansions: Option<u64>,
    /// Sidecar command serving the tdc-heur/1 protocol.
    #[arg(long)]
    pub heuristic_cmd: Option<String>,
    /// Deepest d-OR node at which the heuristic is consulted.
    #[arg(long, default_value_t = 15)]
    pub heuristic_depth: usize,
    /// Write the strategy here when one is found.
    #[arg(long)]
    pub strategy_out: Option<PathBuf>,
    /// Print the strategy.
    #[arg(long)]
    pub print_strategy: bool,
}

#[derive(Debug, clap::Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 10)]
    pub min_controllables: u32,
    #[arg(long, default_value_t = 20)]
    pub max_controllables: u32,
    #[arg(long, default_value_t = 1)]
    pub min_uncontrollables: u32,
    #[arg(long, default_value_t = 3)]
    pub max_uncontrollables: u32,
    #[arg(long, default_value_t = 5)]
    pub max_conjuncts: u32,
    #[arg(long, default_value_t = 0.2)]
    pub extra_disjunct_prob: f64,
    #[arg(long, env = "TDC_SEED", default_value_t = 0)]
    pub seed: u64,
}

impl GenArgs {
    fn params(&self) -> Result<GenParams, String> {
        if self.min_controllables == 0
            || self.min_controllables > self.max_controllables
            || self.min_uncontrollables > self.max_uncontrollables
            || self.max_conjuncts == 0
            || !(0.0..=1.0).contains(&self.extra_disjunct_prob)
        {
            return Err("invalid generator parameters".into());
        }
        Ok(GenParams {
            n_controllables: self.min_controllables..=self.max_controllables,
            n_uncontrollables: self.min_uncontrollables..=self.max_uncontrollables,
            max_conjuncts: self.max_conjuncts,
            extra_disjunct_prob: self.extra_disjunct_prob,
            seed: self.seed,
            ..GenParams::default()
        })
    }
}

#[derive(Debug, clap::Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 1)]
    pub count: u64,
    /// Existing directory to write `instance-NNNN.json` files into.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub gen: GenArgs,
}

#[derive(Debug, clap::Args)]
pub struct LabelArgs {
    #[arg(long, default_value_t = 100)]
    pub count: u64,
    /// Explorations per root decision.
    #[arg(long, default_value_t = 25)]
    pub nu: u32,
    /// Seconds per exploration.
    #[arg(long, default_value_t = 3.0)]
    pub tau: f64,
    /// Deterministic exploration budget in node expansions.
    #[arg(long)]
    pub max_expansions: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub gen: GenArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ClockArg {
    Wall,
    Expansions,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OrderArg {
    Unguided,
    Random,
    Heuristic,
}

#[derive(Debug, clap::Args)]
pub struct BenchArgs {
    pub dir: PathBuf,
    #[arg(long, default_value_t = 30.0)]
    pub timeout: f64,
    #[arg(long, value_enum, default_value = "unguided")]
    pub config: OrderArg,
    #[arg(long)]
    pub heuristic_cmd: Option<String>,
    #[arg(long, default_value_t = 15)]
    pub heuristic_depth: usize,
    /// `expansions` measures time in node expansions for reproducible output.
    #[arg(long, value_enum, default_value = "wall")]
    pub clock: ClockArg,
    /// Expansions per second under `--clock expansions`.
    #[arg(long, default_value_t = 100_000)]
    pub expansions_per_second: u64,
    #[arg(long, env = "TDC_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to the records path with a `.curve.csv` suffix.
    #[arg(long)]
    pub curve_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SamplerArg {
    Uniform,
    Endpoints,
}

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    pub instance: PathBuf,
    pub strategy: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub runs: u64,
    #[arg(long, value_enum, default_value = "uniform")]
    pub sampler: SamplerArg,
    #[arg(long, env = "TDC_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Print the trace of the first run.
    #[arg(long)]
    pub trace: bool,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run(args: impl IntoIterator<Item = impl Into<OsString> + Clone>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Generate(a) => cmd_generate(&a),
        Command::Label(a) => cmd_label(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Simulate(a) => cmd_simulate(&a),
    };
    match result {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            EXIT_ERROR
        }
    }
}

fn read_instance(path: &Path) -> Result<Dtnu, String> {
    let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_dtnu(&bytes).map_err(|e| format!("{}: {e}", path.display()))
}

fn seconds(s: f64) -> Result<Duration, String> {
    Duration::try_from_secs_f64(s)
        .ok()
        .filter(|d| !d.is_zero())
        .ok_or_else(|| format!("invalid duration {s}"))
}

fn require_dir(dir: &Path) -> Result<(), String> {
    if dir.is_dir() {
        Ok(())
    } else {
        Err(format!("output directory {} does not exist", dir.display()))
    }
}

fn parent_dir(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

pub fn cmd_solve(a: &SolveArgs) -> Result<i32, String> {
    let d = read_instance(&a.file)?;
    if let Some(out) = &a.strategy_out {
        require_dir(parent_dir(out))?;
    }
    let config = SearchConfig {
        timeout: Some(seconds(a.timeout)?),
        max_expansions: a.max_expansions,
    };
    let started = Instant::now();
    let (result, degraded): (SearchResult, bool) = match &a.heuristic_cmd {
        Some(cmd) => match SidecarClient::spawn_command_line(cmd) {
            Ok(mut client) => {
                let mut order = HeuristicOrder::new(&mut client, a.heuristic_depth);
                let r = solve_with(&d, config, &mut order);
                (r, order.degraded)
            }
            Err(e) => {
                eprintln!("warning: heuristic unavailable ({e}); using creation order");
                (solve_with(&d, config, &mut CreationOrder), true)
            }
        },
        None => (solve_with(&d, config, &mut CreationOrder), false),
    };
    let wall = started.elapsed();
    if degraded && a.heuristic_cmd.is_some() {
        eprintln!("warning: heuristic degraded; remaining branches in creation order");
    }
    println!("verdict: {}", result.verdict.label());
    println!("wall time: {:.3} s", wall.as_secs_f64());
    println!("expansions: {}", result.stats.expansions);
    match &result.verdict {
        Verdict::Tdc(s) => {
            if a.print_strategy {
                print!("{s}");
            }
            if let Some(out) = &a.strategy_out {
                fs::write(out, s.to_json()).map_err(|e| format!("{}: {e}", out.display()))?;
            }
            Ok(EXIT_TDC)
        }
        Verdict::NotTdc => Ok(EXIT_NOT_TDC),
        Verdict::Timeout => Ok(EXIT_TIMEOUT),
    }
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<i32, String> {
    require_dir(&a.out)?;
    let params = a.gen.params()?;
    for i in 0..a.count {
        let d = generate_dtnu(&params, &mut params.instance_rng(i));
        let path = a.out.join(format!("instance-{i:04}.json"));
        fs::write(&path, serialize_dtnu(&d)).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    println!("wrote {} instances to {}", a.count, a.out.display());
    Ok(0)
}

pub fn cmd_label(a: &LabelArgs) -> Result<i32, String> {
    require_dir(parent_dir(&a.out))?;
    if a.nu == 0 {
        return Err("--nu must be at least 1".into());
    }
    let params = a.gen.params()?;
    let cfg = LabelConfig {
        explorations: a.nu,
        timeout: seconds(a.tau)?,
        max_expansions: a.max_expansions,
    };
    let records = build_dataset(a.count, &params, &cfg);
    let file = fs::File::create(&a.out).map_err(|e| format!("{}: {e}", a.out.display()))?;
    let mut w = std::io::BufWriter::new(file);
    write_dataset(&mut w, &records).map_err(|e| format!("{}: {e}", a.out.display()))?;
    let labels: usize = records.iter().map(|r| r.example.labels.len()).sum();
    let positive: usize = records
        .iter()
        .flat_map(|r| r.example.labels.values())
        .filter(|y| **y == 1)
        .count();
    println!(
        "wrote {} examples ({labels} labels, {positive} positive) to {}",
        records.len(),
        a.out.display()
    );
    Ok(0)
}

pub fn cmd_bench(a: &BenchArgs) -> Result<i32, String> {
    let curve_out = a.curve_out.clone().unwrap_or_else(|| {
        let mut s = a.out.clone().into_os_string();
        s.push(".curve.csv");
        PathBuf::from(s)
    });
    require_dir(parent_dir(&a.out))?;
    require_dir(parent_dir(&curve_out))?;
    let ordering = match a.config {
        OrderArg::Unguided => Ordering::Unguided,
        OrderArg::Random => Ordering::Random,
        OrderArg::Heuristic => Ordering::Heuristic {
            command: a
                .heuristic_cmd
                .clone()
                .ok_or("--config heuristic needs --heuristic-cmd")?,
            depth: a.heuristic_depth,
        },
    };
    let cfg = BenchConfig {
        timeout: seconds(a.timeout)?,
        ordering,
        clock: match a.clock {
            ClockArg::Wall => Clock::Wall,
            ClockArg::Expansions => Clock::Expansions {
                per_second: a.expansions_per_second.max(1),
            },
        },
        seed: a.seed,
        jobs: a.jobs,
    };
    let instances = bench::load_dir(&a.dir).map_err(|e| format!("{}: {e}", a.dir.display()))?;
    let records = bench::run_bench(&instances, &cfg);
    let curve = bench::solved_curve(&records, cfg.timeout);
    fs::write(&a.out, bench::records_csv(&records))
        .map_err(|e| format!("{}: {e}", a.out.display()))?;
    fs::write(&curve_out, bench::curve_csv(&curve))
        .map_err(|e| format!("{}: {e}", curve_out.display()))?;
    let solved = records.iter().filter(|r| r.verdict.is_solved()).count();
    println!("solved {solved} of {} instances", records.len());
    Ok(0)
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<i32, String> {
    let d = read_instance(&a.instance)?;
    let bytes = fs::read(&a.strategy).map_err(|e| format!("{}: {e}", a.strategy.display()))?;
    let s = Strategy::from_json(&bytes).map_err(|e| format!("{}: {e}", a.strategy.display()))?;
    let sampler = match a.sampler {
        SamplerArg::Uniform => Sampler::Uniform,
        SamplerArg::Endpoints => Sampler::Endpoints,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let (mut satisfied, mut failed) = (0u64, 0u64);
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for run in 0..a.runs {
        match simulate_execution(&d, &s, sampler, &mut rng) {
            Ok(trace) => {
                if a.trace && run == 0 {
                    for e in &trace.events {
                        let _ = writeln!(
                            out,
                            "{:>10} {:?} {}",
                            crate::time::format_rational(e.time),
                            e.kind,
                            e.timepoint
                        );
                    }
                }
                if trace.satisfied {
                    satisfied += 1;
                } else {
                    failed += 1;
                    let k = trace.violated.expect("unsatisfied trace names a disjunct");
                    let _ = writeln!(out, "run {run}: violates disjunct {k}");
                }
            }
            Err(e) => {
                failed += 1;
                let _ = writeln!(out, "run {run}: {e}");
            }
        }
    }
    let _ = writeln!(out, "satisfied {satisfied} of {} runs", a.runs);
    Ok(if failed == 0 { 0 } else { 1 })
}
