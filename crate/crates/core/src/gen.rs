//! Random DTNU generation and self-supervised labeling of training data.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};
use std::ops::RangeInclusive;
use std::time::Duration;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encode::{encode, GraphEncoding};
use crate::model::{Conjunct, ContingencyLink, Disjunct, Dtnu, TimepointId};
use crate::search::{Decision, DtnuState, SearchConfig, ShuffledOrder, Solver, Verdict};
use crate::time::{Interval, Rational};

pub const DATASET_FORMAT: &str = "tdc-dataset/1";

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub n_controllables: RangeInclusive<u32>,
    pub n_uncontrollables: RangeInclusive<u32>,
    /// Bounds are drawn in hundredths within this range.
    pub bound_range: (Rational, Rational),
    pub max_conjuncts: u32,
    pub extra_disjunct_prob: f64,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            n_controllables: 10..=20,
            n_uncontrollables: 1..=3,
            bound_range: (Rational::ZERO, Rational::from_integer(100)),
            max_conjuncts: 5,
            extra_disjunct_prob: 0.2,
            seed: 0,
        }
    }
}

impl GenParams {
    /// Generator for instance `index` of the batch seeded by `self.seed`.
    pub fn instance_rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

fn draw_bound(p: &GenParams, rng: &mut impl Rng) -> Rational {
    let lo = (p.bound_range.0 * 100).ceil().to_integer();
    let hi = (p.bound_range.1 * 100).floor().to_integer();
    Rational::new(rng.random_range(lo..=hi), 100)
}

fn draw_interval(p: &GenParams, rng: &mut impl Rng) -> Interval {
    let (x, y) = (draw_bound(p, rng), draw_bound(p, rng));
    Interval::closed(x.min(y), x.max(y)).expect("ordered bounds")
}

/// `v - other ∈ iv` or `v ∈ iv`, chosen uniformly.
fn draw_conjunct(v: TimepointId, n: u32, p: &GenParams, rng: &mut impl Rng) -> Conjunct {
    let iv = draw_interval(p, rng);
    if n > 1 && rng.random_bool(0.5) {
        let mut other = rng.random_range(0..n - 1);
        if other >= v.0 {
            other += 1;
        }
        Conjunct::distance(v, TimepointId(other), iv)
    } else {
        Conjunct::bounded(v, iv)
    }
}

pub fn generate_dtnu(p: &GenParams, rng: &mut impl Rng) -> Dtnu {
    let n1 = rng.random_range(p.n_controllables.clone());
    let n2 = rng.random_range(p.n_uncontrollables.clone()).min(n1);
    let n = n1 + n2;
    let controllables: Vec<String> = (1..=n1).map(|i| format!("a{i}")).collect();
    let uncontrollables: Vec<String> = (1..=n2).map(|i| format!("u{i}")).collect();

    let sources: Vec<u32> = (0..n1)
        .collect::<Vec<_>>()
        .choose_multiple(rng, n2 as usize)
        .copied()
        .collect();
    let links: Vec<ContingencyLink> = sources
        .iter()
        .enumerate()
        .map(|(k, src)| ContingencyLink {
            source: TimepointId(*src),
            target: TimepointId(n1 + k as u32),
            intervals: vec![draw_interval(p, rng)],
        })
        .collect();

    let mut mentioned = vec![false; n as usize];
    for l in &links {
        mentioned[l.source.index()] = true;
        mentioned[l.target.index()] = true;
    }
    let mut constraints: Vec<Disjunct> = Vec::new();
    for v in (0..n).map(TimepointId) {
        if mentioned[v.index()] && !rng.random_bool(p.extra_disjunct_prob) {
            continue;
        }
        let size = rng.random_range(1..=p.max_conjuncts.max(1));
        let mut conjuncts = vec![draw_conjunct(v, n, p, rng)];
        for _ in 1..size {
            let w = TimepointId(rng.random_range(0..n));
            conjuncts.push(draw_conjunct(w, n, p, rng));
        }
        for c in &conjuncts {
            for tp in c.timepoints() {
                mentioned[tp.index()] = true;
            }
        }
        constraints.push(Disjunct::new(conjuncts));
    }

    Dtnu::new(controllables, uncontrollables, constraints, links, vec![])
        .expect("generated instances are well formed")
}

/// One labeled training example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub encoding: GraphEncoding,
    /// Active node index → 0 or 1.
    pub labels: BTreeMap<usize, u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelConfig {
    pub explorations: u32,
    pub timeout: Duration,
    /// Deterministic alternative to the wall-clock timeout.
    pub max_expansions: Option<u64>,
}

impl Default for LabelConfig {
    fn default() -> Self {
        LabelConfig {
            explorations: 25,
            timeout: Duration::from_secs(3),
            max_expansions: None,
        }
    }
}

/// Labels each root decision with the outcome of up to `explorations`
/// randomized searches below it. All timeouts count as 0.
pub fn label_instance(d: &Dtnu, cfg: &LabelConfig, rng: &mut impl Rng) -> TrainingExample {
    let root = DtnuState::root(d);
    let encoding = encode(d, &root);
    let search = SearchConfig {
        timeout: Some(cfg.timeout),
        max_expansions: cfg.max_expansions,
    };
    let mut labels = BTreeMap::new();
    for &i in &encoding.active {
        let decision: Decision = encoding.node_decisions[&i];
        let mut label = 0;
        for _ in 0..cfg.explorations {
            let mut order = ShuffledOrder(ChaCha8Rng::seed_from_u64(rng.random()));
            let result = Solver::new(d, search, &mut order)
                .restrict_root(vec![decision])
                .run();
            match result.verdict {
                Verdict::Tdc(_) => {
                    label = 1;
                    break;
                }
                Verdict::NotTdc => break,
                Verdict::Timeout => {}
            }
        }
        labels.insert(i, label);
    }
    TrainingExample { encoding, labels }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "RecordWire", from = "RecordWire")]
pub struct DatasetRecord {
    pub seed: u64,
    pub index: u64,
    pub example: TrainingExample,
}

// Spelled out instead of `#[serde(flatten)]`, which cannot read floats back
// under serde_json's arbitrary precision numbers.
#[derive(Serialize, Deserialize)]
struct RecordWire {
    seed: u64,
    index: u64,
    node_features: Vec<[u8; crate::encode::NODE_FEATURES]>,
    edges: Vec<[usize; 2]>,
    edge_features: Vec<[u8; crate::encode::EDGE_FEATURES]>,
    active: Vec<usize>,
    d_max: f64,
    labels: BTreeMap<usize, u8>,
}

impl From<DatasetRecord> for RecordWire {
    fn from(r: DatasetRecord) -> Self {
        let e = r.example.encoding;
        RecordWire {
            seed: r.seed,
            index: r.index,
            node_features: e.node_features,
            edges: e.edges,
            edge_features: e.edge_features,
            active: e.active,
            d_max: e.d_max,
            labels: r.example.labels,
        }
    }
}

impl From<RecordWire> for DatasetRecord {
    fn from(w: RecordWire) -> Self {
        DatasetRecord {
            seed: w.seed,
            index: w.index,
            example: TrainingExample {
                encoding: GraphEncoding {
                    node_features: w.node_features,
                    edges: w.edges,
                    edge_features: w.edge_features,
                    active: w.active,
                    node_decisions: BTreeMap::new(),
                    d_max: w.d_max,
                },
                labels: w.labels,
            },
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetHeader {
    format: String,
    count: usize,
}

/// Writes `records` as a header line followed by one JSON record per line.
pub fn write_dataset(out: &mut impl Write, records: &[DatasetRecord]) -> io::Result<()> {
    let header = DatasetHeader {
        format: DATASET_FORMAT.to_string(),
        count: records.len(),
    };
    serde_json::to_writer(&mut *out, &header)?;
    out.write_all(b"\n")?;
    for r in records {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Generates and labels `count` instances in parallel. Record `i` depends
/// only on `(params, i)`.
pub fn build_dataset(count: u64, params: &GenParams, cfg: &LabelConfig) -> Vec<DatasetRecord> {
    use rayon::prelude::*;
    (0..count)
        .into_par_iter()
        .map(|index| {
            let mut rng = params.instance_rng(index);
            let d = generate_dtnu(params, &mut rng);
            let example = label_instance(&d, cfg, &mut rng);
            DatasetRecord {
                seed: params.seed,
                index,
                example,
            }
        })
        .collect()
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("missing or invalid `{DATASET_FORMAT}` header")]
    Header,
    #[error("record {index}: {message}")]
    Record { index: usize, message: String },
}

fn validate(r: &DatasetRecord) -> Result<(), String> {
    let e = &r.example;
    let n = e.encoding.n_nodes();
    if e.encoding.edges.len() != e.encoding.edge_features.len() {
        return Err("edge and edge feature counts differ".into());
    }
    if e.encoding.edges.iter().flatten().any(|i| *i >= n) {
        return Err("edge endpoint out of range".into());
    }
    let labeled: Vec<usize> = e.labels.keys().copied().collect();
    if labeled != e.encoding.active {
        return Err("labels do not cover exactly the active nodes".into());
    }
    if e.labels.values().any(|y| *y > 1) {
        return Err("label outside {0, 1}".into());
    }
    Ok(())
}

pub fn read_dataset(input: impl BufRead) -> Result<Vec<DatasetRecord>, DatasetError> {
    let mut lines = input.lines();
    let header: DatasetHeader = match lines.next() {
        Some(line) => serde_json::from_str(&line?).map_err(|_| DatasetError::Header)?,
        None => return Err(DatasetError::Header),
    };
    if header.format != DATASET_FORMAT {
        return Err(DatasetError::Header);
    }
    let mut out = Vec::new();
    for (index, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DatasetRecord =
            serde_json::from_str(&line).map_err(|e| DatasetError::Record {
                index,
                message: e.to_string(),
            })?;
        validate(&record).map_err(|message| DatasetError::Record { index, message })?;
        out.push(record);
    }
    if out.len() != header.count {
        return Err(DatasetError::Record {
            index: out.len(),
            message: format!(
                "header announces {} records, found {}",
                header.count,
                out.len()
            ),
        });
    }
    Ok(out)
}

/// Splits into training and validation sets at a 5:1 ratio, keeping order.
pub fn split_train_validation<T>(mut records: Vec<T>) -> (Vec<T>, Vec<T>) {
    let n_val = records.len() / 6;
    let val = records.split_off(records.len() - n_val);
    (records, val)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::{parse_dtnu, serialize_dtnu};

    #[test]
    fn defaults() {
        let p = GenParams::default();
        assert_eq!(p.n_controllables, 10..=20);
        assert_eq!(p.n_uncontrollables, 1..=3);
        assert_eq!(p.max_conjuncts, 5);
        assert_eq!(p.extra_disjunct_prob, 0.2);
    }

    #[test]
    fn generated_instances_are_valid_and_in_range() {
        let p = GenParams {
            seed: 11,
            ..GenParams::default()
        };
        for i in 0..200 {
            let d = generate_dtnu(&p, &mut p.instance_rng(i));
            assert!((10..=20).contains(&d.n_controllables()));
            assert!((1..=3).contains(&d.n_uncontrollables()));
            assert_eq!(d.links.len(), d.n_uncontrollables());
            let sources: std::collections::BTreeSet<_> = d.links.iter().map(|l| l.source).collect();
            assert_eq!(sources.len(), d.links.len());
            for dj in &d.constraints {
                assert!((1..=5).contains(&dj.conjuncts.len()));
            }
            for tp in d.timepoint_ids() {
                assert!(
                    d.constrained().contains(&tp) || d.link_to(tp).is_some() || d.is_source(tp)
                );
            }
            assert_eq!(parse_dtnu(&serialize_dtnu(&d)).unwrap(), d);
        }
    }

    #[test]
    fn reproducible() {
        let p = GenParams {
            seed: 5,
            ..GenParams::default()
        };
        let a = generate_dtnu(&p, &mut p.instance_rng(3));
        let b = generate_dtnu(&p, &mut p.instance_rng(3));
        let c = generate_dtnu(&p, &mut p.instance_rng(4));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn split_ratio() {
        let (train, val) = split_train_validation((0..60).collect());
        assert_eq!((train.len(), val.len()), (50, 10));
        assert_eq!(val[0], 50);
    }
}
