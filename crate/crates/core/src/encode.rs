//! Graph encoding of a DTNU search node for the learned heuristic.
//!
//! Nodes: one per unscheduled controllable, one per pending uncontrollable,
//! one intermediary per multi-conjunct disjunct, and one wait node, in that
//! order. The wait node also serves as the time origin: bounded conjuncts
//! and activation windows become edges from it.
//!
//! Every relation `x - y ∈ [lo, hi]` becomes a pair of directed edges:
//! `y → x` carrying `[lo, hi]` and `x → y` carrying `[-hi, -lo]`. Inside a
//! multi-conjunct disjunct the relation is routed through the intermediary
//! node (`y → I → x` and back), with membership-typed edges.
//!
//! Times are made relative to the node's current time and divided by the
//! largest finite bound magnitude `d_max`. Each bound is coded by one of ten
//! distance classes over its magnitude plus a sign flag. An infinite bound
//! takes class 9 and sets the unbounded flag.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};

use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Conjunct, Dtnu, TimepointId};
use crate::search::{Decision, DtnuState};
use crate::time::{Interval, Rational};

pub const NODE_FEATURES: usize = 4;
pub const EDGE_FEATURES: usize = 27;
pub const DISTANCE_CLASSES: usize = 10;

pub const NODE_CONTROLLABLE: usize = 0;
pub const NODE_UNCONTROLLABLE: usize = 1;
pub const NODE_INTERMEDIARY: usize = 2;
pub const NODE_WAIT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeType {
    Constraint = 0,
    Membership = 1,
    Contingency = 2,
    Activation = 3,
}

const LOWER_CLASS: usize = 4;
const UPPER_CLASS: usize = LOWER_CLASS + DISTANCE_CLASSES;
const LOWER_NEGATIVE: usize = UPPER_CLASS + DISTANCE_CLASSES;
const UPPER_NEGATIVE: usize = LOWER_NEGATIVE + 1;
const UNBOUNDED: usize = UPPER_NEGATIVE + 1;

#[derive(Debug, Error, PartialEq)]
#[error("normalized value {0} is outside [0, 1]")]
pub struct OutOfRange(pub f64);

/// `floor(10 v)` clamped to 9.
pub fn distance_class(v: f64) -> Result<usize, OutOfRange> {
    if !(0.0..=1.0).contains(&v) {
        return Err(OutOfRange(v));
    }
    Ok(((v * 10.0).floor() as usize).min(DISTANCE_CLASSES - 1))
}

fn exact_class(magnitude: Rational, d_max: Rational) -> usize {
    if d_max == Rational::ZERO {
        return 0;
    }
    // exact floor avoids float error right at class boundaries
    let scaled = magnitude * Rational::from_integer(DISTANCE_CLASSES as i64) / d_max;
    (scaled.floor().to_integer() as usize).min(DISTANCE_CLASSES - 1)
}

/// One end of a relation interval; `None` is infinite.
type Bound = Option<Rational>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEncoding {
    pub node_features: Vec<[u8; NODE_FEATURES]>,
    /// Directed `(source, destination)` pairs.
    pub edges: Vec<[usize; 2]>,
    pub edge_features: Vec<[u8; EDGE_FEATURES]>,
    /// Indices of decision nodes, ascending.
    pub active: Vec<usize>,
    #[serde(skip)]
    pub node_decisions: BTreeMap<usize, Decision>,
    pub d_max: f64,
}

impl GraphEncoding {
    pub fn n_nodes(&self) -> usize {
        self.node_features.len()
    }

    pub fn wait_node(&self) -> usize {
        self.n_nodes() - 1
    }

    /// Active node for `decision`.
    pub fn node_of(&self, decision: Decision) -> Option<usize> {
        self.node_decisions
            .iter()
            .find(|(_, d)| **d == decision)
            .map(|(i, _)| *i)
    }

    /// A hash invariant under node renumbering, from iterated neighborhood
    /// refinement of node labels.
    pub fn fingerprint(&self) -> u64 {
        let n = self.n_nodes();
        let mut labels: Vec<u64> = self
            .node_features
            .iter()
            .enumerate()
            .map(|(i, f)| hash_of(&(f, self.active.binary_search(&i).is_ok())))
            .collect();
        let mut out_edges: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut in_edges: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (k, [s, d]) in self.edges.iter().enumerate() {
            out_edges[*s].push(k);
            in_edges[*d].push(k);
        }
        for _ in 0..n.max(1) {
            let next: Vec<u64> = (0..n)
                .map(|v| {
                    let mut outs: Vec<u64> = out_edges[v]
                        .iter()
                        .map(|&k| hash_of(&(self.edge_features[k], labels[self.edges[k][1]])))
                        .collect();
                    let mut ins: Vec<u64> = in_edges[v]
                        .iter()
                        .map(|&k| hash_of(&(self.edge_features[k], labels[self.edges[k][0]])))
                        .collect();
                    outs.sort_unstable();
                    ins.sort_unstable();
                    hash_of(&(labels[v], outs, ins))
                })
                .collect();
            labels = next;
        }
        labels.sort_unstable();
        hash_of(&labels)
    }
}

fn hash_of<T: Hash>(x: &T) -> u64 {
    let mut h = DefaultHasher::new();
    x.hash(&mut h);
    h.finish()
}

struct Relation {
    from: usize,
    to: usize,
    lo: Bound,
    hi: Bound,
    ty: EdgeType,
    via: Option<usize>,
}

fn relative(iv: &Interval, t: Rational) -> (Bound, Bound) {
    (Some(iv.lo - t), iv.hi.finite().map(|h| h - t))
}

fn edge_row(ty: EdgeType, lo: Bound, hi: Bound, d_max: Rational) -> [u8; EDGE_FEATURES] {
    let mut row = [0u8; EDGE_FEATURES];
    row[ty as usize] = 1;
    let mut code = |b: Bound, class_at: usize, neg_at: usize| match b {
        Some(v) => {
            row[class_at + exact_class(v.abs(), d_max)] = 1;
            if v < Rational::ZERO {
                row[neg_at] = 1;
            }
        }
        None => {
            row[class_at + DISTANCE_CLASSES - 1] = 1;
            row[UNBOUNDED] = 1;
        }
    };
    code(lo, LOWER_CLASS, LOWER_NEGATIVE);
    code(hi, UPPER_CLASS, UPPER_NEGATIVE);
    // an infinite lower end is necessarily negative
    if lo.is_none() {
        row[LOWER_NEGATIVE] = 1;
    }
    row
}

/// Encodes the search node `n` of instance `d`.
pub fn encode(d: &Dtnu, n: &DtnuState) -> GraphEncoding {
    let t = n.time;
    let mut index: BTreeMap<TimepointId, usize> = BTreeMap::new();
    let mut node_features = Vec::new();
    let mut node_decisions = BTreeMap::new();
    let mut active = Vec::new();

    for a in n.unscheduled_controllables(d) {
        let i = node_features.len();
        index.insert(a, i);
        node_features.push(one_hot(NODE_CONTROLLABLE));
        node_decisions.insert(i, Decision::Execute(a));
        active.push(i);
    }
    for u in n.pending_uncontrollables(d) {
        index.insert(u, node_features.len());
        node_features.push(one_hot(NODE_UNCONTROLLABLE));
    }

    let mut relations: Vec<Relation> = Vec::new();
    let wait_slot = usize::MAX; // patched once the node count is known
    let endpoints = |c: &Conjunct| -> Option<(usize, usize, Bound, Bound)> {
        match *c {
            Conjunct::Bounded { v, iv } => {
                let (lo, hi) = relative(&iv, t);
                Some((wait_slot, *index.get(&v)?, lo, hi))
            }
            Conjunct::Distance { later, earlier, iv } => Some((
                *index.get(&earlier)?,
                *index.get(&later)?,
                Some(iv.lo),
                iv.hi.finite(),
            )),
            Conjunct::True | Conjunct::False => None,
        }
    };
    for dj in &n.constraints {
        let usable: Vec<_> = dj.conjuncts.iter().filter_map(endpoints).collect();
        let via = if dj.conjuncts.len() > 1 {
            let i = node_features.len();
            node_features.push(one_hot(NODE_INTERMEDIARY));
            Some(i)
        } else {
            None
        };
        for (from, to, lo, hi) in usable {
            relations.push(Relation {
                from,
                to,
                lo,
                hi,
                ty: EdgeType::Constraint,
                via,
            });
        }
    }
    for a in n.unscheduled_controllables(d) {
        for link in d.links_from(a) {
            for iv in &link.intervals {
                relations.push(Relation {
                    from: index[&a],
                    to: index[&link.target],
                    lo: Some(iv.lo),
                    hi: iv.hi.finite(),
                    ty: EdgeType::Contingency,
                    via: None,
                });
            }
        }
    }
    for (u, pieces) in &n.activation {
        for iv in pieces {
            let (lo, hi) = relative(iv, t);
            relations.push(Relation {
                from: wait_slot,
                to: index[u],
                lo,
                hi,
                ty: EdgeType::Activation,
                via: None,
            });
        }
    }

    let wait = node_features.len();
    node_features.push(one_hot(NODE_WAIT));
    if n.wait_plan().is_some() {
        node_decisions.insert(wait, Decision::Wait);
        active.push(wait);
    }

    let d_max = relations
        .iter()
        .flat_map(|r| [r.lo, r.hi])
        .flatten()
        .map(|v| v.abs())
        .max()
        .unwrap_or(Rational::ZERO);

    let mut edges = Vec::new();
    let mut edge_features = Vec::new();
    let neg = |b: Bound| b.map(|v| -v);
    for r in &relations {
        let from = if r.from == wait_slot { wait } else { r.from };
        let to = if r.to == wait_slot { wait } else { r.to };
        let forward = |ty| edge_row(ty, r.lo, r.hi, d_max);
        let backward = |ty| edge_row(ty, neg(r.hi), neg(r.lo), d_max);
        let hops: Vec<(usize, usize, EdgeType)> = match r.via {
            None => vec![(from, to, r.ty)],
            Some(i) => vec![
                (from, i, EdgeType::Membership),
                (i, to, EdgeType::Membership),
            ],
        };
        for (s, e, ty) in hops {
            edges.push([s, e]);
            edge_features.push(forward(ty));
            edges.push([e, s]);
            edge_features.push(backward(ty));
        }
    }

    GraphEncoding {
        node_features,
        edges,
        edge_features,
        active,
        node_decisions,
        d_max: d_max.to_f64().unwrap_or(0.0),
    }
}

fn one_hot(k: usize) -> [u8; NODE_FEATURES] {
    let mut row = [0; NODE_FEATURES];
    row[k] = 1;
    row
}

/// Lower class index, upper class index, flags `(lower negative, upper
/// negative, unbounded)` of an edge feature row.
pub fn decode_edge(row: &[u8; EDGE_FEATURES]) -> (usize, usize, usize, [bool; 3]) {
    let ty = row[..LOWER_CLASS].iter().position(|x| *x == 1).unwrap_or(0);
    let lo = row[LOWER_CLASS..UPPER_CLASS]
        .iter()
        .position(|x| *x == 1)
        .unwrap_or(0);
    let hi = row[UPPER_CLASS..LOWER_NEGATIVE]
        .iter()
        .position(|x| *x == 1)
        .unwrap_or(0);
    (
        ty,
        lo,
        hi,
        [
            row[LOWER_NEGATIVE] == 1,
            row[UPPER_NEGATIVE] == 1,
            row[UNBOUNDED] == 1,
        ],
    )
}
