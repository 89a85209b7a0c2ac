//! Independent oracles and instance builders shared by the integration
//! tests and the acceptance suite.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;
use tdc::dtn::Dtn;
use tdc::model::{Conjunct, Disjunct, TimepointId};
use tdc::search::{NodeId, NodeType, Tree, Truth};
use tdc::time::{rat, Interval, Rational, TimeValue};

pub const GAMMA_PRIME: &str = r#"{
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
}
"#;

pub const TRIVIAL: &str = r#"{
  "format": "tdc-dtnu/1",
  "controllables": ["a1"],
  "uncontrollables": [],
  "constraints": [[{"type": "bounded", "timepoint": "a1", "interval": [0, 10]}]],
  "contingencies": []
}
"#;

/// Does `c` hold for the assignment? Evaluated without the library.
pub fn conjunct_holds(c: &Conjunct, x: &BTreeMap<TimepointId, Rational>) -> bool {
    let inside = |v: Rational, iv: &Interval| {
        v >= iv.lo
            && match iv.hi {
                TimeValue::Finite(h) => v <= h,
                TimeValue::Infinity => true,
            }
    };
    match c {
        Conjunct::Bounded { v, iv } => inside(x[v], iv),
        Conjunct::Distance { later, earlier, iv } => inside(x[later] - x[earlier], iv),
        Conjunct::True => true,
        Conjunct::False => false,
    }
}

/// `x[to] - x[from] ≤ w`
type Diff = (usize, usize, Rational);

fn diffs_of(c: &Conjunct, slot: &BTreeMap<TimepointId, usize>) -> Option<Vec<Diff>> {
    let (from, to, iv) = match c {
        Conjunct::Bounded { v, iv } => (0, slot[v], iv),
        Conjunct::Distance { later, earlier, iv } => (slot[earlier], slot[later], iv),
        Conjunct::True => return Some(vec![]),
        Conjunct::False => return None,
    };
    let mut out = vec![(to, from, -iv.lo)];
    if let TimeValue::Finite(h) = iv.hi {
        out.push((from, to, h));
    }
    Some(out)
}

/// Bellman-Ford from a virtual source; `None` on a negative cycle, else
/// potentials.
fn bellman_ford(n: usize, diffs: &[Diff]) -> Option<Vec<Rational>> {
    let mut dist = vec![Rational::ZERO; n];
    for _ in 0..=n {
        let mut changed = false;
        for &(from, to, w) in diffs {
            if dist[from] + w < dist[to] {
                dist[to] = dist[from] + w;
                changed = true;
            }
        }
        if !changed {
            return Some(dist);
        }
    }
    None
}

/// Exhaustive oracle: tries every conjunct selection.
pub fn oracle_feasible(p: &Dtn) -> bool {
    let slot: BTreeMap<TimepointId, usize> = p
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| (*v, i + 1))
        .collect();
    let n = p.variables.len() + 1;
    let floor: Vec<Diff> = (1..n).map(|i| (i, 0, -p.floor)).collect();
    let mut choice = vec![0usize; p.disjuncts.len()];
    if p.disjuncts.iter().any(|d| d.conjuncts.is_empty()) {
        return false;
    }
    loop {
        let mut diffs = floor.clone();
        let mut ok = true;
        for (d, k) in p.disjuncts.iter().zip(&choice) {
            match diffs_of(&d.conjuncts[*k], &slot) {
                Some(ds) => diffs.extend(ds),
                None => ok = false,
            }
        }
        if ok && bellman_ford(n, &diffs).is_some() {
            return true;
        }
        // next selection, odometer style
        let mut i = 0;
        loop {
            if i == choice.len() {
                return false;
            }
            choice[i] += 1;
            if choice[i] < p.disjuncts[i].conjuncts.len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// Small DTN: up to 4 variables, 3 disjuncts of up to 3 conjuncts, integer
/// bounds within ±10.
pub fn random_dtn(rng: &mut impl Rng) -> Dtn {
    let n = rng.random_range(1..=4u32);
    let vars: Vec<TimepointId> = (0..n).map(TimepointId).collect();
    let mut disjuncts = Vec::new();
    for _ in 0..rng.random_range(1..=3) {
        let mut cs = Vec::new();
        for _ in 0..rng.random_range(1..=3) {
            let v = TimepointId(rng.random_range(0..n));
            if n > 1 && rng.random_bool(0.6) {
                let mut w = TimepointId(rng.random_range(0..n));
                while w == v {
                    w = TimepointId(rng.random_range(0..n));
                }
                let lo = rng.random_range(-10..=10i64);
                let iv = if rng.random_bool(0.15) {
                    Interval::at_least(rat(lo))
                } else {
                    Interval::ints(lo, (lo + rng.random_range(0..=3i64)).min(10))
                };
                cs.push(Conjunct::distance(v, w, iv));
            } else {
                let lo = rng.random_range(0..=10i64);
                let iv = if rng.random_bool(0.15) {
                    Interval::at_least(rat(lo))
                } else {
                    Interval::ints(lo, (lo + rng.random_range(0..=3i64)).min(10))
                };
                cs.push(Conjunct::bounded(v, iv));
            }
        }
        disjuncts.push(Disjunct::new(cs));
    }
    Dtn {
        variables: vars,
        disjuncts,
        floor: rat(rng.random_range(0..=3)),
    }
}

/// Random AND/OR tree shaped like a search tree: DTNU nodes have one d-OR
/// child, waits one w-OR child, w-ORs AND children, ANDs DTNU children.
pub fn random_tree(rng: &mut impl Rng, size: usize) -> Tree<()> {
    let mut t = Tree::new(NodeType::Dtnu, ());
    let mut open = vec![Tree::<()>::ROOT];
    while t.len() < size && !open.is_empty() {
        let i = rng.random_range(0..open.len());
        let id = open.swap_remove(i);
        let ty = t.node(id).ty;
        let kids: Vec<NodeType> = match ty {
            NodeType::Dtnu => vec![NodeType::DOr],
            NodeType::Wait => vec![NodeType::WOr],
            NodeType::DOr => {
                let k = rng.random_range(1..=4);
                (0..k)
                    .map(|j| {
                        if j == k - 1 && rng.random_bool(0.5) {
                            NodeType::Wait
                        } else {
                            NodeType::Dtnu
                        }
                    })
                    .collect()
            }
            NodeType::WOr => vec![NodeType::And; rng.random_range(1..=3)],
            NodeType::And => vec![NodeType::Dtnu; rng.random_range(1..=4)],
        };
        for ty in kids {
            let c = t.add_child(id, ty, ());
            // leaves are DTNU nodes; leave some unexpanded
            if ty != NodeType::Dtnu || rng.random_bool(0.7) {
                open.push(c);
            }
        }
    }
    // only DTNU nodes may be leaves; extend the others down to one
    let mut k = 0;
    while k < t.len() {
        let id = NodeId(k as u32);
        if t.children(id).is_empty() && t.node(id).ty != NodeType::Dtnu {
            let child_ty = match t.node(id).ty {
                NodeType::Wait => NodeType::WOr,
                NodeType::WOr => NodeType::And,
                _ => NodeType::Dtnu,
            };
            t.add_child(id, child_ty, ());
        }
        k += 1;
    }
    t
}

/// Recursive evaluation written independently of the library.
pub fn oracle_truth(t: &Tree<()>, id: NodeId, leaf: &BTreeMap<NodeId, Truth>) -> Truth {
    let kids = t.children(id);
    if kids.is_empty() {
        return leaf[&id];
    }
    let vals: Vec<Truth> = kids.iter().map(|c| oracle_truth(t, *c, leaf)).collect();
    let any = |x: Truth| vals.contains(&x);
    match t.node(id).ty {
        NodeType::DOr | NodeType::WOr => {
            if any(Truth::True) {
                Truth::True
            } else if any(Truth::Unknown) {
                Truth::Unknown
            } else {
                Truth::False
            }
        }
        NodeType::And => {
            if any(Truth::False) {
                Truth::False
            } else if any(Truth::Unknown) {
                Truth::Unknown
            } else {
                Truth::True
            }
        }
        NodeType::Dtnu | NodeType::Wait => vals[0],
    }
}

/// Assigns random leaf values in random order through the library's
/// propagation and compares every node with the oracle. Returns the tree
/// size and the number of mismatching nodes.
pub fn check_propagation(rng: &mut impl Rng, size: usize) -> (usize, usize) {
    use rand::seq::SliceRandom;
    let mut t = random_tree(rng, size);
    let mut leaves: Vec<NodeId> = (0..t.len() as u32)
        .map(NodeId)
        .filter(|id| t.children(*id).is_empty())
        .collect();
    let values: BTreeMap<NodeId, Truth> = leaves
        .iter()
        .map(|id| {
            (
                *id,
                if rng.random_bool(0.5) {
                    Truth::True
                } else {
                    Truth::False
                },
            )
        })
        .collect();
    let final_truth: Vec<Truth> = (0..t.len() as u32)
        .map(|i| oracle_truth(&t, NodeId(i), &values))
        .collect();
    leaves.shuffle(rng);
    let mut mismatches = 0;
    for (step, leaf) in leaves.iter().enumerate() {
        t.set_truth(*leaf, values[leaf]);
        t.propagate_truth(*leaf);
        // known values are final values at all times
        if step.is_multiple_of(97) {
            for (i, want) in final_truth.iter().enumerate() {
                let got = t.truth(NodeId(i as u32));
                if got.is_known() && got != *want {
                    mismatches += 1;
                }
            }
        }
    }
    for (i, want) in final_truth.iter().enumerate() {
        if t.truth(NodeId(i as u32)) != *want {
            mismatches += 1;
        }
    }
    (t.len(), mismatches)
}
