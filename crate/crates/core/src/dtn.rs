//! Feasibility of disjunctive temporal networks without uncertainty.
//!
//! Depth-first selection of one conjunct per disjunct. The selected
//! conjuncts form a system of difference constraints kept as an all-pairs
//! shortest-path matrix over the variables plus a zero reference; each new
//! edge is checked for a negative cycle and folded in with an `O(n²)`
//! update. A consistent full selection yields the earliest solution,
//! `x_v = -dist(v, zero)`.

use std::collections::BTreeMap;

use crate::model::{Conjunct, Disjunct, TimepointId};
use crate::time::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dtn {
    pub variables: Vec<TimepointId>,
    pub disjuncts: Vec<Disjunct>,
    /// Every variable is constrained to be at or after this time.
    pub floor: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DtnResult {
    Feasible(BTreeMap<TimepointId, Rational>),
    Infeasible,
}

impl DtnResult {
    pub fn is_feasible(&self) -> bool {
        matches!(self, DtnResult::Feasible(_))
    }
}

/// `x_to - x_from ≤ weight`
#[derive(Debug, Clone, Copy)]
struct Edge {
    from: usize,
    to: usize,
    weight: Rational,
}

#[derive(Clone)]
struct Distances {
    n: usize,
    d: Vec<Option<Rational>>,
}

impl Distances {
    fn new(n: usize) -> Self {
        let mut d = vec![None; n * n];
        for i in 0..n {
            d[i * n + i] = Some(Rational::ZERO);
        }
        Distances { n, d }
    }

    fn get(&self, i: usize, j: usize) -> Option<Rational> {
        self.d[i * self.n + j]
    }

    fn entails(&self, e: &Edge) -> bool {
        matches!(self.get(e.from, e.to), Some(w) if w <= e.weight)
    }

    /// Adds the edge; `false` if it closes a negative cycle.
    fn add(&mut self, e: &Edge) -> bool {
        if let Some(back) = self.get(e.to, e.from) {
            if back + e.weight < Rational::ZERO {
                return false;
            }
        }
        if self.entails(e) {
            return true;
        }
        let n = self.n;
        let into: Vec<Option<Rational>> = (0..n).map(|i| self.get(i, e.from)).collect();
        let out: Vec<Option<Rational>> = (0..n).map(|j| self.get(e.to, j)).collect();
        for (i, di) in into.iter().enumerate() {
            let Some(di) = di else { continue };
            for (j, dj) in out.iter().enumerate() {
                let Some(dj) = dj else { continue };
                let via = *di + e.weight + *dj;
                let cell = &mut self.d[i * n + j];
                if cell.is_none_or(|cur| via < cur) {
                    *cell = Some(via);
                }
            }
        }
        true
    }
}

struct Encoder {
    index: BTreeMap<TimepointId, usize>,
}

const ZERO: usize = 0;

impl Encoder {
    fn edges(&self, c: &Conjunct) -> Option<Vec<Edge>> {
        let mut out = Vec::with_capacity(2);
        let (from, to, iv) = match *c {
            Conjunct::Bounded { v, iv } => (ZERO, *self.index.get(&v)?, iv),
            Conjunct::Distance { later, earlier, iv } => {
                (*self.index.get(&earlier)?, *self.index.get(&later)?, iv)
            }
            // literals should have been simplified away; treat `true` as no edges
            Conjunct::True => return Some(out),
            Conjunct::False => return None,
        };
        if let Some(hi) = iv.hi_finite() {
            out.push(Edge {
                from,
                to,
                weight: hi,
            });
        }
        out.push(Edge {
            from: to,
            to: from,
            weight: -iv.lo,
        });
        Some(out)
    }
}

pub fn solve_dtn(p: &Dtn) -> DtnResult {
    let index: BTreeMap<TimepointId, usize> = p
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| (*v, i + 1))
        .collect();
    let n = p.variables.len() + 1;
    let enc = Encoder { index };

    let mut base = Distances::new(n);
    for i in 1..n {
        if !base.add(&Edge {
            from: i,
            to: ZERO,
            weight: -p.floor,
        }) {
            return DtnResult::Infeasible;
        }
    }

    // Per disjunct, the edge sets of its usable conjuncts.
    let mut options: Vec<Vec<Vec<Edge>>> = Vec::with_capacity(p.disjuncts.len());
    for d in &p.disjuncts {
        let opts: Vec<Vec<Edge>> = d.conjuncts.iter().filter_map(|c| enc.edges(c)).collect();
        if opts.is_empty() {
            return DtnResult::Infeasible;
        }
        options.push(opts);
    }
    options.sort_by_key(Vec::len);

    match search(&base, &options, 0) {
        Some(dist) => DtnResult::Feasible(
            p.variables
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let to_zero = dist
                        .get(i + 1, ZERO)
                        .expect("floor edge bounds every variable");
                    (*v, -to_zero)
                })
                .collect(),
        ),
        None => DtnResult::Infeasible,
    }
}

fn search(dist: &Distances, options: &[Vec<Vec<Edge>>], k: usize) -> Option<Distances> {
    let Some(opts) = options.get(k) else {
        return Some(dist.clone());
    };
    if opts
        .iter()
        .any(|edges| edges.iter().all(|e| dist.entails(e)))
    {
        return search(dist, options, k + 1);
    }
    for edges in opts {
        let mut next = dist.clone();
        if edges.iter().all(|e| next.add(e)) {
            if let Some(found) = search(&next, options, k + 1) {
                return Some(found);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::{rat, Interval};

    const A1: TimepointId = TimepointId(0);
    const A2: TimepointId = TimepointId(1);

    fn check(p: &Dtn, result: &DtnResult) {
        if let DtnResult::Feasible(assign) = result {
            for v in &p.variables {
                assert!(assign[v] >= p.floor);
            }
            for d in &p.disjuncts {
                assert!(d.holds(|id| assign[&id]), "violates {d:?}");
            }
        }
    }

    #[test]
    fn earliest_point() {
        let p = Dtn {
            variables: vec![A1],
            disjuncts: vec![Disjunct::single(Conjunct::bounded(
                A1,
                Interval::ints(2, 3),
            ))],
            floor: rat(0),
        };
        let r = solve_dtn(&p);
        assert_eq!(r, DtnResult::Feasible(BTreeMap::from([(A1, rat(2))])));
    }

    #[test]
    fn contradiction() {
        let p = Dtn {
            variables: vec![A1, A2],
            disjuncts: vec![
                Disjunct::single(Conjunct::bounded(A1, Interval::ints(0, 1))),
                Disjunct::single(Conjunct::distance(A1, A2, Interval::ints(5, 6))),
                Disjunct::single(Conjunct::bounded(A2, Interval::ints(0, 10))),
            ],
            floor: rat(0),
        };
        assert_eq!(solve_dtn(&p), DtnResult::Infeasible);
    }

    #[test]
    fn floor_applies() {
        let p = Dtn {
            variables: vec![A1],
            disjuncts: vec![Disjunct::single(Conjunct::bounded(
                A1,
                Interval::ints(0, 1),
            ))],
            floor: rat(2),
        };
        assert_eq!(solve_dtn(&p), DtnResult::Infeasible);
    }

    #[test]
    fn picks_second_disjunct_option() {
        let p = Dtn {
            variables: vec![A1, A2],
            disjuncts: vec![
                Disjunct::new(vec![
                    Conjunct::bounded(A1, Interval::ints(0, 1)),
                    Conjunct::bounded(A1, Interval::ints(7, 9)),
                ]),
                Disjunct::single(Conjunct::distance(A1, A2, Interval::at_least(rat(6)))),
            ],
            floor: rat(1),
        };
        let r = solve_dtn(&p);
        check(&p, &r);
        assert_eq!(
            r,
            DtnResult::Feasible(BTreeMap::from([(A1, rat(7)), (A2, rat(1))]))
        );
    }

    #[test]
    fn deterministic_witness() {
        let p = Dtn {
            variables: vec![A1, A2],
            disjuncts: vec![Disjunct::new(vec![
                Conjunct::distance(A2, A1, Interval::ints(1, 3)),
                Conjunct::distance(A1, A2, Interval::ints(1, 3)),
            ])],
            floor: rat(0),
        };
        let first = solve_dtn(&p);
        check(&p, &first);
        for _ in 0..5 {
            assert_eq!(solve_dtn(&p), first);
        }
    }
}
