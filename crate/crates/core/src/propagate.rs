//! Constraint rewriting after executions and waits.
//!
//! `C'` only ever mentions unresolved timepoints: once a timepoint is
//! executed (or known to have occurred within a window) every conjunct that
//! mentions it is rewritten into a bounded conjunct on the other endpoint or
//! into a literal. All rewrites assume unresolved timepoints happen no
//! earlier than the current time.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{Conjunct, Disjunct, TimepointId};
use crate::time::{Interval, Rational, TimeValue};

/// Closed finite window `[lo, hi]` in which a timepoint happened.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Window {
    pub lo: Rational,
    pub hi: Rational,
}

impl Window {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        debug_assert!(lo <= hi, "inverted window");
        Window { lo, hi }
    }

    pub fn point(t: Rational) -> Self {
        Window { lo: t, hi: t }
    }

    pub fn contains(&self, t: Rational) -> bool {
        self.lo <= t && t <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExecutionRecord {
    Exact(Rational),
    Windowed(Window),
}

impl ExecutionRecord {
    pub fn window(&self) -> Window {
        match *self {
            ExecutionRecord::Exact(t) => Window::point(t),
            ExecutionRecord::Windowed(w) => w,
        }
    }
}

pub type ScheduleMemory = BTreeMap<TimepointId, ExecutionRecord>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimplifyStatus {
    Open,
    Violated,
    Satisfied,
}

fn truth(b: bool) -> Conjunct {
    if b {
        Conjunct::True
    } else {
        Conjunct::False
    }
}

/// `v ∈ [lo, hi]`, where an infinite `hi` on the negated side yields a lower
/// bound of `-inf`, clamped to `now` since `v` is still in the future.
fn bounded_or_false(
    v: TimepointId,
    lo: Option<Rational>,
    hi: TimeValue,
    now: Rational,
) -> Conjunct {
    let lo = lo.unwrap_or(now);
    match Interval::new(lo, hi) {
        Some(iv) => Conjunct::Bounded { v, iv },
        None => Conjunct::False,
    }
}

/// Replaces `v ∈ [x, y]` by false when `y < now` and `v` is unresolved.
fn expire(c: Conjunct, now: Rational) -> Conjunct {
    match c {
        Conjunct::Bounded { iv, .. } if iv.hi < now => Conjunct::False,
        other => other,
    }
}

fn rewrite_exact(c: &Conjunct, a: TimepointId, t: Rational) -> Conjunct {
    match *c {
        Conjunct::Bounded { v, iv } if v == a => truth(iv.contains(t)),
        // later - a ∈ [x, y]  =>  later ∈ [t + x, t + y]
        Conjunct::Distance { later, earlier, iv } if earlier == a => {
            bounded_or_false(later, Some(t + iv.lo), iv.hi + t, t)
        }
        // a - earlier ∈ [x, y]  =>  earlier ∈ [t - y, t - x]
        Conjunct::Distance { later, earlier, iv } if later == a => bounded_or_false(
            earlier,
            iv.hi_finite().map(|y| t - y),
            TimeValue::Finite(t - iv.lo),
            t,
        ),
        other => other,
    }
}

/// Rewrites `C` after executing controllable `a` at exactly `t`.
pub fn apply_exact_execution(c: &[Disjunct], a: TimepointId, t: Rational) -> Vec<Disjunct> {
    c.iter()
        .map(|d| Disjunct {
            conjuncts: d
                .conjuncts
                .iter()
                .map(|cj| expire(rewrite_exact(cj, a, t), t))
                .collect(),
        })
        .collect()
}

fn same_instant(
    pairs: &BTreeSet<(TimepointId, TimepointId)>,
    x: TimepointId,
    y: TimepointId,
) -> bool {
    pairs.contains(&(x, y)) || pairs.contains(&(y, x))
}

fn rewrite_windowed(
    c: &Conjunct,
    resolved: &BTreeMap<TimepointId, Window>,
    reactive: &BTreeSet<(TimepointId, TimepointId)>,
    now: Rational,
) -> Conjunct {
    match *c {
        Conjunct::Bounded { v, iv } => match resolved.get(&v) {
            // pessimistic: a partially overlapping window can be violated
            Some(w) => truth(iv.covers(w.lo, w.hi)),
            None => *c,
        },
        Conjunct::Distance { later, earlier, iv } => {
            match (resolved.get(&later), resolved.get(&earlier)) {
                (Some(wl), Some(we)) => {
                    if same_instant(reactive, later, earlier) {
                        truth(iv.contains(Rational::ZERO))
                    } else {
                        truth(iv.covers(wl.lo - we.hi, wl.hi - we.lo))
                    }
                }
                // later - earlier ∈ [x, y], earlier ∈ [lo, hi]
                //   => later ∈ [hi + x, lo + y]
                (None, Some(we)) => {
                    bounded_or_false(later, Some(we.hi + iv.lo), iv.hi + we.lo, now)
                }
                // later ∈ [lo, hi] => earlier ∈ [hi - y, lo - x]
                (Some(wl), None) => bounded_or_false(
                    earlier,
                    iv.hi_finite().map(|y| wl.hi - y),
                    TimeValue::Finite(wl.lo - iv.lo),
                    now,
                ),
                (None, None) => *c,
            }
        }
        Conjunct::True | Conjunct::False => *c,
    }
}

/// Rewrites `C` after a wait that ends at `now`, during which each timepoint
/// of `resolved` happened somewhere in its window.
///
/// `reactive` holds `(u, a)` pairs where `a` was executed at the instant `u`
/// occurred; conjuncts between the two are evaluated with a zero difference.
pub fn apply_windowed_execution(
    c: &[Disjunct],
    resolved: &BTreeMap<TimepointId, Window>,
    reactive: &BTreeSet<(TimepointId, TimepointId)>,
    now: Rational,
) -> Vec<Disjunct> {
    c.iter()
        .map(|d| Disjunct {
            conjuncts: d
                .conjuncts
                .iter()
                .map(|cj| expire(rewrite_windowed(cj, resolved, reactive, now), now))
                .collect(),
        })
        .collect()
}

/// Drops false conjuncts and satisfied disjuncts.
///
/// A violated result keeps one empty disjunct so that simplifying again is a
/// no-op.
pub fn simplify(c: &[Disjunct]) -> (Vec<Disjunct>, SimplifyStatus) {
    let mut out = Vec::with_capacity(c.len());
    for d in c {
        if d.conjuncts.contains(&Conjunct::True) {
            continue;
        }
        let kept: Vec<Conjunct> = d
            .conjuncts
            .iter()
            .filter(|cj| **cj != Conjunct::False)
            .copied()
            .collect();
        if kept.is_empty() {
            return (vec![Disjunct::new(Vec::new())], SimplifyStatus::Violated);
        }
        out.push(Disjunct::new(kept));
    }
    let status = if out.is_empty() {
        SimplifyStatus::Satisfied
    } else {
        SimplifyStatus::Open
    };
    (out, status)
}
