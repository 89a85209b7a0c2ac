//! DTNU tree-node state and the transitions between states: executing a
//! controllable, and the outcomes of a wait.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::dtn::{solve_dtn, Dtn, DtnResult};
use crate::model::{Conjunct, Dtnu, TimepointId};
use crate::propagate::{
    apply_exact_execution, apply_windowed_execution, simplify, ExecutionRecord, ScheduleMemory,
    SimplifyStatus, Window,
};
use crate::time::{Interval, Rational, TimeValue};
use crate::waits::{wait_duration, wait_eligible, ActivationSet};

/// A choice available at a d-OR node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Decision {
    Execute(TimepointId),
    Wait,
}

/// How a DTNU node was reached from its grandparent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Arrival {
    Root,
    Executed(TimepointId),
    /// Uncontrollables observed during the preceding wait.
    Outcome(Vec<TimepointId>),
}

/// `(trigger, reacting controllable)`
pub type ReactivePair = (TimepointId, TimepointId);

#[derive(Debug, Clone)]
pub struct DtnuState {
    pub time: Rational,
    /// Simplified updated constraints `C'`.
    pub constraints: Vec<crate::model::Disjunct>,
    pub status: SimplifyStatus,
    pub schedule: ScheduleMemory,
    pub activation: ActivationSet,
    pub arrival: Arrival,
    /// Controllables executed at `time` since the last wait, sorted.
    pub since_wait: Vec<TimepointId>,
    /// Number of d-OR ancestors.
    pub dor_depth: usize,
    /// For the first node at a given time: executed-at-this-time combinations
    /// already proven false below it.
    pub failed_combos: HashSet<Vec<TimepointId>>,
    /// Final executions recorded when this node is a true leaf.
    pub leaf_executions: Vec<(TimepointId, Rational)>,
}

impl DtnuState {
    pub fn root(d: &Dtnu) -> Self {
        let (constraints, status) = simplify(&d.constraints);
        let activation = d
            .activated
            .iter()
            .map(|a| (a.target, vec![a.interval]))
            .collect();
        DtnuState {
            time: Rational::ZERO,
            constraints,
            status,
            schedule: ScheduleMemory::new(),
            activation,
            arrival: Arrival::Root,
            since_wait: Vec::new(),
            dor_depth: 0,
            failed_combos: HashSet::new(),
            leaf_executions: Vec::new(),
        }
    }

    pub fn is_scheduled(&self, tp: TimepointId) -> bool {
        self.schedule.contains_key(&tp)
    }

    pub fn unscheduled_controllables<'a>(
        &'a self,
        d: &'a Dtnu,
    ) -> impl Iterator<Item = TimepointId> + 'a {
        d.controllables().filter(|a| !self.is_scheduled(*a))
    }

    pub fn pending_uncontrollables<'a>(
        &'a self,
        d: &'a Dtnu,
    ) -> impl Iterator<Item = TimepointId> + 'a {
        d.uncontrollables().filter(|u| !self.is_scheduled(*u))
    }

    /// Executes controllable `a` now.
    pub fn execute(&self, d: &Dtnu, a: TimepointId) -> DtnuState {
        debug_assert!(d.is_controllable(a) && !self.is_scheduled(a));
        let t = self.time;
        let (constraints, status) = simplify(&apply_exact_execution(&self.constraints, a, t));
        let mut schedule = self.schedule.clone();
        schedule.insert(a, ExecutionRecord::Exact(t));
        let mut activation = self.activation.clone();
        for link in d.links_from(a) {
            activation.insert(
                link.target,
                link.intervals.iter().map(|iv| iv.shift(t)).collect(),
            );
        }
        let mut since_wait = self.since_wait.clone();
        let pos = since_wait.binary_search(&a).unwrap_or_else(|p| p);
        since_wait.insert(pos, a);
        DtnuState {
            time: t,
            constraints,
            status,
            schedule,
            activation,
            arrival: Arrival::Executed(a),
            since_wait,
            dor_depth: self.dor_depth + 1,
            failed_combos: HashSet::new(),
            leaf_executions: Vec::new(),
        }
    }

    /// The wait duration if a wait child exists.
    pub fn wait_plan(&self) -> Option<Rational> {
        if !wait_eligible(&self.constraints, &self.activation) {
            return None;
        }
        wait_duration(&self.constraints, &self.activation, self.time).ok()
    }

    /// Window of `u`'s occurrence given that it happened during `[t, end]`.
    fn occurrence_window(&self, u: TimepointId, end: Rational) -> Option<Window> {
        let pieces = self.activation.get(&u)?;
        let mut lo: Option<Rational> = None;
        let mut hi: Option<Rational> = None;
        for iv in pieces {
            let a = iv.lo.max(self.time);
            let b = match iv.hi {
                TimeValue::Finite(h) => h.min(end),
                TimeValue::Infinity => end,
            };
            if a <= b {
                lo = Some(lo.map_or(a, |x| x.min(a)));
                hi = Some(hi.map_or(b, |x| x.max(b)));
            }
        }
        Some(Window::new(lo?, hi?))
    }

    /// Splits the activated uncontrollables that may occur during a wait of
    /// `dt` into those certain to occur (`H`) and those that may or may not
    /// (`Z`).
    pub fn wait_split(&self, dt: Rational) -> (Vec<TimepointId>, Vec<TimepointId>) {
        let end = self.time + dt;
        let mut certain = Vec::new();
        let mut maybe = Vec::new();
        for (u, pieces) in &self.activation {
            let earliest = pieces
                .iter()
                .map(|iv| iv.lo)
                .min()
                .expect("non-empty window");
            let latest = pieces
                .iter()
                .map(|iv| iv.hi)
                .max()
                .expect("non-empty window");
            if earliest > end {
                continue;
            }
            if latest <= end {
                certain.push(*u);
            } else {
                maybe.push(*u);
            }
        }
        (certain, maybe)
    }

    /// All sets of uncontrollables that may be observed at the end of a wait
    /// of `dt`, each containing every certain occurrence.
    pub fn enumerate_outcomes(&self, d: &Dtnu, dt: Rational) -> Vec<Vec<TimepointId>> {
        let (certain, maybe) = self.wait_split(dt);
        ordered_subsets(d, &maybe)
            .into_iter()
            .map(|v| {
                let mut out: Vec<TimepointId> = certain.iter().chain(&v).copied().collect();
                out.sort();
                out
            })
            .collect()
    }

    /// Candidate `(u, a)` pairs: `u` may occur during the wait and some
    /// conjunct reads `u - a ∈ [0, y]`. Contingency sources never react,
    /// since reacting would activate an uncontrollable mid-wait.
    pub fn reactive_candidates(&self, d: &Dtnu, dt: Rational) -> Vec<ReactivePair> {
        let (certain, maybe) = self.wait_split(dt);
        let occurrable: BTreeSet<TimepointId> = certain.into_iter().chain(maybe).collect();
        let mut pairs = BTreeSet::new();
        for c in self.constraints.iter().flat_map(|dj| &dj.conjuncts) {
            let Conjunct::Distance { later, earlier, iv } = *c else {
                continue;
            };
            // normalize to u - a
            let (u, a, lo_is_zero) = if occurrable.contains(&later) && d.is_controllable(earlier) {
                (later, earlier, iv.lo == Rational::ZERO)
            } else if occurrable.contains(&earlier) && d.is_controllable(later) {
                (earlier, later, iv.hi == Rational::ZERO)
            } else {
                continue;
            };
            if lo_is_zero && !self.is_scheduled(a) && !d.is_source(a) {
                pairs.insert((u, a));
            }
        }
        pairs.into_iter().collect()
    }

    /// Every reactive wait strategy, including the empty one. A controllable
    /// reacts to at most one trigger.
    pub fn reactive_strategies(&self, d: &Dtnu, dt: Rational) -> Vec<Vec<ReactivePair>> {
        let pairs = self.reactive_candidates(d, dt);
        let mut subsets = all_subsets(&pairs);
        subsets.retain(|s| {
            let reacting: BTreeSet<TimepointId> = s.iter().map(|p| p.1).collect();
            reacting.len() == s.len()
        });
        subsets.sort_by_cached_key(|s| {
            let mut names: Vec<(&str, &str)> =
                s.iter().map(|(u, a)| (d.name(*a), d.name(*u))).collect();
            names.sort();
            (s.len(), names)
        });
        subsets
    }

    /// The state after waiting `dt` with reactive strategy `reactive`, given
    /// that exactly the uncontrollables in `outcome` occurred.
    pub fn after_wait(
        &self,
        dt: Rational,
        reactive: &[ReactivePair],
        outcome: &[TimepointId],
    ) -> DtnuState {
        let end = self.time + dt;
        let mut resolved = BTreeMap::new();
        for &u in outcome {
            let w = self
                .occurrence_window(u, end)
                .expect("outcome timepoint overlaps the wait");
            resolved.insert(u, w);
        }
        let mut pairs = BTreeSet::new();
        for &(u, a) in reactive {
            if let Some(w) = resolved.get(&u).copied() {
                resolved.insert(a, w);
                pairs.insert((u, a));
            }
        }

        let (constraints, status) = simplify(&apply_windowed_execution(
            &self.constraints,
            &resolved,
            &pairs,
            end,
        ));
        let mut schedule = self.schedule.clone();
        for (tp, w) in &resolved {
            schedule.insert(*tp, ExecutionRecord::Windowed(*w));
        }
        let mut activation = ActivationSet::new();
        for (u, pieces) in &self.activation {
            if resolved.contains_key(u) {
                continue;
            }
            let rest: Vec<Interval> = pieces
                .iter()
                .filter(|iv| iv.hi > end)
                .map(|iv| Interval {
                    lo: iv.lo.max(end),
                    hi: iv.hi,
                })
                .collect();
            debug_assert!(!rest.is_empty(), "pending uncontrollable past its window");
            activation.insert(*u, rest);
        }
        DtnuState {
            time: end,
            constraints,
            status,
            schedule,
            activation,
            arrival: Arrival::Outcome(outcome.to_vec()),
            since_wait: Vec::new(),
            dor_depth: self.dor_depth + 1,
            failed_combos: HashSet::new(),
            leaf_executions: Vec::new(),
        }
    }

    /// The decisions of this node's d-OR, in creation order.
    pub fn decisions(&self, d: &Dtnu) -> Vec<Decision> {
        let mut out: Vec<Decision> = self
            .unscheduled_controllables(d)
            .map(Decision::Execute)
            .collect();
        if self.wait_plan().is_some() {
            out.push(Decision::Wait);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LeafStatus {
    NotLeaf,
    False,
    /// Remaining controllables and the times at which to execute them.
    True(Vec<(TimepointId, Rational)>),
}

pub fn classify_leaf(d: &Dtnu, n: &DtnuState) -> LeafStatus {
    match n.status {
        SimplifyStatus::Violated => return LeafStatus::False,
        SimplifyStatus::Satisfied => {
            return LeafStatus::True(
                n.unscheduled_controllables(d)
                    .map(|a| (a, n.time))
                    .collect(),
            )
        }
        SimplifyStatus::Open => {}
    }
    if n.pending_uncontrollables(d).next().is_some() {
        return LeafStatus::NotLeaf;
    }
    let dtn = Dtn {
        variables: n.unscheduled_controllables(d).collect(),
        disjuncts: n.constraints.clone(),
        floor: n.time,
    };
    match solve_dtn(&dtn) {
        DtnResult::Feasible(assign) => LeafStatus::True(assign.into_iter().collect()),
        DtnResult::Infeasible => LeafStatus::False,
    }
}

fn all_subsets<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    assert!(items.len() < 20, "power set too large");
    (0u32..1 << items.len())
        .map(|mask| {
            items
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, x)| x.clone())
                .collect()
        })
        .collect()
}

/// Power set ordered by cardinality, ties broken lexicographically by name.
pub fn ordered_subsets(d: &Dtnu, items: &[TimepointId]) -> Vec<Vec<TimepointId>> {
    let mut subsets = all_subsets(items);
    subsets.sort_by_cached_key(|s| {
        let mut names: Vec<&str> = s.iter().map(|tp| d.name(*tp)).collect();
        names.sort();
        (s.len(), names)
    });
    subsets
}
