//! Wait eligibility and wait duration.
//!
//! The duration is the smallest strictly positive value produced by three
//! rules: distance to the endpoints of activation windows, distance to the
//! endpoints of bounded conjuncts, and distance to the latest start of
//! chains of distance conjuncts ending in a bounded conjunct.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use thiserror::Error;

use crate::model::{Conjunct, Disjunct, TimepointId};
use crate::time::{Interval, Rational, TimeValue};

/// Absolute occurrence windows of activated, still pending uncontrollables.
pub type ActivationSet = BTreeMap<TimepointId, Vec<Interval>>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WaitError {
    #[error("no rule produced a strictly positive wait duration")]
    NoPositiveCandidate,
}

/// The smaller of `x - t` and `y - t` that is strictly positive.
fn smaller_positive(t: Rational, x: Rational, y: TimeValue) -> Option<Rational> {
    let dx = x - t;
    let dy = y.finite().map(|y| y - t);
    [Some(dx), dy]
        .into_iter()
        .flatten()
        .filter(|d| *d > Rational::ZERO)
        .min()
}

fn bounded_conjuncts(c: &[Disjunct]) -> impl Iterator<Item = (TimepointId, Interval)> + '_ {
    c.iter()
        .flat_map(|d| &d.conjuncts)
        .filter_map(|cj| match *cj {
            Conjunct::Bounded { v, iv } => Some((v, iv)),
            _ => None,
        })
}

pub fn wait_eligible(c: &[Disjunct], b: &ActivationSet) -> bool {
    !b.is_empty() || bounded_conjuncts(c).next().is_some()
}

/// One step of the backward chain from `(v, deadline)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChainStep {
    /// Strictly positive candidate durations.
    pub candidates: Vec<Rational>,
    /// Predecessors paired with the deadline they inherit.
    pub frontier: Vec<(TimepointId, Rational)>,
}

/// Every conjunct that reads `v - pred ∈ [x, y]` with `x ≥ 0`, in either
/// written orientation.
fn predecessors(
    c: &[Disjunct],
    v: TimepointId,
) -> impl Iterator<Item = (TimepointId, Interval)> + '_ {
    c.iter()
        .flat_map(|d| &d.conjuncts)
        .filter_map(move |cj| match *cj {
            Conjunct::Distance { later, earlier, iv } if later == v && iv.is_nonnegative() => {
                Some((earlier, iv))
            }
            Conjunct::Distance { later, earlier, iv } if earlier == v => iv
                .negated()
                .filter(Interval::is_nonnegative)
                .map(|n| (later, n)),
            _ => None,
        })
}

pub fn backward_chain_step(
    c: &[Disjunct],
    (v, deadline): (TimepointId, Rational),
    t: Rational,
) -> ChainStep {
    let mut step = ChainStep::default();
    for (pred, iv) in predecessors(c, v) {
        let early = deadline - iv.lo;
        let late = iv.hi_finite().map(|y| deadline - y);
        for d in [Some(early), late].into_iter().flatten() {
            if d - t > Rational::ZERO {
                step.candidates.push(d - t);
            }
            step.frontier.push((pred, d));
        }
    }
    step
}

/// All positive candidates reachable from `seed` by chaining backwards.
///
/// Deadlines only decrease along a chain, so frontier entries at or before
/// `t` are dropped; a visited set on `(timepoint, deadline)` handles cycles
/// of zero-length conjuncts.
pub fn backward_chain(
    c: &[Disjunct],
    seed: (TimepointId, Rational),
    t: Rational,
) -> BTreeSet<Rational> {
    let mut out = BTreeSet::new();
    let mut visited = HashSet::new();
    let mut stack = vec![seed];
    while let Some(entry) = stack.pop() {
        if entry.1 <= t || !visited.insert(entry) {
            continue;
        }
        let step = backward_chain_step(c, entry, t);
        out.extend(step.candidates);
        stack.extend(step.frontier);
    }
    out
}

/// The three individual rule minima, for inspection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WaitRules {
    pub activation: Option<Rational>,
    pub bounded: Option<Rational>,
    pub chain: Option<Rational>,
}

impl WaitRules {
    pub fn compute(c: &[Disjunct], b: &ActivationSet, t: Rational) -> Self {
        let activation = b
            .values()
            .flatten()
            .filter_map(|iv| smaller_positive(t, iv.lo, iv.hi))
            .min();
        let bounded = bounded_conjuncts(c)
            .filter_map(|(_, iv)| smaller_positive(t, iv.lo, iv.hi))
            .min();
        let mut chain: Option<Rational> = None;
        let mut seeds = BTreeSet::new();
        for (v, iv) in bounded_conjuncts(c) {
            seeds.insert((v, iv.lo));
            if let Some(hi) = iv.hi_finite() {
                seeds.insert((v, hi));
            }
        }
        for seed in seeds {
            if let Some(m) = backward_chain(c, seed, t).first().copied() {
                chain = Some(chain.map_or(m, |cur| cur.min(m)));
            }
        }
        WaitRules {
            activation,
            bounded,
            chain,
        }
    }

    pub fn min(&self) -> Option<Rational> {
        [self.activation, self.bounded, self.chain]
            .into_iter()
            .flatten()
            .min()
    }
}

pub fn wait_duration(
    c: &[Disjunct],
    b: &ActivationSet,
    t: Rational,
) -> Result<Rational, WaitError> {
    WaitRules::compute(c, b, t)
        .min()
        .ok_or(WaitError::NoPositiveCandidate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::rat;
    use proptest::prelude::*;

    const V1: TimepointId = TimepointId(0);
    const V2: TimepointId = TimepointId(1);
    const V3: TimepointId = TimepointId(2);
    const U1: TimepointId = TimepointId(3);

    fn single(c: Conjunct) -> Disjunct {
        Disjunct::single(c)
    }

    fn chain_instance(t: i64) -> Vec<Disjunct> {
        vec![
            single(Conjunct::distance(V2, V1, Interval::ints(1, 2))),
            single(Conjunct::distance(V3, V2, Interval::ints(3, 5))),
            single(Conjunct::bounded(V3, Interval::ints(t + 9, t + 10))),
        ]
    }

    #[test]
    fn eligibility() {
        let b = ActivationSet::from([(U1, vec![Interval::ints(0, 1)])]);
        assert!(wait_eligible(&[], &b));
        let c = vec![single(Conjunct::bounded(V1, Interval::ints(2, 5)))];
        assert!(wait_eligible(&c, &ActivationSet::new()));
        let c = vec![single(Conjunct::distance(V1, V2, Interval::ints(0, 3)))];
        assert!(!wait_eligible(&c, &ActivationSet::new()));
    }

    #[test]
    fn activation_rule() {
        let b = ActivationSet::from([(U1, vec![Interval::ints(0, 1)])]);
        assert_eq!(wait_duration(&[], &b, rat(0)), Ok(rat(1)));
    }

    #[test]
    fn bounded_rule() {
        let c = vec![single(Conjunct::bounded(V1, Interval::ints(2, 5)))];
        assert_eq!(wait_duration(&c, &ActivationSet::new(), rat(0)), Ok(rat(2)));
    }

    #[test]
    fn chain_rule_golden() {
        for t in [0, 7] {
            let c = chain_instance(t);
            let rules = WaitRules::compute(&c, &ActivationSet::new(), rat(t));
            assert_eq!(rules.bounded, Some(rat(9)));
            assert_eq!(rules.chain, Some(rat(2)));
            assert_eq!(wait_duration(&c, &ActivationSet::new(), rat(t)), Ok(rat(2)));
        }
    }

    #[test]
    fn chain_steps() {
        let c = chain_instance(0);
        let step = backward_chain_step(&c, (V3, rat(9)), rat(0));
        assert_eq!(step.candidates, vec![rat(6), rat(4)]);
        assert_eq!(step.frontier, vec![(V2, rat(6)), (V2, rat(4))]);

        let step = backward_chain_step(&c, (V2, rat(4)), rat(0));
        assert_eq!(step.candidates.iter().min(), Some(&rat(2)));

        assert!(backward_chain(&c, (V1, rat(9)), rat(0)).is_empty());
    }

    #[test]
    fn nothing_positive() {
        let c = vec![single(Conjunct::bounded(V1, Interval::ints(0, 3)))];
        assert_eq!(
            wait_duration(&c, &ActivationSet::new(), rat(3)),
            Err(WaitError::NoPositiveCandidate)
        );
    }

    fn arb_cyclic() -> impl Strategy<Value = Vec<Disjunct>> {
        let conj = (0u32..4, 0u32..4, 0i64..4, 0i64..4).prop_filter_map("self", |(a, b, x, w)| {
            (a != b).then(|| {
                Conjunct::distance(TimepointId(a), TimepointId(b), Interval::ints(x, x + w))
            })
        });
        (prop::collection::vec(conj, 1..10), 0u32..4, 1i64..40).prop_map(|(cs, v, hi)| {
            let mut out: Vec<Disjunct> = cs.into_iter().map(Disjunct::single).collect();
            out.push(single(Conjunct::bounded(
                TimepointId(v),
                Interval::ints(hi / 2, hi),
            )));
            out
        })
    }

    proptest! {
        #[test]
        fn duration_is_positive_min_and_deterministic(c in arb_cyclic(), t in 0i64..10) {
            let b = ActivationSet::from([(U1, vec![Interval::ints(t, t + 3)])]);
            let rules = WaitRules::compute(&c, &b, rat(t));
            let d = wait_duration(&c, &b, rat(t)).unwrap();
            prop_assert!(d > Rational::ZERO);
            for r in [rules.activation, rules.bounded, rules.chain].into_iter().flatten() {
                prop_assert!(d <= r);
            }
            prop_assert_eq!(wait_duration(&c, &b, rat(t)).unwrap(), d);
        }
    }
}
