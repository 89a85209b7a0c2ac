//! Disjunctive temporal networks with uncertainty.
//!
//! Timepoints are addressed by [`TimepointId`]. Controllables occupy ids
//! `0..n_controllables`, uncontrollables follow.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::time::{Interval, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimepointId(pub u32);

impl TimepointId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TimepointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimepointKind {
    Controllable,
    Uncontrollable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Timepoint {
    pub name: String,
    pub kind: TimepointKind,
}

/// An atomic relation. `Distance { later, earlier, iv }` reads
/// `later - earlier ∈ iv`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Conjunct {
    Bounded {
        v: TimepointId,
        iv: Interval,
    },
    Distance {
        later: TimepointId,
        earlier: TimepointId,
        iv: Interval,
    },
    True,
    False,
}

impl Conjunct {
    pub fn bounded(v: TimepointId, iv: Interval) -> Self {
        Conjunct::Bounded { v, iv }
    }

    pub fn distance(later: TimepointId, earlier: TimepointId, iv: Interval) -> Self {
        Conjunct::Distance { later, earlier, iv }
    }

    pub fn mentions(&self, tp: TimepointId) -> bool {
        match *self {
            Conjunct::Bounded { v, .. } => v == tp,
            Conjunct::Distance { later, earlier, .. } => later == tp || earlier == tp,
            Conjunct::True | Conjunct::False => false,
        }
    }

    pub fn timepoints(&self) -> impl Iterator<Item = TimepointId> {
        let (a, b) = match *self {
            Conjunct::Bounded { v, .. } => (Some(v), None),
            Conjunct::Distance { later, earlier, .. } => (Some(later), Some(earlier)),
            _ => (None, None),
        };
        a.into_iter().chain(b)
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Conjunct::True | Conjunct::False)
    }

    /// Evaluates the conjunct under a total assignment.
    pub fn holds(&self, time_of: impl Fn(TimepointId) -> Rational) -> bool {
        match *self {
            Conjunct::Bounded { v, iv } => iv.contains(time_of(v)),
            Conjunct::Distance { later, earlier, iv } => {
                iv.contains(time_of(later) - time_of(earlier))
            }
            Conjunct::True => true,
            Conjunct::False => false,
        }
    }
}

/// A non-empty disjunction of conjuncts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Disjunct {
    pub conjuncts: Vec<Conjunct>,
}

impl Disjunct {
    pub fn new(conjuncts: Vec<Conjunct>) -> Self {
        Disjunct { conjuncts }
    }

    pub fn single(c: Conjunct) -> Self {
        Disjunct { conjuncts: vec![c] }
    }

    pub fn holds(&self, time_of: impl Fn(TimepointId) -> Rational + Copy) -> bool {
        self.conjuncts.iter().any(|c| c.holds(time_of))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyLink {
    pub source: TimepointId,
    pub target: TimepointId,
    /// Pairwise disjoint, sorted, non-negative offsets from the source.
    pub intervals: Vec<Interval>,
}

/// An uncontrollable already activated before time zero, occurring within an
/// absolute window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Activation {
    pub target: TimepointId,
    pub interval: Interval,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("duplicate timepoint name `{0}`")]
    DuplicateName(String),
    #[error("unknown timepoint `{0}`")]
    UnknownTimepoint(String),
    #[error("empty disjunct at constraint {0}")]
    EmptyDisjunct(usize),
    #[error("distance conjunct relates `{0}` to itself")]
    SelfDistance(String),
    #[error("contingency source `{0}` must be controllable")]
    SourceNotControllable(String),
    #[error("contingency target `{0}` must be uncontrollable")]
    TargetNotUncontrollable(String),
    #[error("uncontrollable `{0}` has no contingency link or activation")]
    Unlinked(String),
    #[error("uncontrollable `{0}` is the target of more than one link or activation")]
    MultiplyLinked(String),
    #[error("contingency `{0}` has no intervals")]
    NoIntervals(String),
    #[error("contingency `{0}`: intervals must be finite, non-negative, sorted and disjoint")]
    BadContingencyIntervals(String),
    #[error("activation window of `{0}` must be finite and start at or after time 0")]
    BadActivation(String),
    #[error("literal conjuncts cannot appear in an instance")]
    LiteralInInstance,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dtnu {
    timepoints: Vec<Timepoint>,
    n_controllables: usize,
    pub constraints: Vec<Disjunct>,
    pub links: Vec<ContingencyLink>,
    pub activated: Vec<Activation>,
    by_name: HashMap<String, TimepointId>,
}

impl Dtnu {
    /// Builds and validates a network. Controllable ids are `0..controllables.len()`.
    pub fn new(
        controllables: Vec<String>,
        uncontrollables: Vec<String>,
        constraints: Vec<Disjunct>,
        links: Vec<ContingencyLink>,
        activated: Vec<Activation>,
    ) -> Result<Self, ModelError> {
        let n_controllables = controllables.len();
        let timepoints: Vec<Timepoint> = controllables
            .into_iter()
            .map(|name| Timepoint {
                name,
                kind: TimepointKind::Controllable,
            })
            .chain(uncontrollables.into_iter().map(|name| Timepoint {
                name,
                kind: TimepointKind::Uncontrollable,
            }))
            .collect();
        let mut by_name = HashMap::with_capacity(timepoints.len());
        for (i, tp) in timepoints.iter().enumerate() {
            if by_name
                .insert(tp.name.clone(), TimepointId(i as u32))
                .is_some()
            {
                return Err(ModelError::DuplicateName(tp.name.clone()));
            }
        }
        let d = Dtnu {
            timepoints,
            n_controllables,
            constraints,
            links,
            activated,
            by_name,
        };
        d.validate()?;
        Ok(d)
    }

    fn validate(&self) -> Result<(), ModelError> {
        let n = self.timepoints.len();
        let known = |id: TimepointId| -> Result<(), ModelError> {
            if id.index() < n {
                Ok(())
            } else {
                Err(ModelError::UnknownTimepoint(id.to_string()))
            }
        };
        for (i, d) in self.constraints.iter().enumerate() {
            if d.conjuncts.is_empty() {
                return Err(ModelError::EmptyDisjunct(i));
            }
            for c in &d.conjuncts {
                match *c {
                    Conjunct::Bounded { v, .. } => known(v)?,
                    Conjunct::Distance { later, earlier, .. } => {
                        known(later)?;
                        known(earlier)?;
                        if later == earlier {
                            return Err(ModelError::SelfDistance(self.name(later).into()));
                        }
                    }
                    Conjunct::True | Conjunct::False => return Err(ModelError::LiteralInInstance),
                }
            }
        }

        let mut covered = vec![0usize; n];
        for link in &self.links {
            known(link.source)?;
            known(link.target)?;
            if !self.is_controllable(link.source) {
                return Err(ModelError::SourceNotControllable(
                    self.name(link.source).into(),
                ));
            }
            if self.is_controllable(link.target) {
                return Err(ModelError::TargetNotUncontrollable(
                    self.name(link.target).into(),
                ));
            }
            let target = self.name(link.target).to_string();
            if link.intervals.is_empty() {
                return Err(ModelError::NoIntervals(target));
            }
            let finite_nonneg = link
                .intervals
                .iter()
                .all(|iv| iv.is_nonnegative() && iv.hi.is_finite());
            let sorted_disjoint = link.intervals.windows(2).all(|w| w[0].hi < w[1].lo);
            if !finite_nonneg || !sorted_disjoint {
                return Err(ModelError::BadContingencyIntervals(target));
            }
            covered[link.target.index()] += 1;
        }
        for act in &self.activated {
            known(act.target)?;
            if self.is_controllable(act.target) {
                return Err(ModelError::TargetNotUncontrollable(
                    self.name(act.target).into(),
                ));
            }
            if !act.interval.is_nonnegative() || !act.interval.hi.is_finite() {
                return Err(ModelError::BadActivation(self.name(act.target).into()));
            }
            covered[act.target.index()] += 1;
        }
        for u in self.uncontrollables() {
            match covered[u.index()] {
                0 => return Err(ModelError::Unlinked(self.name(u).into())),
                1 => {}
                _ => return Err(ModelError::MultiplyLinked(self.name(u).into())),
            }
        }
        Ok(())
    }

    pub fn n_timepoints(&self) -> usize {
        self.timepoints.len()
    }

    pub fn n_controllables(&self) -> usize {
        self.n_controllables
    }

    pub fn n_uncontrollables(&self) -> usize {
        self.timepoints.len() - self.n_controllables
    }

    pub fn timepoint(&self, id: TimepointId) -> &Timepoint {
        &self.timepoints[id.index()]
    }

    pub fn name(&self, id: TimepointId) -> &str {
        &self.timepoints[id.index()].name
    }

    pub fn id(&self, name: &str) -> Option<TimepointId> {
        self.by_name.get(name).copied()
    }

    pub fn is_controllable(&self, id: TimepointId) -> bool {
        id.index() < self.n_controllables
    }

    pub fn controllables(&self) -> impl Iterator<Item = TimepointId> + Clone {
        (0..self.n_controllables as u32).map(TimepointId)
    }

    pub fn uncontrollables(&self) -> impl Iterator<Item = TimepointId> + Clone {
        (self.n_controllables as u32..self.timepoints.len() as u32).map(TimepointId)
    }

    pub fn timepoint_ids(&self) -> impl Iterator<Item = TimepointId> + Clone {
        (0..self.timepoints.len() as u32).map(TimepointId)
    }

    pub fn controllable_names(&self) -> impl Iterator<Item = &str> {
        self.timepoints[..self.n_controllables]
            .iter()
            .map(|t| t.name.as_str())
    }

    pub fn uncontrollable_names(&self) -> impl Iterator<Item = &str> {
        self.timepoints[self.n_controllables..]
            .iter()
            .map(|t| t.name.as_str())
    }

    /// Links whose source is `a`.
    pub fn links_from(&self, a: TimepointId) -> impl Iterator<Item = &ContingencyLink> {
        self.links.iter().filter(move |l| l.source == a)
    }

    pub fn is_source(&self, a: TimepointId) -> bool {
        self.links.iter().any(|l| l.source == a)
    }

    pub fn link_to(&self, u: TimepointId) -> Option<&ContingencyLink> {
        self.links.iter().find(|l| l.target == u)
    }

    /// Timepoints mentioned by some constraint or link.
    pub fn constrained(&self) -> BTreeSet<TimepointId> {
        let mut out = BTreeSet::new();
        for d in &self.constraints {
            for c in &d.conjuncts {
                out.extend(c.timepoints());
            }
        }
        for l in &self.links {
            out.insert(l.source);
            out.insert(l.target);
        }
        out
    }

    /// True when every original disjunct holds under `time_of`.
    pub fn satisfied_by(&self, time_of: impl Fn(TimepointId) -> Rational + Copy) -> bool {
        self.constraints.iter().all(|d| d.holds(time_of))
    }

    /// Index of the first violated disjunct, if any.
    pub fn first_violation(
        &self,
        time_of: impl Fn(TimepointId) -> Rational + Copy,
    ) -> Option<usize> {
        self.constraints.iter().position(|d| !d.holds(time_of))
    }

    pub fn describe_conjunct(&self, c: &Conjunct) -> String {
        match *c {
            Conjunct::Bounded { v, iv } => format!("{} ∈ {iv}", self.name(v)),
            Conjunct::Distance { later, earlier, iv } => {
                format!("{} - {} ∈ {iv}", self.name(later), self.name(earlier))
            }
            Conjunct::True => "true".into(),
            Conjunct::False => "false".into(),
        }
    }
}
