//! Replays a strategy against a random environment.
//!
//! The environment draws each uncontrollable's occurrence when it is
//! activated. The executor follows the strategy: executions at their stated
//! times, waits with reactive executions at the trigger's occurrence, and
//! after each wait the branch whose set equals the uncontrollables that
//! occurred during it (an occurrence exactly at the end of the wait counts
//! as observed). The realized timeline is checked against every constraint.

use std::collections::BTreeSet;

use rand::Rng;
use thiserror::Error;

use crate::model::{Dtnu, TimepointId};
use crate::search::Strategy;
use crate::time::{format_rational, Interval, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampler {
    /// Uniform over a grid of 1001 points per window piece.
    Uniform,
    /// Always a window endpoint.
    Endpoints,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Execution,
    Occurrence,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub kind: EventKind,
    pub timepoint: String,
    pub time: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulationTrace {
    /// Sorted by time; executions before occurrences at equal times.
    pub events: Vec<Event>,
    pub satisfied: bool,
    /// Index of the first violated disjunct.
    pub violated: Option<usize>,
}

impl SimulationTrace {
    pub fn time_of(&self, name: &str) -> Option<Rational> {
        self.events
            .iter()
            .find(|e| e.timepoint == name)
            .map(|e| e.time)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimulationError {
    #[error("no branch for observed set {{{}}} after the wait at {}", .occurred.join(", "), format_rational(*.at))]
    StrategyMismatch { at: Rational, occurred: Vec<String> },
    #[error("strategy names unknown timepoint `{0}`")]
    UnknownTimepoint(String),
    #[error("`{0}` is not an unexecuted controllable")]
    BadExecution(String),
    #[error("step at {at} lies before the current time {now}")]
    TimeTravel { at: String, now: String },
    #[error("strategy ended with `{0}` never executed or occurred")]
    Incomplete(String),
}

fn draw(pieces: &[Interval], sampler: Sampler, rng: &mut impl Rng) -> Rational {
    let piece = match sampler {
        Sampler::Endpoints => pieces[rng.random_range(0..pieces.len())],
        Sampler::Uniform => {
            // weight pieces by width; all-degenerate windows pick uniformly
            let widths: Vec<Rational> = pieces
                .iter()
                .map(|iv| iv.hi.finite().expect("finite window") - iv.lo)
                .collect();
            let total: Rational = widths.iter().copied().sum();
            if total == Rational::ZERO {
                pieces[rng.random_range(0..pieces.len())]
            } else {
                let target = total * Rational::new(rng.random_range(0..=1_000_000), 1_000_000);
                let mut acc = Rational::ZERO;
                let mut chosen = *pieces.last().expect("non-empty window");
                for (iv, w) in pieces.iter().zip(&widths) {
                    acc += *w;
                    if target <= acc && *w > Rational::ZERO {
                        chosen = *iv;
                        break;
                    }
                }
                chosen
            }
        }
    };
    let hi = piece.hi.finite().expect("finite window");
    match sampler {
        Sampler::Endpoints => {
            if rng.random_bool(0.5) {
                piece.lo
            } else {
                hi
            }
        }
        Sampler::Uniform => {
            piece.lo + (hi - piece.lo) * Rational::new(rng.random_range(0..=1000), 1000)
        }
    }
}

struct World<'a, R> {
    d: &'a Dtnu,
    rng: &'a mut R,
    sampler: Sampler,
    now: Rational,
    times: Vec<Option<Rational>>,
    /// Drawn but not yet observed occurrences.
    pending: Vec<(TimepointId, Rational)>,
    events: Vec<Event>,
}

impl<R: Rng> World<'_, R> {
    fn lookup(&self, name: &str) -> Result<TimepointId, SimulationError> {
        self.d
            .id(name)
            .ok_or_else(|| SimulationError::UnknownTimepoint(name.to_string()))
    }

    fn execute(&mut self, a: TimepointId, at: Rational) -> Result<(), SimulationError> {
        if !self.d.is_controllable(a) || self.times[a.index()].is_some() {
            return Err(SimulationError::BadExecution(self.d.name(a).to_string()));
        }
        self.times[a.index()] = Some(at);
        self.events.push(Event {
            kind: EventKind::Execution,
            timepoint: self.d.name(a).to_string(),
            time: at,
        });
        for link in self.d.links_from(a) {
            let shifted: Vec<Interval> = link.intervals.iter().map(|iv| iv.shift(at)).collect();
            let occ = draw(&shifted, self.sampler, self.rng);
            self.pending.push((link.target, occ));
        }
        Ok(())
    }

    fn occur(&mut self, u: TimepointId, at: Rational) {
        self.times[u.index()] = Some(at);
        self.events.push(Event {
            kind: EventKind::Occurrence,
            timepoint: self.d.name(u).to_string(),
            time: at,
        });
    }

    fn advance_to(&mut self, at: Rational) -> Result<(), SimulationError> {
        if at < self.now {
            return Err(SimulationError::TimeTravel {
                at: format_rational(at),
                now: format_rational(self.now),
            });
        }
        self.now = at;
        Ok(())
    }
}

pub fn simulate_execution(
    d: &Dtnu,
    s: &Strategy,
    sampler: Sampler,
    rng: &mut impl Rng,
) -> Result<SimulationTrace, SimulationError> {
    let mut w = World {
        d,
        rng,
        sampler,
        now: Rational::ZERO,
        times: vec![None; d.n_timepoints()],
        pending: Vec::new(),
        events: Vec::new(),
    };
    for act in &d.activated {
        let occ = draw(&[act.interval], sampler, w.rng);
        w.pending.push((act.target, occ));
    }

    let mut step = s;
    loop {
        match step {
            Strategy::Execute {
                timepoint,
                at,
                then,
            } => {
                let a = w.lookup(timepoint)?;
                w.advance_to(*at)?;
                w.execute(a, *at)?;
                step = then;
            }
            Strategy::Wait {
                at,
                duration,
                reactive,
                branches,
            } => {
                w.advance_to(*at)?;
                let end = *at + *duration;
                let (seen, rest): (Vec<_>, Vec<_>) =
                    w.pending.iter().partition(|(_, occ)| *occ <= end);
                w.pending = rest;
                let mut seen = seen;
                seen.sort_by_key(|(u, occ)| (*occ, *u));
                for &(u, occ) in &seen {
                    w.occur(u, occ);
                    for (trigger, name) in reactive {
                        if trigger == d.name(u) {
                            let a = w.lookup(name)?;
                            w.execute(a, occ)?;
                        }
                    }
                }
                let observed: BTreeSet<&str> = seen.iter().map(|(u, _)| d.name(*u)).collect();
                let branch = branches.iter().find(|b| {
                    b.occurred.len() == observed.len()
                        && b.occurred.iter().all(|n| observed.contains(n.as_str()))
                });
                let Some(branch) = branch else {
                    return Err(SimulationError::StrategyMismatch {
                        at: end,
                        occurred: observed.into_iter().map(str::to_string).collect(),
                    });
                };
                w.now = end;
                step = &branch.then;
            }
            Strategy::Done { executions } => {
                let mut ordered: Vec<&(String, Rational)> = executions.iter().collect();
                ordered.sort_by_key(|(_, t)| *t);
                for (name, at) in ordered {
                    let a = w.lookup(name)?;
                    w.advance_to(*at)?;
                    w.execute(a, *at)?;
                }
                break;
            }
        }
    }
    // the rest of the world unfolds without further decisions
    while let Some((u, occ)) = w.pending.pop() {
        w.occur(u, occ);
    }
    if let Some(missing) = w.times.iter().position(Option::is_none) {
        return Err(SimulationError::Incomplete(
            d.name(TimepointId(missing as u32)).to_string(),
        ));
    }

    let times = w.times;
    let time_of = |tp: TimepointId| times[tp.index()].expect("all timepoints set");
    let violated = d.first_violation(time_of);
    let mut events = w.events;
    events.sort_by(|x, y| {
        x.time
            .cmp(&y.time)
            .then_with(|| (x.kind == EventKind::Occurrence).cmp(&(y.kind == EventKind::Occurrence)))
    });
    Ok(SimulationTrace {
        events,
        satisfied: violated.is_none(),
        violated,
    })
}
