//! Execution strategies extracted from a true search tree, and the
//! `tdc-strategy/1` file format.
//!
//! On disk a strategy is a flat list of steps; step 0 is the start and
//! `next` fields index into the list. Nesting would hit JSON depth limits on
//! long strategies.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::format::finite_time;
use crate::time::{format_rational, Rational};

pub const STRATEGY_FORMAT: &str = "tdc-strategy/1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Strategy {
    Execute {
        timepoint: String,
        at: Rational,
        then: Box<Strategy>,
    },
    Wait {
        at: Rational,
        duration: Rational,
        /// `(trigger, controllable)`: execute the controllable as soon as
        /// the trigger is observed.
        reactive: Vec<(String, String)>,
        /// Continuation per set of uncontrollables observed during the wait.
        branches: Vec<Branch>,
    },
    /// Execute the remaining controllables at fixed times.
    Done { executions: Vec<(String, Rational)> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch {
    /// Sorted by name.
    pub occurred: Vec<String>,
    pub then: Strategy,
}

impl Strategy {
    /// Number of steps, counting every branch.
    pub fn size(&self) -> usize {
        match self {
            Strategy::Execute { then, .. } => 1 + then.size(),
            Strategy::Wait { branches, .. } => {
                1 + branches.iter().map(|b| b.then.size()).sum::<usize>()
            }
            Strategy::Done { .. } => 1,
        }
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut steps = Vec::new();
        flatten(self, &mut steps);
        let file = WireStrategy {
            format: STRATEGY_FORMAT.to_string(),
            steps,
        };
        let mut out = serde_json::to_vec_pretty(&file).expect("strategy serializes");
        out.push(b'\n');
        out
    }

    pub fn from_json(text: &[u8]) -> Result<Strategy, StrategyFormatError> {
        let file: WireStrategy = serde_json::from_slice(text)?;
        if file.format != STRATEGY_FORMAT {
            return Err(StrategyFormatError::Version(file.format));
        }
        if file.steps.is_empty() {
            return Err(StrategyFormatError::Empty);
        }
        // Children must come after their parent, which rules out cycles.
        let mut built: Vec<Option<Strategy>> = vec![None; file.steps.len()];
        for (i, step) in file.steps.iter().enumerate().rev() {
            let mut take = |next: usize| -> Result<Strategy, StrategyFormatError> {
                if next <= i || next >= built.len() {
                    return Err(StrategyFormatError::BadReference(i, next));
                }
                built[next]
                    .take()
                    .ok_or(StrategyFormatError::BadReference(i, next))
            };
            let s = match step {
                WireStep::Execute {
                    timepoint,
                    at,
                    next,
                } => Strategy::Execute {
                    timepoint: timepoint.clone(),
                    at: *at,
                    then: Box::new(take(*next)?),
                },
                WireStep::Wait {
                    at,
                    duration,
                    reactive,
                    branches,
                } => Strategy::Wait {
                    at: *at,
                    duration: *duration,
                    reactive: reactive
                        .iter()
                        .map(|r| (r.trigger.clone(), r.timepoint.clone()))
                        .collect(),
                    branches: branches
                        .iter()
                        .map(|b| {
                            Ok(Branch {
                                occurred: b.occurred.clone(),
                                then: take(b.next)?,
                            })
                        })
                        .collect::<Result<_, StrategyFormatError>>()?,
                },
                WireStep::Done { executions } => Strategy::Done {
                    executions: executions
                        .iter()
                        .map(|e| (e.timepoint.clone(), e.at))
                        .collect(),
                },
            };
            built[i] = Some(s);
        }
        if built.iter().skip(1).any(Option::is_some) {
            return Err(StrategyFormatError::Unreachable);
        }
        Ok(built[0].take().expect("root built"))
    }
}

#[derive(Debug, Error)]
pub enum StrategyFormatError {
    #[error("schema error: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("unsupported format tag `{0}` (expected `{STRATEGY_FORMAT}`)")]
    Version(String),
    #[error("strategy has no steps")]
    Empty,
    #[error("step {0} refers to step {1}, which is not a later unused step")]
    BadReference(usize, usize),
    #[error("some steps are unreachable from step 0")]
    Unreachable,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireStrategy {
    format: String,
    steps: Vec<WireStep>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "lowercase", deny_unknown_fields)]
enum WireStep {
    Execute {
        timepoint: String,
        #[serde(with = "finite_time")]
        at: Rational,
        next: usize,
    },
    Wait {
        #[serde(with = "finite_time")]
        at: Rational,
        #[serde(with = "finite_time")]
        duration: Rational,
        reactive: Vec<WireReaction>,
        branches: Vec<WireBranch>,
    },
    Done {
        executions: Vec<WireExecution>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireReaction {
    trigger: String,
    timepoint: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireBranch {
    occurred: Vec<String>,
    next: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireExecution {
    timepoint: String,
    #[serde(with = "finite_time")]
    at: Rational,
}

/// Appends `s` in pre-order and returns its index.
fn flatten(s: &Strategy, out: &mut Vec<WireStep>) -> usize {
    let me = out.len();
    match s {
        Strategy::Execute {
            timepoint,
            at,
            then,
        } => {
            out.push(WireStep::Done { executions: vec![] });
            let next = flatten(then, out);
            out[me] = WireStep::Execute {
                timepoint: timepoint.clone(),
                at: *at,
                next,
            };
        }
        Strategy::Wait {
            at,
            duration,
            reactive,
            branches,
        } => {
            out.push(WireStep::Done { executions: vec![] });
            let wire_branches = branches
                .iter()
                .map(|b| WireBranch {
                    occurred: b.occurred.clone(),
                    next: flatten(&b.then, out),
                })
                .collect();
            out[me] = WireStep::Wait {
                at: *at,
                duration: *duration,
                reactive: reactive
                    .iter()
                    .map(|(trigger, timepoint)| WireReaction {
                        trigger: trigger.clone(),
                        timepoint: timepoint.clone(),
                    })
                    .collect(),
                branches: wire_branches,
            };
        }
        Strategy::Done { executions } => out.push(WireStep::Done {
            executions: executions
                .iter()
                .map(|(timepoint, at)| WireExecution {
                    timepoint: timepoint.clone(),
                    at: *at,
                })
                .collect(),
        }),
    }
    me
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_indented(self, f, 0)
    }
}

fn write_indented(s: &Strategy, f: &mut fmt::Formatter<'_>, depth: usize) -> fmt::Result {
    let pad = "  ".repeat(depth);
    match s {
        Strategy::Execute {
            timepoint,
            at,
            then,
        } => {
            writeln!(f, "{pad}at {}: execute {timepoint}", format_rational(*at))?;
            write_indented(then, f, depth)
        }
        Strategy::Wait {
            at,
            duration,
            reactive,
            branches,
        } => {
            write!(
                f,
                "{pad}at {}: wait {}",
                format_rational(*at),
                format_rational(*duration)
            )?;
            for (u, a) in reactive {
                write!(f, ", {a} on {u}")?;
            }
            writeln!(f)?;
            for b in branches {
                let seen = if b.occurred.is_empty() {
                    "nothing".to_string()
                } else {
                    b.occurred.join(", ")
                };
                writeln!(f, "{pad}- observed {seen}:")?;
                write_indented(&b.then, f, depth + 1)?;
            }
            Ok(())
        }
        Strategy::Done { executions } => {
            if executions.is_empty() {
                return writeln!(f, "{pad}done");
            }
            let parts: Vec<String> = executions
                .iter()
                .map(|(a, t)| format!("{a} at {}", format_rational(*t)))
                .collect();
            writeln!(f, "{pad}done: {}", parts.join(", "))
        }
    }
}
