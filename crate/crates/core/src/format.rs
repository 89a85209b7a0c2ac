//! The `tdc-dtnu/1` instance format.
//!
//! A JSON document:
//!
//! ```json
//! {
//!   "format": "tdc-dtnu/1",
//!   "controllables": ["a1", "a2"],
//!   "uncontrollables": ["u1"],
//!   "constraints": [
//!     [{"type": "distance", "lhs": "a1", "rhs": "u1", "interval": [1, "inf"]}],
//!     [{"type": "bounded", "timepoint": "a2", "interval": [0, 10.5]},
//!      {"type": "bounded", "timepoint": "a2", "interval": [20, 30]}]
//!   ],
//!   "contingencies": [],
//!   "activated": [{"target": "u1", "interval": [0, 1]}]
//! }
//! ```
//!
//! `constraints` is a conjunction of disjuncts, each a list of conjuncts.
//! A distance conjunct means `lhs - rhs ∈ interval`. Time values are JSON
//! numbers (parsed as exact decimals), `"p/q"` strings, or `"inf"` for an
//! unbounded upper end. Contingency intervals are offsets from the source's
//! execution; `activated` windows are absolute and mark uncontrollables that
//! are already running at time 0 (they carry no contingency link).
//!
//! One-sided constraints such as "`a2` no later than 6 after `u1`" are
//! written with an explicit lower bound, e.g. `a2 - u1 ∈ [0, 6]`.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::model::{Activation, Conjunct, ContingencyLink, Disjunct, Dtnu, ModelError};
use crate::time::{format_rational, Interval, TimeValue};

pub const INSTANCE_FORMAT: &str = "tdc-dtnu/1";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("schema error: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("unsupported format tag `{0}` (expected `{INSTANCE_FORMAT}`)")]
    Version(String),
    #[error("unknown timepoint `{0}`")]
    UnknownTimepoint(String),
    #[error("interval [{0}, {1}] is inverted")]
    Inverted(String, String),
    #[error("lower bound may not be infinite")]
    InfiniteLower,
    #[error(transparent)]
    Semantic(#[from] ModelError),
}

/// A time value on the wire.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct WireTime(pub TimeValue);

impl Serialize for WireTime {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            TimeValue::Infinity => s.serialize_str("inf"),
            TimeValue::Finite(r) => {
                let text = format_rational(r);
                if text.contains('/') {
                    s.serialize_str(&text)
                } else {
                    let n: serde_json::Number = text.parse().map_err(serde::ser::Error::custom)?;
                    n.serialize(s)
                }
            }
        }
    }
}

impl<'de> Deserialize<'de> for WireTime {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        let text = match &v {
            serde_json::Value::Number(n) => n.to_string(),
            serde_json::Value::String(s) => s.clone(),
            other => {
                return Err(D::Error::custom(format!(
                    "expected time value, got {other}"
                )))
            }
        };
        text.parse::<TimeValue>()
            .map(WireTime)
            .map_err(D::Error::custom)
    }
}

/// Serde adapter for finite times, written like [`WireTime`].
pub(crate) mod finite_time {
    use super::*;
    use crate::time::Rational;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        WireTime(TimeValue::Finite(*r)).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        WireTime::deserialize(d)?
            .0
            .finite()
            .ok_or_else(|| D::Error::custom("expected a finite time"))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct WireInterval(pub WireTime, pub WireTime);

impl WireInterval {
    pub(crate) fn from_interval(iv: &Interval) -> Self {
        WireInterval(WireTime(TimeValue::Finite(iv.lo)), WireTime(iv.hi))
    }

    pub(crate) fn to_interval(&self) -> Result<Interval, FormatError> {
        let lo = self.0 .0.finite().ok_or(FormatError::InfiniteLower)?;
        Interval::new(lo, self.1 .0)
            .ok_or_else(|| FormatError::Inverted(self.0 .0.to_string(), self.1 .0.to_string()))
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum WireConjunct {
    Bounded {
        timepoint: String,
        interval: WireInterval,
    },
    Distance {
        lhs: String,
        rhs: String,
        interval: WireInterval,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireLink {
    source: String,
    target: String,
    intervals: Vec<WireInterval>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireActivation {
    target: String,
    interval: WireInterval,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireInstance {
    format: String,
    controllables: Vec<String>,
    #[serde(default)]
    uncontrollables: Vec<String>,
    #[serde(default)]
    constraints: Vec<Vec<WireConjunct>>,
    #[serde(default)]
    contingencies: Vec<WireLink>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    activated: Vec<WireActivation>,
}

pub fn parse_dtnu(text: &[u8]) -> Result<Dtnu, FormatError> {
    let wire: WireInstance = serde_json::from_slice(text)?;
    if wire.format != INSTANCE_FORMAT {
        return Err(FormatError::Version(wire.format));
    }

    let names: std::collections::HashMap<&str, u32> = wire
        .controllables
        .iter()
        .chain(&wire.uncontrollables)
        .enumerate()
        .map(|(i, n)| (n.as_str(), i as u32))
        .collect();
    let id = |name: &str| {
        names
            .get(name)
            .map(|&i| crate::model::TimepointId(i))
            .ok_or_else(|| FormatError::UnknownTimepoint(name.to_string()))
    };

    let mut constraints = Vec::with_capacity(wire.constraints.len());
    for disjunct in &wire.constraints {
        let mut conjuncts = Vec::with_capacity(disjunct.len());
        for c in disjunct {
            conjuncts.push(match c {
                WireConjunct::Bounded {
                    timepoint,
                    interval,
                } => Conjunct::bounded(id(timepoint)?, interval.to_interval()?),
                WireConjunct::Distance { lhs, rhs, interval } => {
                    Conjunct::distance(id(lhs)?, id(rhs)?, interval.to_interval()?)
                }
            });
        }
        constraints.push(Disjunct::new(conjuncts));
    }

    let mut links = Vec::with_capacity(wire.contingencies.len());
    for l in &wire.contingencies {
        links.push(ContingencyLink {
            source: id(&l.source)?,
            target: id(&l.target)?,
            intervals: l
                .intervals
                .iter()
                .map(WireInterval::to_interval)
                .collect::<Result<_, _>>()?,
        });
    }

    let mut activated = Vec::with_capacity(wire.activated.len());
    for a in &wire.activated {
        activated.push(Activation {
            target: id(&a.target)?,
            interval: a.interval.to_interval()?,
        });
    }

    Ok(Dtnu::new(
        wire.controllables,
        wire.uncontrollables,
        constraints,
        links,
        activated,
    )?)
}

pub fn serialize_dtnu(d: &Dtnu) -> Vec<u8> {
    let name = |id| d.name(id).to_string();
    let wire = WireInstance {
        format: INSTANCE_FORMAT.to_string(),
        controllables: d.controllable_names().map(String::from).collect(),
        uncontrollables: d.uncontrollable_names().map(String::from).collect(),
        constraints: d
            .constraints
            .iter()
            .map(|disj| {
                disj.conjuncts
                    .iter()
                    .filter_map(|c| match *c {
                        Conjunct::Bounded { v, iv } => Some(WireConjunct::Bounded {
                            timepoint: name(v),
                            interval: WireInterval::from_interval(&iv),
                        }),
                        Conjunct::Distance { later, earlier, iv } => Some(WireConjunct::Distance {
                            lhs: name(later),
                            rhs: name(earlier),
                            interval: WireInterval::from_interval(&iv),
                        }),
                        Conjunct::True | Conjunct::False => None,
                    })
                    .collect()
            })
            .collect(),
        contingencies: d
            .links
            .iter()
            .map(|l| WireLink {
                source: name(l.source),
                target: name(l.target),
                intervals: l
                    .intervals
                    .iter()
                    .map(WireInterval::from_interval)
                    .collect(),
            })
            .collect(),
        activated: d
            .activated
            .iter()
            .map(|a| WireActivation {
                target: name(a.target),
                interval: WireInterval::from_interval(&a.interval),
            })
            .collect(),
    };
    let mut out = serde_json::to_vec_pretty(&wire).expect("instance serialization cannot fail");
    out.push(b'\n');
    out
}
