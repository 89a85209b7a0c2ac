//! Computes wait durations. A chain `v2 - v1 ∈ [1, 2]`, `v3 - v2 ∈ [3, 5]`,
//! `v3 ∈ [t + 9, t + 10]` forces `v1` to start no later than `t + 2`, so
//! waiting longer than 2 would lose the chance.

use tdc::model::{Conjunct, Disjunct, TimepointId};
use tdc::time::{rat, Interval};
use tdc::waits::{wait_duration, ActivationSet, WaitRules};

fn main() {
    let (v1, v2, v3, u1) = (
        TimepointId(0),
        TimepointId(1),
        TimepointId(2),
        TimepointId(3),
    );
    for t in [0, 4] {
        let c = vec![
            Disjunct::single(Conjunct::distance(v2, v1, Interval::ints(1, 2))),
            Disjunct::single(Conjunct::distance(v3, v2, Interval::ints(3, 5))),
            Disjunct::single(Conjunct::bounded(v3, Interval::ints(t + 9, t + 10))),
        ];
        let rules = WaitRules::compute(&c, &ActivationSet::new(), rat(t));
        println!(
            "t = {t}: bounded rule {:?}, chain rule {:?}, wait {}",
            rules.bounded.map(|r| r.to_string()),
            rules.chain.map(|r| r.to_string()),
            wait_duration(&c, &ActivationSet::new(), rat(t)).unwrap()
        );
    }

    // an activated uncontrollable bounds the wait by the end of its window
    let b = ActivationSet::from([(u1, vec![Interval::ints(0, 3)])]);
    println!(
        "activation only: wait {}",
        wait_duration(&[], &b, rat(0)).unwrap()
    );
}
