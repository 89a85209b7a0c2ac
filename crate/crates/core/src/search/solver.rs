//! Depth-first AND/OR search for a dynamic execution strategy.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;

use super::state::{classify_leaf, Arrival, Decision, DtnuState, LeafStatus, ReactivePair};
use super::strategy::{Branch, Strategy};
use super::tree::{NodeId, NodeType, Tree, Truth};
use crate::model::Dtnu;
use crate::time::Rational;

#[derive(Debug, Clone)]
pub enum Payload {
    State(Box<DtnuState>),
    Empty,
    Wait(Rational),
    Reactive(Vec<ReactivePair>),
}

/// Reorders the children of a d-OR node before they are created.
pub trait ChildOrder {
    /// `depth` counts d-OR nodes from the root, starting at 1.
    fn order(&mut self, d: &Dtnu, state: &DtnuState, depth: usize, decisions: &mut Vec<Decision>);
}

/// Executions in timepoint order, then the wait.
#[derive(Debug, Clone, Copy, Default)]
pub struct CreationOrder;

impl ChildOrder for CreationOrder {
    fn order(&mut self, _: &Dtnu, _: &DtnuState, _: usize, _: &mut Vec<Decision>) {}
}

/// Uniformly random order at every d-OR node.
#[derive(Debug, Clone)]
pub struct ShuffledOrder<R>(pub R);

impl<R: Rng> ChildOrder for ShuffledOrder<R> {
    fn order(&mut self, _: &Dtnu, _: &DtnuState, _: usize, decisions: &mut Vec<Decision>) {
        decisions.shuffle(&mut self.0);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchConfig {
    pub timeout: Option<Duration>,
    /// Deterministic budget: give up after this many node expansions.
    pub max_expansions: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Tdc(Strategy),
    NotTdc,
    Timeout,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Tdc(_) => "tdc",
            Verdict::NotTdc => "not_tdc",
            Verdict::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub expansions: u64,
    pub nodes_created: u64,
    pub peak_nodes: usize,
    /// d-OR children skipped because the same set of executions at the same
    /// time already failed.
    pub memo_hits: u64,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub verdict: Verdict,
    pub stats: SearchStats,
}

pub fn solve(d: &Dtnu, config: SearchConfig) -> SearchResult {
    Solver::new(d, config, &mut CreationOrder).run()
}

pub fn solve_with(d: &Dtnu, config: SearchConfig, order: &mut dyn ChildOrder) -> SearchResult {
    Solver::new(d, config, order).run()
}

pub struct Solver<'a> {
    dtnu: &'a Dtnu,
    config: SearchConfig,
    order: &'a mut dyn ChildOrder,
    tree: Tree<Payload>,
    root_decisions: Option<Vec<Decision>>,
    stats: SearchStats,
    started: Instant,
    timed_out: bool,
}

impl<'a> Solver<'a> {
    pub fn new(dtnu: &'a Dtnu, config: SearchConfig, order: &'a mut dyn ChildOrder) -> Self {
        let root = DtnuState::root(dtnu);
        Solver {
            dtnu,
            config,
            order,
            tree: Tree::new(NodeType::Dtnu, Payload::State(Box::new(root))),
            root_decisions: None,
            stats: SearchStats::default(),
            started: Instant::now(),
            timed_out: false,
        }
    }

    /// Limits the root d-OR to `decisions`, in the given order. Decisions
    /// not available at the root are dropped.
    pub fn restrict_root(mut self, decisions: Vec<Decision>) -> Self {
        self.root_decisions = Some(decisions);
        self
    }

    pub fn tree(&self) -> &Tree<Payload> {
        &self.tree
    }

    pub fn run(mut self) -> SearchResult {
        self.run_in_place()
    }

    /// Runs the search and keeps the tree for inspection.
    pub fn run_in_place(&mut self) -> SearchResult {
        self.started = Instant::now();
        let root = Tree::<Payload>::ROOT;
        self.explore(root);
        self.stats.elapsed = self.started.elapsed();
        self.stats.nodes_created = self.tree.created();
        let verdict = match self.tree.truth(root) {
            Truth::True => Verdict::Tdc(self.extract(root)),
            Truth::False => Verdict::NotTdc,
            Truth::Unknown => Verdict::Timeout,
        };
        SearchResult {
            verdict,
            stats: self.stats,
        }
    }

    fn out_of_budget(&mut self) -> bool {
        if self.timed_out {
            return true;
        }
        if let Some(max) = self.config.max_expansions {
            if self.stats.expansions >= max {
                self.timed_out = true;
            }
        }
        if let Some(limit) = self.config.timeout {
            if self.stats.expansions.is_multiple_of(32) && self.started.elapsed() >= limit {
                self.timed_out = true;
            }
        }
        self.timed_out
    }

    fn explore(&mut self, root: NodeId) {
        self.expand(root);
        if self.tree.truth(root).is_known() {
            return;
        }
        let mut stack: Vec<(NodeId, usize)> = vec![(root, 0)];
        while let Some(&(id, next)) = stack.last() {
            if self.tree.truth(root).is_known() {
                return;
            }
            if self.tree.truth(id).is_known() {
                stack.pop();
                self.finish(id);
                continue;
            }
            let Some(&child) = self.tree.children(id).get(next) else {
                // only reachable if a child was left unknown
                stack.pop();
                continue;
            };
            stack.last_mut().expect("non-empty").1 += 1;
            if self.tree.truth(child).is_known() {
                continue;
            }
            if self.out_of_budget() {
                return;
            }
            self.expand(child);
            if self.tree.truth(child).is_known() {
                self.finish(child);
            } else {
                stack.push((child, 0));
            }
        }
    }

    /// Bookkeeping once a node's truth is settled.
    fn finish(&mut self, id: NodeId) {
        if self.tree.truth(id) != Truth::False {
            return;
        }
        if self.tree.node(id).ty == NodeType::Dtnu {
            let combo = self.state(id).since_wait.clone();
            if !combo.is_empty() {
                let anchor = self.anchor(id);
                if let Payload::State(s) = &mut self.tree.node_mut(anchor).payload {
                    s.failed_combos.insert(combo);
                }
            }
        }
        self.tree.truncate_below(id);
    }

    fn state(&self, id: NodeId) -> &DtnuState {
        match &self.tree.node(id).payload {
            Payload::State(s) => s,
            _ => panic!("{id} is not a DTNU node"),
        }
    }

    /// The first DTNU node at the current time on the path to `id`.
    fn anchor(&self, mut id: NodeId) -> NodeId {
        while !self.state(id).since_wait.is_empty() {
            let dor = self
                .tree
                .parent(id)
                .expect("execution child has a d-OR parent");
            id = self.tree.parent(dor).expect("d-OR has a DTNU parent");
        }
        id
    }

    fn settle(&mut self, id: NodeId, truth: Truth) {
        self.tree.set_truth(id, truth);
        self.tree.propagate_truth(id);
    }

    fn expand(&mut self, id: NodeId) {
        self.stats.expansions += 1;
        match self.tree.node(id).ty {
            NodeType::Dtnu => self.expand_dtnu(id),
            NodeType::DOr => self.expand_dor(id),
            NodeType::Wait => {
                self.tree.add_child(id, NodeType::WOr, Payload::Empty);
            }
            NodeType::WOr => self.expand_wor(id),
            NodeType::And => self.expand_and(id),
        }
        self.stats.peak_nodes = self.stats.peak_nodes.max(self.tree.len());
    }

    fn expand_dtnu(&mut self, id: NodeId) {
        match classify_leaf(self.dtnu, self.state(id)) {
            LeafStatus::NotLeaf => {
                self.tree.add_child(id, NodeType::DOr, Payload::Empty);
            }
            LeafStatus::False => self.settle(id, Truth::False),
            LeafStatus::True(executions) => {
                if let Payload::State(s) = &mut self.tree.node_mut(id).payload {
                    s.leaf_executions = executions;
                }
                self.settle(id, Truth::True);
            }
        }
    }

    fn expand_dor(&mut self, id: NodeId) {
        let parent = self.tree.parent(id).expect("d-OR has a parent");
        let anchor = self.anchor(parent);
        let Payload::State(state) = &self.tree.node(parent).payload else {
            unreachable!("d-OR parent is a DTNU node")
        };
        let mut decisions = state.decisions(self.dtnu);
        if parent == Tree::<Payload>::ROOT {
            if let Some(only) = &self.root_decisions {
                decisions = only
                    .iter()
                    .copied()
                    .filter(|x| decisions.contains(x))
                    .collect();
            }
        }

        let Payload::State(anchor_state) = &self.tree.node(anchor).payload else {
            unreachable!()
        };
        let failed = &anchor_state.failed_combos;
        let before = decisions.len();
        decisions.retain(|dec| match dec {
            Decision::Execute(a) => {
                let mut combo = state.since_wait.clone();
                let pos = combo.binary_search(a).unwrap_or_else(|p| p);
                combo.insert(pos, *a);
                !failed.contains(&combo)
            }
            Decision::Wait => true,
        });
        let hits = (before - decisions.len()) as u64;

        if !(parent == Tree::<Payload>::ROOT && self.root_decisions.is_some()) {
            self.order
                .order(self.dtnu, state, state.dor_depth + 1, &mut decisions);
        }

        let children: Vec<(NodeType, Payload)> = decisions
            .iter()
            .map(|dec| match dec {
                Decision::Execute(a) => (
                    NodeType::Dtnu,
                    Payload::State(Box::new(state.execute(self.dtnu, *a))),
                ),
                Decision::Wait => (
                    NodeType::Wait,
                    Payload::Wait(state.wait_plan().expect("wait decision has a duration")),
                ),
            })
            .collect();
        self.stats.memo_hits += hits;
        if children.is_empty() {
            self.settle(id, Truth::False);
            return;
        }
        for (ty, payload) in children {
            self.tree.add_child(id, ty, payload);
        }
    }

    /// The DTNU node a wait departs from and the wait duration.
    fn wait_origin(&self, wait: NodeId) -> (NodeId, Rational) {
        let Payload::Wait(dt) = self.tree.node(wait).payload else {
            panic!("{wait} is not a wait node");
        };
        let dor = self.tree.parent(wait).expect("wait has a d-OR parent");
        (self.tree.parent(dor).expect("d-OR has a parent"), dt)
    }

    fn expand_wor(&mut self, id: NodeId) {
        let wait = self.tree.parent(id).expect("w-OR has a parent");
        let (origin, dt) = self.wait_origin(wait);
        let strategies = self.state(origin).reactive_strategies(self.dtnu, dt);
        for r in strategies {
            self.tree.add_child(id, NodeType::And, Payload::Reactive(r));
        }
    }

    fn expand_and(&mut self, id: NodeId) {
        let wor = self.tree.parent(id).expect("AND has a parent");
        let wait = self.tree.parent(wor).expect("w-OR has a parent");
        let (origin, dt) = self.wait_origin(wait);
        let Payload::Reactive(reactive) = &self.tree.node(id).payload else {
            panic!("{id} is not an AND node");
        };
        let state = self.state(origin);
        let children: Vec<DtnuState> = state
            .enumerate_outcomes(self.dtnu, dt)
            .iter()
            .map(|outcome| state.after_wait(dt, reactive, outcome))
            .collect();
        for s in children {
            self.tree
                .add_child(id, NodeType::Dtnu, Payload::State(Box::new(s)));
        }
    }

    fn first_true_child(&self, id: NodeId) -> NodeId {
        *self
            .tree
            .children(id)
            .iter()
            .find(|c| self.tree.truth(**c) == Truth::True)
            .expect("true OR node has a true child")
    }

    fn extract(&self, id: NodeId) -> Strategy {
        let d = self.dtnu;
        let state = self.state(id);
        let Some(&dor) = self.tree.children(id).first() else {
            let mut executions: Vec<(String, Rational)> = state
                .leaf_executions
                .iter()
                .map(|(a, t)| (d.name(*a).to_string(), *t))
                .collect();
            executions.sort_by(|x, y| x.1.cmp(&y.1).then_with(|| x.0.cmp(&y.0)));
            return Strategy::Done { executions };
        };
        let chosen = self.first_true_child(dor);
        match self.tree.node(chosen).ty {
            NodeType::Dtnu => {
                let Arrival::Executed(a) = self.state(chosen).arrival else {
                    unreachable!("d-OR DTNU child comes from an execution")
                };
                Strategy::Execute {
                    timepoint: d.name(a).to_string(),
                    at: state.time,
                    then: Box::new(self.extract(chosen)),
                }
            }
            NodeType::Wait => {
                let Payload::Wait(duration) = self.tree.node(chosen).payload else {
                    unreachable!()
                };
                let wor = self.tree.children(chosen)[0];
                let and = self.first_true_child(wor);
                let Payload::Reactive(reactive) = &self.tree.node(and).payload else {
                    unreachable!()
                };
                let branches = self
                    .tree
                    .children(and)
                    .iter()
                    .map(|c| {
                        let Arrival::Outcome(seen) = &self.state(*c).arrival else {
                            unreachable!("AND child comes from a wait outcome")
                        };
                        let mut occurred: Vec<String> =
                            seen.iter().map(|u| d.name(*u).to_string()).collect();
                        occurred.sort();
                        Branch {
                            occurred,
                            then: self.extract(*c),
                        }
                    })
                    .collect();
                Strategy::Wait {
                    at: state.time,
                    duration,
                    reactive: reactive
                        .iter()
                        .map(|(u, a)| (d.name(*u).to_string(), d.name(*a).to_string()))
                        .collect(),
                    branches,
                }
            }
            other => unreachable!("d-OR child of type {other:?}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_dtnu;

    fn instance(json: &str) -> Dtnu {
        parse_dtnu(json.as_bytes()).unwrap()
    }

    #[test]
    fn gamma_prime_is_not_controllable() {
        let d = instance(crate::format::tests::GAMMA_PRIME);
        let r = solve(&d, SearchConfig::default());
        assert_eq!(r.verdict, Verdict::NotTdc);
    }

    #[test]
    fn simple_wait_then_execute() {
        // a must follow u by 1 to 4
        let d = instance(
            r#"{"format":"tdc-dtnu/1","controllables":["a"],"uncontrollables":["u"],
            "constraints":[[{"type":"distance","lhs":"a","rhs":"u","interval":[1,4]}]],
            "contingencies":[],"activated":[{"target":"u","interval":[0,1]}]}"#,
        );
        let r = solve(&d, SearchConfig::default());
        let Verdict::Tdc(s) = r.verdict else {
            panic!("expected tdc, got {:?}", r.verdict)
        };
        assert!(matches!(s, Strategy::Wait { .. }));

        // the same constraint is out of reach when the wait must span the
        // whole window
        let d = instance(
            r#"{"format":"tdc-dtnu/1","controllables":["a"],"uncontrollables":["u"],
            "constraints":[[{"type":"distance","lhs":"a","rhs":"u","interval":[1,4]}]],
            "contingencies":[],"activated":[{"target":"u","interval":[0,5]}]}"#,
        );
        assert_eq!(solve(&d, SearchConfig::default()).verdict, Verdict::NotTdc);
    }

    #[test]
    fn reactive_execution_needed() {
        // a within 0..0 of u: only a reactive wait works
        let d = instance(
            r#"{"format":"tdc-dtnu/1","controllables":["a"],"uncontrollables":["u"],
            "constraints":[[{"type":"distance","lhs":"u","rhs":"a","interval":[0,0]}]],
            "contingencies":[],"activated":[{"target":"u","interval":[0,3]}]}"#,
        );
        let r = solve(&d, SearchConfig::default());
        let Verdict::Tdc(s) = r.verdict else {
            panic!("expected tdc, got {:?}", r.verdict)
        };
        let Strategy::Wait { reactive, .. } = s else {
            panic!("expected a wait, got {s}")
        };
        assert_eq!(reactive, vec![("u".to_string(), "a".to_string())]);
    }

    #[test]
    fn expansion_budget_times_out() {
        let d = instance(crate::format::tests::GAMMA_PRIME);
        let r = solve(
            &d,
            SearchConfig {
                timeout: None,
                max_expansions: Some(2),
            },
        );
        assert_eq!(r.verdict, Verdict::Timeout);
        assert_eq!(r.stats.expansions, 2);
    }

    #[test]
    fn tree_truth_matches_recursive_evaluation() {
        let d = instance(crate::format::tests::GAMMA_PRIME);
        let mut order = CreationOrder;
        let mut s = Solver::new(&d, SearchConfig::default(), &mut order);
        s.run_in_place();
        let root = Tree::<Payload>::ROOT;
        assert_eq!(s.tree().truth(root), Truth::False);
    }
}
