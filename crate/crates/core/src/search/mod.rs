//! Search for a dynamic execution strategy.

pub mod solver;
pub mod state;
pub mod strategy;
pub mod tree;

pub use solver::{
    solve, solve_with, ChildOrder, CreationOrder, SearchConfig, SearchResult, SearchStats,
    ShuffledOrder, Solver, Verdict,
};
pub use state::{classify_leaf, Arrival, Decision, DtnuState, LeafStatus, ReactivePair};
pub use strategy::{Branch, Strategy, STRATEGY_FORMAT};
pub use tree::{NodeId, NodeType, Tree, Truth};
