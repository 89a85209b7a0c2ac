pub mod bench;
pub mod cli;
pub mod dtn;
pub mod encode;
pub mod format;
pub mod gen;
pub mod heuristic;
pub mod model;
pub mod propagate;
pub mod search;
pub mod simulate;
pub mod time;
pub mod waits;
