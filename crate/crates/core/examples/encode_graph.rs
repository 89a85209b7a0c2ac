//! Encodes a generated instance's root as the graph a branching heuristic
//! sees, and prints its shape.

use tdc::encode::{decode_edge, encode, EdgeType};
use tdc::gen::{generate_dtnu, GenParams};
use tdc::search::{Decision, DtnuState};

fn main() {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(3);
    let params = GenParams {
        n_controllables: 4..=6,
        seed,
        ..GenParams::default()
    };
    let d = generate_dtnu(&params, &mut params.instance_rng(0));
    let g = encode(&d, &DtnuState::root(&d));
    println!(
        "{} nodes, {} edges, d_max {}, fingerprint {:016x}",
        g.n_nodes(),
        g.edges.len(),
        g.d_max,
        g.fingerprint()
    );
    for (i, f) in g.node_features.iter().enumerate() {
        let decision = match g.node_decisions.get(&i) {
            Some(Decision::Execute(a)) => format!("execute {}", d.name(*a)),
            Some(Decision::Wait) => "wait".to_string(),
            None => String::new(),
        };
        println!("node {i:>2} {f:?} {decision}");
    }
    let mut counts = [0usize; 4];
    for row in &g.edge_features {
        counts[decode_edge(row).0] += 1;
    }
    for (k, ty) in [
        EdgeType::Constraint,
        EdgeType::Membership,
        EdgeType::Contingency,
        EdgeType::Activation,
    ]
    .iter()
    .enumerate()
    {
        println!("{ty:?} edges: {}", counts[k]);
    }
}
