mod support;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tdc::search::{NodeType, Tree, Truth};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn incremental_matches_recursive(seed in any::<u64>(), size in 1usize..2000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        prop_assert_eq!(support::check_propagation(&mut rng, size).1, 0);
    }
}

#[test]
fn large_trees() {
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (nodes, mismatches) = support::check_propagation(&mut rng, 10_000);
        assert!(nodes >= 10_000);
        assert_eq!(mismatches, 0);
    }
}

#[test]
#[should_panic(expected = "would change")]
fn known_values_are_final() {
    let mut t = Tree::new(NodeType::DOr, ());
    t.set_truth(Tree::<()>::ROOT, Truth::False);
    t.set_truth(Tree::<()>::ROOT, Truth::True);
}

#[test]
fn or_stops_at_first_true() {
    let mut t = Tree::new(NodeType::DOr, ());
    let a = t.add_child(Tree::<()>::ROOT, NodeType::Dtnu, ());
    let b = t.add_child(Tree::<()>::ROOT, NodeType::Dtnu, ());
    t.set_truth(a, Truth::True);
    t.propagate_truth(a);
    assert_eq!(t.truth(Tree::<()>::ROOT), Truth::True);
    t.set_truth(b, Truth::False);
    t.propagate_truth(b);
    assert_eq!(t.truth(Tree::<()>::ROOT), Truth::True);
}
