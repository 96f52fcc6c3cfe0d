use std::collections::BTreeSet;

use proptest::prelude::*;
use spde_taylor::tree::{parse_wood, reference_woods, serialize_wood, woods_after, NodeLabel, SWood};

fn grow(choices: &[usize]) -> SWood {
    let mut w = SWood::initial();
    for c in choices {
        let acn = w.active_nodes();
        w = w.expand(acn[c % acn.len()]).unwrap();
    }
    w
}

// Brute force over serialized text, independent of the hashing in woods_after.
fn distinct_by_text(n: usize) -> usize {
    let mut layer: BTreeSet<String> = BTreeSet::from([serialize_wood(&SWood::initial())]);
    for _ in 0..n {
        let mut next = BTreeSet::new();
        for text in &layer {
            let w = parse_wood(text).unwrap();
            for a in w.active_nodes() {
                next.insert(serialize_wood(&w.expand(a).unwrap()));
            }
        }
        layer = next;
    }
    layer.len()
}

#[test]
fn woods_after_counts_match_brute_force() {
    for n in 0..=3 {
        assert_eq!(woods_after(n).len(), distinct_by_text(n), "depth {n}");
    }
    assert_eq!(woods_after(0), vec![SWood::initial()]);
}

#[test]
fn reference_woods_are_reachable() {
    let w = reference_woods();
    for (k, wood) in w.iter().enumerate() {
        assert_eq!(wood.len(), 3 + 3 * k);
        if k <= 3 {
            assert!(woods_after(k).contains(wood), "w{k}");
        }
    }
}

#[test]
fn order_text_of_reference_woods() {
    let got: Vec<String> = reference_woods()
        .iter()
        .map(|w| w.order().unwrap().expr.to_string())
        .collect();
    assert_eq!(
        got,
        [
            "δ",
            "δ + min(γ, δ)",
            "δ + min(γ, δ)",
            "δ + min(2γ, δ)",
            "δ + min(2γ, δ)",
            "δ + 2 min(γ, δ)"
        ]
    );
}

proptest! {
    #[test]
    fn expansion_adds_three_trees_and_keeps_labels_valid(choices in proptest::collection::vec(any::<usize>(), 0..6)) {
        let w = grow(&choices);
        prop_assert_eq!(w.len(), SWood::initial().len() + 3 * choices.len());
        for t in w.trees() {
            for j in 2..=t.len() {
                prop_assert!(t.parent(j).unwrap() < j);
            }
        }
    }

    #[test]
    fn wood_order_never_decreases_under_expansion(choices in proptest::collection::vec(any::<usize>(), 1..6)) {
        let before = grow(&choices[..choices.len() - 1]);
        let after = grow(&choices);
        for &(g, d) in &[(0.0, 0.0), (0.25, 0.25), (1.0, 0.5), (0.1, 0.5), (0.7, 0.05)] {
            prop_assert!(after.order().unwrap().eval(g, d).0 + 1e-12 >= before.order().unwrap().eval(g, d).0);
        }
    }

    #[test]
    fn tree_order_matches_label_counts(choices in proptest::collection::vec(any::<usize>(), 0..5), g in 0.0f64..=1.0, d in 0.0f64..=0.5) {
        let w = grow(&choices);
        for t in w.trees() {
            let count = |l: &[NodeLabel]| t.labels().iter().filter(|x| l.contains(x)).count() as f64;
            let want = if matches!(t.root_label(), NodeLabel::Zero) {
                g
            } else {
                count(&[NodeLabel::One, NodeLabel::OneStar])
                    + g * count(&[NodeLabel::Zero])
                    + d * count(&[NodeLabel::Two, NodeLabel::TwoStar])
            };
            prop_assert!((t.order().eval(g, d) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn text_round_trip(choices in proptest::collection::vec(any::<usize>(), 0..6)) {
        let w = grow(&choices);
        prop_assert_eq!(parse_wood(&serialize_wood(&w)).unwrap(), w);
    }
}
