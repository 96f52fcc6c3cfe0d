use proptest::prelude::*;
use spde_taylor::term::{four_term, phi_wood, psi_wood, RenderStyle, TermExpr};
use spde_taylor::tree::{NodeLabel, SWood};

fn label() -> impl Strategy<Value = NodeLabel> {
    proptest::sample::select(NodeLabel::ALL.to_vec())
}

fn nonzero_label() -> impl Strategy<Value = NodeLabel> {
    proptest::sample::select(NodeLabel::ALL[1..].to_vec())
}

fn term() -> impl Strategy<Value = TermExpr> {
    let leaf = label().prop_map(TermExpr::leaf);
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (nonzero_label(), proptest::collection::vec(inner.clone(), 1..=3))
                .prop_map(|(l, args)| TermExpr::integral(l, args).unwrap()),
            proptest::collection::vec(inner, 0..=3).prop_map(TermExpr::sum),
        ]
    })
}

fn grow(choices: &[usize]) -> SWood {
    let mut w = SWood::initial();
    for c in choices {
        let acn = w.active_nodes();
        w = w.expand(acn[c % acn.len()]).unwrap();
    }
    w
}

#[test]
fn zero_renders_as_zero() {
    assert_eq!(TermExpr::zero().compact(), "0");
    assert_eq!(TermExpr::zero().latex(), "0");
    assert_eq!("0".parse::<TermExpr>().unwrap(), TermExpr::zero());
}

#[test]
fn rendering_formats() {
    let t: TermExpr = "I^1_2*[I^0_0]".parse().unwrap();
    assert_eq!(t.compact(), "I^1_2*[I^0_0]");
    assert_eq!(t.render(RenderStyle::Latex), "I^{1}_{2^*}[ I^{0}_{0} ]");
}

#[test]
fn parse_errors_carry_a_column() {
    let e = "I^1_2*[I^0_0".parse::<TermExpr>().unwrap_err();
    assert!(e.column > 0, "{e}");
    assert!("I^1_0[I^0_1]".parse::<TermExpr>().is_err());
}

#[test]
fn starred_leaf_rewrites_into_four_terms() {
    let t: TermExpr = "I^0_1*".parse().unwrap();
    assert_eq!(four_term(&t).unwrap().terms().len(), 4);
    assert!(four_term(&"I^0_1".parse().unwrap()).is_none());
}

proptest! {
    #[test]
    fn canonical_is_idempotent(t in term()) {
        let c = t.canonical();
        prop_assert_eq!(c.canonical(), c.clone());
        prop_assert_eq!(c, t);
    }

    #[test]
    fn compact_round_trips(t in term()) {
        prop_assert_eq!(t.compact().parse::<TermExpr>().unwrap(), t);
    }

    #[test]
    fn rendering_is_injective(a in term(), b in term()) {
        prop_assert_eq!(a == b, a.compact() == b.compact());
        prop_assert_eq!(a == b, a.latex() == b.latex());
    }

    #[test]
    fn sums_are_flat_and_commutative(a in term(), b in term()) {
        let ab = TermExpr::sum([a.clone(), b.clone()]);
        prop_assert_eq!(&ab, &TermExpr::sum([b, a]));
        for t in ab.terms() {
            let is_sum = matches!(t, TermExpr::Sum(_));
            prop_assert!(!is_sum);
        }
    }

    #[test]
    fn phi_and_psi_of_woods_parse_back(choices in proptest::collection::vec(any::<usize>(), 0..5)) {
        let w = grow(&choices);
        for t in [phi_wood(&w), psi_wood(&w)] {
            prop_assert_eq!(t.compact().parse::<TermExpr>().unwrap(), t);
        }
    }
}
