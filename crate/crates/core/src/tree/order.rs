//! Orders of trees and woods, kept symbolic in (gamma, delta).

use std::fmt;

use super::{NodeLabel, STree, SWood, TreeError};

/// Upper ends of the admissible exponent ranges, closed for comparisons.
const GAMMA_MAX: f64 = 1.0;
const DELTA_MAX: f64 = 0.5;
const EPS: f64 = 1e-12;

/// `constant + gamma * g + delta * d` with nonnegative integer coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinearOrder {
    pub constant: u32,
    pub gamma: u32,
    pub delta: u32,
}

impl LinearOrder {
    pub const fn new(constant: u32, gamma: u32, delta: u32) -> Self {
        LinearOrder {
            constant,
            gamma,
            delta,
        }
    }

    pub fn eval(&self, gamma: f64, delta: f64) -> f64 {
        self.constant as f64 + self.gamma as f64 * gamma + self.delta as f64 * delta
    }

    fn is_zero(&self) -> bool {
        self.constant == 0 && self.gamma == 0 && self.delta == 0
    }

    fn scaled_down(&self, k: u32) -> LinearOrder {
        LinearOrder::new(self.constant / k, self.gamma / k, self.delta / k)
    }

    fn saturating_sub(&self, other: &LinearOrder) -> LinearOrder {
        LinearOrder::new(
            self.constant - other.constant,
            self.gamma - other.gamma,
            self.delta - other.delta,
        )
    }
}

impl fmt::Display for LinearOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.constant > 0 {
            parts.push(self.constant.to_string());
        }
        for (coef, sym) in [(self.gamma, "γ"), (self.delta, "δ")] {
            match coef {
                0 => {}
                1 => parts.push(sym.to_string()),
                c => parts.push(format!("{c}{sym}")),
            }
        }
        if parts.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&parts.join(" + "))
        }
    }
}

/// Symbolic order of one tree: node counts by kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct OrderValue {
    /// Nodes labelled `1` or `1*`.
    pub n1: u32,
    /// Nodes labelled `0`.
    pub n0: u32,
    /// Nodes labelled `2` or `2*`.
    pub n2: u32,
    pub root_is_zero: bool,
}

impl OrderValue {
    pub fn of_tree(tree: &STree) -> Self {
        let mut v = OrderValue {
            n1: 0,
            n0: 0,
            n2: 0,
            root_is_zero: tree.root_label() == NodeLabel::Zero,
        };
        for l in tree.labels() {
            match l {
                NodeLabel::Zero => v.n0 += 1,
                NodeLabel::One | NodeLabel::OneStar => v.n1 += 1,
                NodeLabel::Two | NodeLabel::TwoStar => v.n2 += 1,
            }
        }
        v
    }

    pub fn linear(&self) -> LinearOrder {
        if self.root_is_zero {
            LinearOrder::new(0, 1, 0)
        } else {
            LinearOrder::new(self.n1, self.n0, self.n2)
        }
    }

    pub fn eval(&self, gamma: f64, delta: f64) -> f64 {
        self.linear().eval(gamma, delta)
    }
}

impl fmt::Display for OrderValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.linear().fmt(f)
    }
}

/// Minimum of linear forms, reduced to the irredundant set.
///
/// A form is dropped when it never lies strictly below the minimum of the
/// others anywhere on the closed box `gamma in [0,1], delta in [0,1/2]`. The
/// reduced set is unique, so two expressions denote the same function on the
/// admissible region iff their sets are equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OrderExpr {
    forms: Vec<LinearOrder>,
}

impl OrderExpr {
    pub fn min_of<I: IntoIterator<Item = LinearOrder>>(forms: I) -> Self {
        let mut forms: Vec<LinearOrder> = forms.into_iter().collect();
        forms.sort();
        forms.dedup();
        // cheap pass: drop forms dominated by a single other form
        let corners = box_corners();
        let dominated = |f: &LinearOrder, g: &LinearOrder| {
            corners
                .iter()
                .all(|&(x, y)| g.eval(x, y) <= f.eval(x, y) + EPS)
        };
        let mut kept: Vec<LinearOrder> = Vec::new();
        for (i, f) in forms.iter().enumerate() {
            let beaten = forms.iter().enumerate().any(|(j, g)| {
                j != i && dominated(f, g) && (!dominated(g, f) || j < i)
            });
            if !beaten {
                kept.push(*f);
            }
        }
        // exact pass: drop forms that never strictly attain the minimum
        let mut i = 0;
        while i < kept.len() && kept.len() > 1 {
            let f = kept[i];
            let others: Vec<LinearOrder> = kept
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, g)| *g)
                .collect();
            if max_gap(&f, &others) <= EPS {
                kept.remove(i);
            } else {
                i += 1;
            }
        }
        OrderExpr { forms: kept }
    }

    pub fn forms(&self) -> &[LinearOrder] {
        &self.forms
    }

    pub fn eval(&self, gamma: f64, delta: f64) -> f64 {
        self.forms
            .iter()
            .map(|f| f.eval(gamma, delta))
            .fold(f64::INFINITY, f64::min)
    }
}

impl fmt::Display for OrderExpr {
    /// Factors the common part out of the minimum, e.g. `δ + 2 min(γ, δ)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.forms.as_slice() {
            [] => f.write_str("undefined"),
            [single] => single.fmt(f),
            forms => {
                let common = LinearOrder::new(
                    forms.iter().map(|l| l.constant).min().unwrap_or(0),
                    forms.iter().map(|l| l.gamma).min().unwrap_or(0),
                    forms.iter().map(|l| l.delta).min().unwrap_or(0),
                );
                let residual: Vec<LinearOrder> =
                    forms.iter().map(|l| l.saturating_sub(&common)).collect();
                let k = residual
                    .iter()
                    .flat_map(|l| [l.constant, l.gamma, l.delta])
                    .fold(0, gcd);
                let k = k.max(1);
                let mut inner: Vec<LinearOrder> =
                    residual.iter().map(|l| l.scaled_down(k)).collect();
                // γ before δ reads more naturally than the derived Ord
                inner.sort_by_key(|l| (l.constant, std::cmp::Reverse(l.gamma), l.delta));
                let inner: Vec<String> = inner.iter().map(|l| l.to_string()).collect();
                if !common.is_zero() {
                    write!(f, "{common} + ")?;
                }
                if k > 1 {
                    write!(f, "{k} ")?;
                }
                write!(f, "min({})", inner.join(", "))
            }
        }
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn box_corners() -> [(f64, f64); 4] {
    [
        (0.0, 0.0),
        (GAMMA_MAX, 0.0),
        (0.0, DELTA_MAX),
        (GAMMA_MAX, DELTA_MAX),
    ]
}

/// `max over the box of min_g (g - f)`. Positive iff `f` is strictly below
/// every other form somewhere.
fn max_gap(f: &LinearOrder, others: &[LinearOrder]) -> f64 {
    // differences h_g = g - f as (a, b, c): a + b*x + c*y
    let diffs: Vec<(f64, f64, f64)> = others
        .iter()
        .map(|g| {
            (
                g.constant as f64 - f.constant as f64,
                g.gamma as f64 - f.gamma as f64,
                g.delta as f64 - f.delta as f64,
            )
        })
        .collect();
    let value = |x: f64, y: f64| {
        diffs
            .iter()
            .map(|&(a, b, c)| a + b * x + c * y)
            .fold(f64::INFINITY, f64::min)
    };
    // lines on which the minimum may switch pieces, plus the box edges
    let mut lines: Vec<(f64, f64, f64)> = vec![
        (0.0, 1.0, 0.0),
        (-GAMMA_MAX, 1.0, 0.0),
        (0.0, 0.0, 1.0),
        (-DELTA_MAX, 0.0, 1.0),
    ];
    for (i, p) in diffs.iter().enumerate() {
        lines.push(*p);
        for q in &diffs[i + 1..] {
            lines.push((p.0 - q.0, p.1 - q.1, p.2 - q.2));
        }
    }
    let inside = |x: f64, y: f64| {
        (-EPS..=GAMMA_MAX + EPS).contains(&x) && (-EPS..=DELTA_MAX + EPS).contains(&y)
    };
    let mut best = f64::NEG_INFINITY;
    for (x, y) in box_corners() {
        best = best.max(value(x, y));
    }
    for (i, l1) in lines.iter().enumerate() {
        for l2 in &lines[i + 1..] {
            let det = l1.1 * l2.2 - l1.2 * l2.1;
            if det.abs() < 1e-15 {
                continue;
            }
            let x = (-l1.0 * l2.2 + l1.2 * l2.0) / det;
            let y = (-l1.1 * l2.0 + l1.0 * l2.1) / det;
            if inside(x, y) {
                best = best.max(value(x.clamp(0.0, GAMMA_MAX), y.clamp(0.0, DELTA_MAX)));
            }
        }
    }
    best
}

/// Order of a wood together with the per-tree data behind it.
#[derive(Clone, Debug, PartialEq)]
pub struct WoodOrder {
    /// (1-based tree index, order) for every active tree.
    pub active_trees: Vec<(usize, OrderValue)>,
    pub expr: OrderExpr,
}

impl WoodOrder {
    pub fn of_wood(wood: &SWood) -> Result<Self, TreeError> {
        let active_trees: Vec<(usize, OrderValue)> = wood
            .trees()
            .iter()
            .enumerate()
            .filter(|(_, t)| t.is_active())
            .map(|(i, t)| (i + 1, t.order()))
            .collect();
        if active_trees.is_empty() {
            return Err(TreeError::NoActiveTree);
        }
        let expr = OrderExpr::min_of(active_trees.iter().map(|(_, o)| o.linear()));
        Ok(WoodOrder { active_trees, expr })
    }

    /// Numeric order at (gamma, delta) and the first tree attaining it.
    pub fn eval(&self, gamma: f64, delta: f64) -> (f64, usize) {
        let mut best = (f64::INFINITY, 0);
        for &(i, o) in &self.active_trees {
            let v = o.eval(gamma, delta);
            if v < best.0 {
                best = (v, i);
            }
        }
        best
    }
}

impl fmt::Display for WoodOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.expr.fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{reference_woods, NodeLabel::*, SWood, STree, TreeError};
    use super::*;

    const fn lin(c: u32, g: u32, d: u32) -> LinearOrder {
        LinearOrder::new(c, g, d)
    }

    #[test]
    fn tree_orders() {
        let left = STree::new(vec![1, 2, 1, 2], vec![One, OneStar, Two, Zero, TwoStar]).unwrap();
        assert_eq!(left.order().linear(), lin(2, 1, 2));
        assert_eq!(left.order().to_string(), "2 + γ + 2δ");
        let right = STree::new(
            vec![1, 1, 1, 1, 4, 4],
            vec![Zero, Zero, Two, One, OneStar, One, TwoStar],
        )
        .unwrap();
        assert!(right.order().root_is_zero);
        assert_eq!(right.order().linear(), lin(0, 1, 0));
        assert_eq!(STree::singleton(OneStar).order().linear(), lin(1, 0, 0));
    }

    #[test]
    fn wood_orders_of_reference_woods() {
        let w = reference_woods();
        let expected = [
            OrderExpr::min_of([lin(0, 0, 1)]),
            OrderExpr::min_of([lin(0, 1, 1), lin(0, 0, 2)]),
            OrderExpr::min_of([lin(0, 1, 1), lin(0, 0, 2)]),
            OrderExpr::min_of([lin(0, 2, 1), lin(0, 0, 2)]),
            OrderExpr::min_of([lin(0, 2, 1), lin(0, 0, 2)]),
            OrderExpr::min_of([lin(0, 2, 1), lin(0, 0, 3)]),
        ];
        for (k, (wood, want)) in w.iter().zip(expected.iter()).enumerate() {
            assert_eq!(&wood.order().unwrap().expr, want, "w{k}");
        }
        let shown: Vec<String> = w.iter().map(|x| x.order().unwrap().to_string()).collect();
        assert_eq!(
            shown,
            vec![
                "δ",
                "δ + min(γ, δ)",
                "δ + min(γ, δ)",
                "δ + min(2γ, δ)",
                "δ + min(2γ, δ)",
                "δ + 2 min(γ, δ)"
            ]
        );
    }

    #[test]
    fn redundant_middle_form_is_dropped() {
        // 2δ + γ never beats min(3δ, δ + 2γ)
        let e = OrderExpr::min_of([lin(0, 0, 3), lin(0, 1, 2), lin(0, 2, 1)]);
        assert_eq!(e.forms(), &[lin(0, 0, 3), lin(0, 2, 1)]);
    }

    #[test]
    fn numeric_wood_order_reports_argmin() {
        let w1 = &reference_woods()[1];
        let order = w1.order().unwrap();
        let (v, tree) = order.eval(0.245, 0.25);
        assert!((v - 0.495).abs() < 1e-12);
        assert_eq!(tree, 4);
        let (v, tree) = order.eval(0.4, 0.25);
        assert!((v - 0.5).abs() < 1e-12);
        assert_eq!(tree, 6);
    }

    #[test]
    fn no_active_tree() {
        let w = SWood::new(vec![STree::singleton(Two)]).unwrap();
        assert_eq!(w.order(), Err(TreeError::NoActiveTree));
    }
}
