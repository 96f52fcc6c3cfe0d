//! Stochastic trees and woods.
//!
//! An [`STree`] is a rooted tree on the nodes `1..=N` where every node `j >= 2`
//! points at a parent with a smaller index, and every node carries one of the
//! five [`NodeLabel`]s. Label `0` stands for the semigroup increment, `1`/`2`
//! for drift/diffusion integrals frozen at the left endpoint, and the starred
//! labels for integrals that still depend on the solution path and need further
//! expansion. An [`SWood`] is an ordered, nonempty sequence of trees.
//!
//! Node and tree indices are 1-based throughout the public API so that they
//! line up with the usual presentation of these objects.

mod order;
mod text;

use std::fmt;

pub use order::{LinearOrder, OrderExpr, OrderValue, WoodOrder};
pub use text::{parse_wood, serialize_wood, ParseError};

/// Type of a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeLabel {
    Zero,
    One,
    Two,
    OneStar,
    TwoStar,
}

impl NodeLabel {
    pub const ALL: [NodeLabel; 5] = [
        NodeLabel::Zero,
        NodeLabel::One,
        NodeLabel::Two,
        NodeLabel::OneStar,
        NodeLabel::TwoStar,
    ];

    /// `1*` and `2*` are the only active labels.
    pub fn is_active(self) -> bool {
        matches!(self, NodeLabel::OneStar | NodeLabel::TwoStar)
    }

    /// Drops the star; unstarred labels are returned unchanged.
    pub fn destar(self) -> NodeLabel {
        match self {
            NodeLabel::OneStar => NodeLabel::One,
            NodeLabel::TwoStar => NodeLabel::Two,
            other => other,
        }
    }

    pub fn is_drift(self) -> bool {
        matches!(self, NodeLabel::One | NodeLabel::OneStar)
    }

    pub fn is_diffusion(self) -> bool {
        matches!(self, NodeLabel::Two | NodeLabel::TwoStar)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeLabel::Zero => "0",
            NodeLabel::One => "1",
            NodeLabel::Two => "2",
            NodeLabel::OneStar => "1*",
            NodeLabel::TwoStar => "2*",
        }
    }
}

impl fmt::Display for NodeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// First violated structural constraint of a candidate tree.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TreeDefect {
    #[error("tree has no nodes")]
    Empty,
    #[error("parent map must cover nodes 2..={len}, got {given} entries")]
    ParentMapNotTotal { len: usize, given: usize },
    #[error("parent(j) < j violated at j={node}")]
    ParentNotSmaller { node: usize },
    #[error("parent({node}) = 0 is not a node")]
    ParentZero { node: usize },
}

/// Errors raised by wood operations.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TreeError {
    #[error("invalid tree: {0}")]
    Invalid(#[from] TreeDefect),
    #[error("a wood needs at least one tree")]
    EmptyWood,
    #[error("node ({tree},{node}) is outside the wood")]
    OutOfRange { tree: usize, node: usize },
    #[error("node ({tree},{node}) is labelled {label}, not 1* or 2*")]
    NotActive {
        tree: usize,
        node: usize,
        label: NodeLabel,
    },
    #[error("a single-node tree has no subtrees")]
    Degenerate,
    #[error("wood has no active tree; its order is undefined")]
    NoActiveTree,
}

/// Checks the raw tree data. `parents[k]` is the parent of node `k + 2`.
pub fn validate(parents: &[usize], labels: &[NodeLabel]) -> Result<(), TreeDefect> {
    if labels.is_empty() {
        return Err(TreeDefect::Empty);
    }
    if parents.len() + 1 != labels.len() {
        return Err(TreeDefect::ParentMapNotTotal {
            len: labels.len(),
            given: parents.len(),
        });
    }
    for (k, &p) in parents.iter().enumerate() {
        let node = k + 2;
        if p == 0 {
            return Err(TreeDefect::ParentZero { node });
        }
        if p >= node {
            return Err(TreeDefect::ParentNotSmaller { node });
        }
    }
    Ok(())
}

/// A stochastic tree. Always valid by construction.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct STree {
    parents: Vec<usize>,
    labels: Vec<NodeLabel>,
}

impl STree {
    pub fn new(parents: Vec<usize>, labels: Vec<NodeLabel>) -> Result<Self, TreeDefect> {
        validate(&parents, &labels)?;
        Ok(STree { parents, labels })
    }

    pub fn singleton(label: NodeLabel) -> Self {
        STree {
            parents: Vec::new(),
            labels: vec![label],
        }
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Label of node `j` (1-based).
    pub fn label(&self, j: usize) -> NodeLabel {
        self.labels[j - 1]
    }

    pub fn labels(&self) -> &[NodeLabel] {
        &self.labels
    }

    /// Parent of node `j`, `None` for the root.
    pub fn parent(&self, j: usize) -> Option<usize> {
        if j >= 2 {
            Some(self.parents[j - 2])
        } else {
            None
        }
    }

    pub fn parents(&self) -> &[usize] {
        &self.parents
    }

    pub fn root_label(&self) -> NodeLabel {
        self.labels[0]
    }

    /// Children of node `j` in increasing order.
    pub fn children(&self, j: usize) -> Vec<usize> {
        (j + 1..=self.len())
            .filter(|&c| self.parents[c - 2] == j)
            .collect()
    }

    /// A tree is active when it has at least one active node.
    pub fn is_active(&self) -> bool {
        self.labels.iter().any(|l| l.is_active())
    }

    /// Copy with node `j` relabelled.
    pub fn with_label(&self, j: usize, label: NodeLabel) -> STree {
        let mut t = self.clone();
        t.labels[j - 1] = label;
        t
    }

    /// Copy with a new node `len + 1` attached under `j`.
    pub fn with_child(&self, j: usize, label: NodeLabel) -> STree {
        debug_assert!(j >= 1 && j <= self.len());
        let mut t = self.clone();
        t.parents.push(j);
        t.labels.push(label);
        t
    }

    /// One subtree per child of the root, in increasing child order.
    ///
    /// The nodes of the subtree hanging at child `c` are the descendants of `c`
    /// (including `c`) renumbered `1..` in increasing order of their original
    /// index, so `c` becomes the root.
    pub fn subtrees(&self) -> Result<Vec<STree>, TreeError> {
        if self.len() < 2 {
            return Err(TreeError::Degenerate);
        }
        // owner[m] = which root child m descends from; parent(m) < m lets one pass do it
        let n = self.len();
        let mut owner: Vec<Option<usize>> = vec![None; n + 1];
        let mut members: Vec<Vec<usize>> = Vec::new();
        for m in 2..=n {
            let p = self.parents[m - 2];
            let o = if p == 1 {
                members.push(Vec::new());
                members.len() - 1
            } else {
                owner[p].expect("parent precedes child")
            };
            owner[m] = Some(o);
            members[o].push(m);
        }
        let subtrees = members
            .into_iter()
            .map(|nodes| {
                let mut local = vec![0usize; n + 1];
                for (k, &m) in nodes.iter().enumerate() {
                    local[m] = k + 1;
                }
                let parents = nodes[1..]
                    .iter()
                    .map(|&m| local[self.parents[m - 2]])
                    .collect();
                let labels = nodes.iter().map(|&m| self.labels[m - 1]).collect();
                STree { parents, labels }
            })
            .collect();
        Ok(subtrees)
    }

    /// Rebuilds a tree from a root label and its subtrees. Nodes are numbered
    /// subtree by subtree, so the result matches the original up to numbering.
    pub fn graft(root: NodeLabel, subtrees: &[STree]) -> STree {
        let mut parents = Vec::new();
        let mut labels = vec![root];
        for sub in subtrees {
            let offset = labels.len();
            parents.push(1);
            parents.extend(sub.parents.iter().map(|&p| p + offset));
            labels.extend_from_slice(&sub.labels);
        }
        STree { parents, labels }
    }

    /// True when the numbering is a pre-order walk that visits children in
    /// increasing index order.
    pub fn is_preorder(&self) -> bool {
        self.preorder() == (1..=self.len()).collect::<Vec<_>>()
    }

    /// Node indices in pre-order, children visited in increasing index order.
    pub fn preorder(&self) -> Vec<usize> {
        let kids = self.children_table();
        let mut out = Vec::with_capacity(self.len());
        let mut stack = vec![1usize];
        while let Some(j) = stack.pop() {
            out.push(j);
            stack.extend(kids[j].iter().rev());
        }
        out
    }

    /// Same tree renumbered in pre-order.
    pub fn canonical(&self) -> STree {
        let order = self.preorder();
        let mut new_index = vec![0usize; self.len() + 1];
        for (k, &j) in order.iter().enumerate() {
            new_index[j] = k + 1;
        }
        let labels = order.iter().map(|&j| self.labels[j - 1]).collect();
        let parents = order[1..]
            .iter()
            .map(|&j| new_index[self.parents[j - 2]])
            .collect();
        STree { parents, labels }
    }

    pub(crate) fn children_table(&self) -> Vec<Vec<usize>> {
        let mut kids = vec![Vec::new(); self.len() + 1];
        for (k, &p) in self.parents.iter().enumerate() {
            kids[p].push(k + 2);
        }
        kids
    }

    pub fn order(&self) -> OrderValue {
        OrderValue::of_tree(self)
    }
}

/// An active node, addressed as (tree, node), both 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActiveNode {
    pub tree: usize,
    pub node: usize,
}

impl ActiveNode {
    pub fn new(tree: usize, node: usize) -> Self {
        ActiveNode { tree, node }
    }
}

impl fmt::Display for ActiveNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.tree, self.node)
    }
}

/// A stochastic wood. Equality is positional.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SWood {
    trees: Vec<STree>,
}

impl SWood {
    pub fn new(trees: Vec<STree>) -> Result<Self, TreeError> {
        if trees.is_empty() {
            return Err(TreeError::EmptyWood);
        }
        Ok(SWood { trees })
    }

    /// The starting wood `(0), (1*), (2*)`.
    pub fn initial() -> Self {
        SWood {
            trees: vec![
                STree::singleton(NodeLabel::Zero),
                STree::singleton(NodeLabel::OneStar),
                STree::singleton(NodeLabel::TwoStar),
            ],
        }
    }

    pub fn trees(&self) -> &[STree] {
        &self.trees
    }

    /// Tree `i` (1-based).
    pub fn tree(&self, i: usize) -> &STree {
        &self.trees[i - 1]
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// All active nodes in lexicographic order.
    pub fn active_nodes(&self) -> Vec<ActiveNode> {
        self.trees
            .iter()
            .enumerate()
            .flat_map(|(i, t)| {
                t.labels()
                    .iter()
                    .enumerate()
                    .filter(|(_, l)| l.is_active())
                    .map(move |(j, _)| ActiveNode::new(i + 1, j + 1))
            })
            .collect()
    }

    /// Applies the expansion operator at an active node.
    ///
    /// Tree `i` is replaced in place by its copy with node `j` destarred, and
    /// three copies of the original tree `i` are appended, each with a new node
    /// `l(t_i) + 1` under `j` labelled `0`, `1*` and `2*` respectively.
    pub fn expand(&self, at: ActiveNode) -> Result<SWood, TreeError> {
        let ActiveNode { tree: i, node: j } = at;
        if i == 0 || i > self.len() || j == 0 || j > self.tree(i).len() {
            return Err(TreeError::OutOfRange { tree: i, node: j });
        }
        let source = self.tree(i);
        let label = source.label(j);
        if !label.is_active() {
            return Err(TreeError::NotActive {
                tree: i,
                node: j,
                label,
            });
        }
        let mut trees = Vec::with_capacity(self.len() + 3);
        trees.extend_from_slice(&self.trees);
        trees[i - 1] = source.with_label(j, label.destar());
        for new in [NodeLabel::Zero, NodeLabel::OneStar, NodeLabel::TwoStar] {
            trees.push(source.with_child(j, new));
        }
        Ok(SWood { trees })
    }

    /// Applies a sequence of expansions starting from `self`.
    pub fn expand_all(&self, steps: &[ActiveNode]) -> Result<SWood, TreeError> {
        steps
            .iter()
            .try_fold(self.clone(), |wood, &at| wood.expand(at))
    }

    /// Order of the wood: minimum of the orders of its active trees.
    pub fn order(&self) -> Result<WoodOrder, TreeError> {
        WoodOrder::of_wood(self)
    }
}

/// The woods w0..w5 built by the expansion sequence
/// E(3,1), E(2,1), E(4,1), E(6,1), E(6,2).
pub fn reference_woods() -> [SWood; 6] {
    let w0 = SWood::initial();
    let w1 = w0.expand(ActiveNode::new(3, 1)).expect("(3,1) active in w0");
    let w2 = w1.expand(ActiveNode::new(2, 1)).expect("(2,1) active in w1");
    let w3 = w2.expand(ActiveNode::new(4, 1)).expect("(4,1) active in w2");
    let w4 = w3.expand(ActiveNode::new(6, 1)).expect("(6,1) active in w3");
    let w5 = w4.expand(ActiveNode::new(6, 2)).expect("(6,2) active in w4");
    [w0, w1, w2, w3, w4, w5]
}

/// Distinct woods reachable from the initial wood by exactly `n`
/// expansions, in first-discovery order.
pub fn woods_after(n: usize) -> Vec<SWood> {
    let mut layer = vec![SWood::initial()];
    for _ in 0..n {
        let mut seen = std::collections::HashSet::new();
        let mut next = Vec::new();
        for w in &layer {
            for a in w.active_nodes() {
                let e = w.expand(a).expect("active node");
                if seen.insert(e.clone()) {
                    next.push(e);
                }
            }
        }
        layer = next;
    }
    layer
}

#[cfg(test)]
mod tests {
    use super::*;
    use NodeLabel::*;

    fn acn(pairs: &[(usize, usize)]) -> Vec<ActiveNode> {
        pairs.iter().map(|&(i, j)| ActiveNode::new(i, j)).collect()
    }

    pub(crate) fn figure1_left() -> STree {
        STree::new(vec![1, 2, 1, 2], vec![One, OneStar, Two, Zero, TwoStar]).unwrap()
    }

    pub(crate) fn figure1_right() -> STree {
        STree::new(
            vec![1, 1, 1, 1, 4, 4],
            vec![Zero, Zero, Two, One, OneStar, One, TwoStar],
        )
        .unwrap()
    }

    #[test]
    fn initial_wood_shape() {
        let w0 = SWood::initial();
        assert_eq!(w0.len(), 3);
        let roots: Vec<_> = w0.trees().iter().map(|t| t.root_label()).collect();
        assert_eq!(roots, vec![Zero, OneStar, TwoStar]);
        assert_eq!(w0.active_nodes(), acn(&[(2, 1), (3, 1)]));
    }

    #[test]
    fn validate_cases() {
        assert_eq!(validate(&[], &[TwoStar]), Ok(()));
        let err = validate(&[2], &[One, Two]).unwrap_err();
        assert_eq!(err.to_string(), "parent(j) < j violated at j=2");
        assert!(validate(&[1, 2, 1, 2], figure1_left().labels()).is_ok());
        assert_eq!(validate(&[], &[]), Err(TreeDefect::Empty));
        assert!(matches!(
            validate(&[1], &[One]),
            Err(TreeDefect::ParentMapNotTotal { .. })
        ));
        assert_eq!(validate(&[0], &[One, Two]), Err(TreeDefect::ParentZero { node: 2 }));
    }

    #[test]
    fn active_nodes_of_reference_woods() {
        let [_, w1, w2, w3, w4, w5] = reference_woods();
        assert_eq!(
            w1.active_nodes(),
            acn(&[(2, 1), (4, 1), (5, 1), (5, 2), (6, 1), (6, 2)])
        );
        assert_eq!(
            w2.active_nodes(),
            acn(&[
                (4, 1),
                (5, 1),
                (5, 2),
                (6, 1),
                (6, 2),
                (7, 1),
                (8, 1),
                (8, 2),
                (9, 1),
                (9, 2)
            ])
        );
        assert_eq!(w3.len(), 12);
        assert_eq!(w4.len(), 15);
        assert_eq!(w5.len(), 18);
        assert!(SWood::new(vec![STree::singleton(Two)])
            .unwrap()
            .active_nodes()
            .is_empty());
    }

    #[test]
    fn w1_matches_its_figure() {
        let w1 = &reference_woods()[1];
        let expected = SWood::new(vec![
            STree::singleton(Zero),
            STree::singleton(OneStar),
            STree::singleton(Two),
            STree::new(vec![1], vec![TwoStar, Zero]).unwrap(),
            STree::new(vec![1], vec![TwoStar, OneStar]).unwrap(),
            STree::new(vec![1], vec![TwoStar, TwoStar]).unwrap(),
        ])
        .unwrap();
        assert_eq!(w1, &expected);
    }

    #[test]
    fn expand_rejects_bad_nodes() {
        let w0 = SWood::initial();
        assert_eq!(
            w0.expand(ActiveNode::new(1, 1)),
            Err(TreeError::NotActive {
                tree: 1,
                node: 1,
                label: Zero
            })
        );
        assert_eq!(
            w0.expand(ActiveNode::new(4, 1)),
            Err(TreeError::OutOfRange { tree: 4, node: 1 })
        );
        assert_eq!(
            w0.expand(ActiveNode::new(2, 2)),
            Err(TreeError::OutOfRange { tree: 2, node: 2 })
        );
    }

    #[test]
    fn expand_leaves_input_untouched() {
        let w0 = SWood::initial();
        let before = w0.clone();
        let _ = w0.expand(ActiveNode::new(2, 1)).unwrap();
        assert_eq!(w0, before);
    }

    #[test]
    fn subtrees_of_figure1_right() {
        let subs = figure1_right().subtrees().unwrap();
        assert_eq!(
            subs,
            vec![
                STree::singleton(Zero),
                STree::singleton(Two),
                STree::new(vec![1, 1], vec![One, One, TwoStar]).unwrap(),
                STree::singleton(OneStar),
            ]
        );
    }

    #[test]
    fn subtrees_small_cases() {
        let two = STree::new(vec![1], vec![TwoStar, Zero]).unwrap();
        assert_eq!(two.subtrees().unwrap(), vec![STree::singleton(Zero)]);
        let chain = STree::new(vec![1, 2], vec![Two, Two, Zero]).unwrap();
        let subs = chain.subtrees().unwrap();
        assert_eq!(subs.len(), 1);
        assert_eq!(subs[0].len(), 2);
        assert_eq!(
            STree::singleton(One).subtrees(),
            Err(TreeError::Degenerate)
        );
    }

    #[test]
    fn subtrees_follow_index_order_not_preorder() {
        // nodes 3 and 5 hang under 2, node 4 under the root
        let t = figure1_left();
        let subs = t.subtrees().unwrap();
        assert_eq!(subs.len(), 2);
        assert_eq!(
            subs[0],
            STree::new(vec![1, 1], vec![OneStar, Two, TwoStar]).unwrap()
        );
        assert_eq!(subs[1], STree::singleton(Zero));
    }

    #[test]
    fn graft_inverts_subtrees_up_to_numbering() {
        for t in [figure1_left(), figure1_right()] {
            let rebuilt = STree::graft(t.root_label(), &t.subtrees().unwrap());
            assert_eq!(rebuilt.canonical(), t.canonical());
        }
    }

    #[test]
    fn preorder_detection() {
        assert!(!figure1_left().is_preorder());
        assert!(figure1_left().canonical().is_preorder());
        for w in reference_woods() {
            assert!(w.trees().iter().all(STree::is_preorder));
        }
    }
}
