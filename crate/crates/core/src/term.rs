//! Iterated-integral terms attached to trees and woods.
//!
//! `I^0_j` is a leaf process, `I^i_j[a_1, ..., a_i]` an `i`-multilinear
//! symmetric integral operator applied to argument terms. Sums are flat
//! multisets. Every constructor returns the canonical form: arguments and sum
//! terms sorted by compact rendering, nested sums flattened.

use std::fmt;
use std::str::FromStr;

use crate::tree::{ActiveNode, NodeLabel, STree, SWood};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TermExpr {
    /// `I^0_j`.
    Leaf(NodeLabel),
    /// `I^i_j[args]` with `i = args.len() >= 1` and `j != 0`.
    Integral {
        label: NodeLabel,
        args: Vec<TermExpr>,
    },
    /// Flat sum; never nested, never a single term. Empty means zero.
    Sum(Vec<TermExpr>),
}

/// Sequence of child indices from the root of a term.
pub type TermPath = Vec<usize>;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TermError {
    #[error("path {path:?} does not address a starred operator")]
    NotStarred { path: TermPath },
    #[error("path {path:?} leaves the term")]
    BadPath { path: TermPath },
    #[error("I^{order}_0 with arguments is not a term")]
    ZeroWithArgs { order: usize },
}

impl TermExpr {
    pub fn leaf(label: NodeLabel) -> Self {
        TermExpr::Leaf(label)
    }

    /// `I^n_label[args]` in canonical form; `n = 0` gives the leaf.
    pub fn integral(label: NodeLabel, mut args: Vec<TermExpr>) -> Result<Self, TermError> {
        if args.is_empty() {
            return Ok(TermExpr::Leaf(label));
        }
        if label == NodeLabel::Zero {
            return Err(TermError::ZeroWithArgs { order: args.len() });
        }
        if args.iter().any(|a| matches!(a, TermExpr::Sum(_))) {
            // multilinearity: distribute over summed arguments
            let choices: Vec<Vec<TermExpr>> = args.into_iter().map(TermExpr::into_terms).collect();
            let mut out = Vec::new();
            for pick in cartesian(&choices) {
                out.push(TermExpr::integral(label, pick)?);
            }
            return Ok(TermExpr::sum(out));
        }
        args.sort_by_cached_key(TermExpr::compact);
        Ok(TermExpr::Integral { label, args })
    }

    /// Flattened, sorted sum. One term collapses to itself.
    pub fn sum<I: IntoIterator<Item = TermExpr>>(terms: I) -> Self {
        let mut flat: Vec<TermExpr> = terms.into_iter().flat_map(TermExpr::into_terms).collect();
        flat.sort_by_cached_key(TermExpr::compact);
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            TermExpr::Sum(flat)
        }
    }

    pub fn zero() -> Self {
        TermExpr::Sum(Vec::new())
    }

    /// Summands of the term; a non-sum is its own single summand.
    pub fn terms(&self) -> Vec<&TermExpr> {
        match self {
            TermExpr::Sum(ts) => ts.iter().collect(),
            t => vec![t],
        }
    }

    pub fn into_terms(self) -> Vec<TermExpr> {
        match self {
            TermExpr::Sum(ts) => ts,
            t => vec![t],
        }
    }

    /// Operator label `j`, or `None` for a sum.
    pub fn label(&self) -> Option<NodeLabel> {
        match self {
            TermExpr::Leaf(l) => Some(*l),
            TermExpr::Integral { label, .. } => Some(*label),
            TermExpr::Sum(_) => None,
        }
    }

    /// Multilinear degree `i`, or `None` for a sum.
    pub fn degree(&self) -> Option<usize> {
        match self {
            TermExpr::Leaf(_) => Some(0),
            TermExpr::Integral { args, .. } => Some(args.len()),
            TermExpr::Sum(_) => None,
        }
    }

    pub fn children(&self) -> &[TermExpr] {
        match self {
            TermExpr::Leaf(_) => &[],
            TermExpr::Integral { args, .. } => args,
            TermExpr::Sum(ts) => ts,
        }
    }

    pub fn at(&self, path: &[usize]) -> Option<&TermExpr> {
        match path.split_first() {
            None => Some(self),
            Some((&k, rest)) => self.children().get(k)?.at(rest),
        }
    }

    pub fn contains_star(&self) -> bool {
        self.label().is_some_and(NodeLabel::is_active)
            || self.children().iter().any(TermExpr::contains_star)
    }

    /// Paths of all starred operators, in depth-first order.
    pub fn starred_paths(&self) -> Vec<TermPath> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        collect_starred(self, &mut path, &mut out);
        out
    }

    /// Re-sorts everything bottom up. Constructors already do this; useful
    /// for terms assembled by hand through the enum.
    pub fn canonical(&self) -> TermExpr {
        match self {
            TermExpr::Leaf(l) => TermExpr::Leaf(*l),
            TermExpr::Integral { label, args } => {
                TermExpr::integral(*label, args.iter().map(TermExpr::canonical).collect())
                    .unwrap_or_else(|_| self.clone())
            }
            TermExpr::Sum(ts) => TermExpr::sum(ts.iter().map(TermExpr::canonical)),
        }
    }

    /// Compact rendering, e.g. `I^1_2*[I^0_0]`.
    pub fn compact(&self) -> String {
        let mut s = String::new();
        write_compact(self, &mut s);
        s
    }

    /// LaTeX rendering, e.g. `I^{1}_{2^*}[ I^{0}_{0} ]`.
    pub fn latex(&self) -> String {
        match self {
            TermExpr::Leaf(l) => format!("I^{{0}}_{{{}}}", latex_label(*l)),
            TermExpr::Integral { label, args } => {
                let inner: Vec<String> = args.iter().map(TermExpr::latex).collect();
                format!(
                    "I^{{{}}}_{{{}}}[ {} ]",
                    args.len(),
                    latex_label(*label),
                    inner.join(", ")
                )
            }
            TermExpr::Sum(ts) if ts.is_empty() => "0".to_string(),
            TermExpr::Sum(ts) => {
                let inner: Vec<String> = ts.iter().map(TermExpr::latex).collect();
                inner.join(" + ")
            }
        }
    }

    pub fn render(&self, style: RenderStyle) -> String {
        match style {
            RenderStyle::Compact => self.compact(),
            RenderStyle::Latex => self.latex(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenderStyle {
    Compact,
    Latex,
}

fn latex_label(l: NodeLabel) -> &'static str {
    match l {
        NodeLabel::Zero => "0",
        NodeLabel::One => "1",
        NodeLabel::Two => "2",
        NodeLabel::OneStar => "1^*",
        NodeLabel::TwoStar => "2^*",
    }
}

fn write_compact(t: &TermExpr, s: &mut String) {
    match t {
        TermExpr::Leaf(l) => {
            s.push_str("I^0_");
            s.push_str(l.as_str());
        }
        TermExpr::Integral { label, args } => {
            s.push_str(&format!("I^{}_{}[", args.len(), label.as_str()));
            for (k, a) in args.iter().enumerate() {
                if k > 0 {
                    s.push(',');
                }
                write_compact(a, s);
            }
            s.push(']');
        }
        TermExpr::Sum(ts) if ts.is_empty() => s.push('0'),
        TermExpr::Sum(ts) => {
            for (k, a) in ts.iter().enumerate() {
                if k > 0 {
                    s.push_str(" + ");
                }
                write_compact(a, s);
            }
        }
    }
}

impl fmt::Display for TermExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.compact())
    }
}

fn collect_starred(t: &TermExpr, path: &mut TermPath, out: &mut Vec<TermPath>) {
    if t.label().is_some_and(NodeLabel::is_active) {
        out.push(path.clone());
    }
    for (k, c) in t.children().iter().enumerate() {
        path.push(k);
        collect_starred(c, path, out);
        path.pop();
    }
}

fn cartesian(choices: &[Vec<TermExpr>]) -> Vec<Vec<TermExpr>> {
    let mut acc: Vec<Vec<TermExpr>> = vec![Vec::new()];
    for options in choices {
        let mut next = Vec::with_capacity(acc.len() * options.len());
        for prefix in &acc {
            for o in options {
                let mut v = prefix.clone();
                v.push(o.clone());
                next.push(v);
            }
        }
        acc = next;
    }
    acc
}

/// The four-term replacement of a starred operator:
/// `I^i_{j*}[g] = I^i_j[g] + I^{i+1}_{j*}[I^0_0, g] + I^{i+1}_{j*}[I^0_{1*}, g]
/// + I^{i+1}_{j*}[I^0_{2*}, g]`.
pub fn four_term(t: &TermExpr) -> Option<TermExpr> {
    let label = t.label().filter(|l| l.is_active())?;
    let args = t.children().to_vec();
    let mut terms = vec![TermExpr::integral(label.destar(), args.clone()).ok()?];
    for extra in [NodeLabel::Zero, NodeLabel::OneStar, NodeLabel::TwoStar] {
        let mut a = args.clone();
        a.push(TermExpr::Leaf(extra));
        terms.push(TermExpr::integral(label, a).ok()?);
    }
    Some(TermExpr::sum(terms))
}

/// Replaces the starred operator at `path` by its four-term expansion and
/// distributes the result through the enclosing operators.
pub fn rewrite_expand(expr: &TermExpr, path: &[usize]) -> Result<TermExpr, TermError> {
    let target = expr.at(path).ok_or_else(|| TermError::BadPath {
        path: path.to_vec(),
    })?;
    let replacement = four_term(target).ok_or_else(|| TermError::NotStarred {
        path: path.to_vec(),
    })?;
    Ok(replace_at(expr, path, replacement))
}

fn replace_at(expr: &TermExpr, path: &[usize], with: TermExpr) -> TermExpr {
    let Some((&k, rest)) = path.split_first() else {
        return with;
    };
    match expr {
        TermExpr::Leaf(_) => unreachable!("path checked before"),
        TermExpr::Integral { label, args } => {
            let mut args = args.clone();
            args[k] = replace_at(&args[k], rest, with);
            TermExpr::integral(*label, args).expect("label is nonzero")
        }
        TermExpr::Sum(ts) => {
            let mut ts = ts.clone();
            ts[k] = replace_at(&ts[k], rest, with);
            TermExpr::sum(ts)
        }
    }
}

/// `Phi(t)`: `I^0_k` when the root label `k` is 0 or the tree is a single
/// node, otherwise `I^n_k[Phi(t_1), ..., Phi(t_n)]` over the subtrees.
pub fn phi(tree: &STree) -> TermExpr {
    let k = tree.root_label();
    if k == NodeLabel::Zero || tree.len() == 1 {
        return TermExpr::Leaf(k);
    }
    let subtrees = tree.subtrees().expect("tree has more than one node");
    TermExpr::integral(k, subtrees.iter().map(phi).collect()).expect("root label is nonzero")
}

/// `Psi(t)`: zero for active trees, `Phi(t)` otherwise. Zero is `None`.
pub fn psi(tree: &STree) -> Option<TermExpr> {
    if tree.is_active() {
        None
    } else {
        Some(phi(tree))
    }
}

pub fn phi_wood(wood: &SWood) -> TermExpr {
    TermExpr::sum(wood.trees().iter().map(phi))
}

pub fn psi_wood(wood: &SWood) -> TermExpr {
    TermExpr::sum(wood.trees().iter().filter_map(psi))
}

/// Path inside `phi_wood(wood)` of the operator that belongs to node
/// `(i, j)`. `None` when the node is hidden below a `0` root or is out of
/// range.
pub fn locate(wood: &SWood, at: ActiveNode) -> Option<TermPath> {
    if at.tree == 0 || at.tree > wood.len() {
        return None;
    }
    let tree = wood.tree(at.tree);
    if at.node == 0 || at.node > tree.len() {
        return None;
    }
    let mut inner = Vec::new();
    if !node_path(tree, at.node, &mut inner) {
        return None;
    }
    let whole = phi_wood(wood);
    let mine = phi(tree);
    match &whole {
        TermExpr::Sum(ts) => {
            let k = ts.iter().position(|t| *t == mine)?;
            let mut path = vec![k];
            path.extend(inner);
            Some(path)
        }
        _ => Some(inner),
    }
}

/// Path of node `target` inside `phi(tree)`, argument order included.
fn node_path(tree: &STree, target: usize, path: &mut TermPath) -> bool {
    let kids = tree.children_table();
    let mut chain = vec![target];
    while let Some(p) = tree.parent(*chain.last().unwrap()) {
        chain.push(p);
    }
    chain.reverse();
    // operators below a `0` node are absorbed into its leaf
    if chain[..chain.len() - 1]
        .iter()
        .any(|&v| tree.label(v) == NodeLabel::Zero)
    {
        return false;
    }
    for w in chain.windows(2) {
        let (v, c) = (w[0], w[1]);
        // arguments are sorted by rendering; find where c's subterm lands
        let rendered: Vec<String> = kids[v].iter().map(|&x| phi(&sub_at(tree, x)).compact()).collect();
        let mine = &rendered[kids[v].iter().position(|&x| x == c).unwrap()];
        let mut sorted = rendered.clone();
        sorted.sort();
        path.push(sorted.iter().position(|r| r == mine).unwrap());
    }
    true
}

/// Subtree rooted at `v`, nodes numbered in increasing original order.
fn sub_at(tree: &STree, v: usize) -> STree {
    let mut members = vec![v];
    for j in v + 1..=tree.len() {
        if tree.parent(j).is_some_and(|p| members.contains(&p)) {
            members.push(j);
        }
    }
    let labels = members.iter().map(|&j| tree.label(j)).collect();
    let parents = members[1..]
        .iter()
        .map(|&j| {
            let p = tree.parent(j).unwrap();
            members.iter().position(|&m| m == p).unwrap() + 1
        })
        .collect();
    STree::new(parents, labels).expect("descendant sets are trees")
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("column {column}: expected {expected}")]
pub struct TermParseError {
    pub column: usize,
    pub expected: String,
}

impl FromStr for TermExpr {
    type Err = TermParseError;

    /// Parses the compact rendering. The result is canonicalized.
    fn from_str(s: &str) -> Result<Self, TermParseError> {
        let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut p = TermParser { chars, pos: 0 };
        if p.chars == ['0'] {
            return Ok(TermExpr::zero());
        }
        let mut terms = vec![p.atom()?];
        while p.eat('+') {
            terms.push(p.atom()?);
        }
        if p.pos != p.chars.len() {
            return Err(p.fail("'+' or end of input"));
        }
        Ok(TermExpr::sum(terms))
    }
}

struct TermParser {
    chars: Vec<char>,
    pos: usize,
}

impl TermParser {
    fn fail(&self, expected: &str) -> TermParseError {
        TermParseError {
            column: self.pos + 1,
            expected: expected.to_string(),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.chars.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), TermParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.fail(&format!("'{c}'")))
        }
    }

    fn atom(&mut self) -> Result<TermExpr, TermParseError> {
        self.expect('I')?;
        self.expect('^')?;
        let start = self.pos;
        while self.chars.get(self.pos).is_some_and(char::is_ascii_digit) {
            self.pos += 1;
        }
        let degree: usize = self.chars[start..self.pos]
            .iter()
            .collect::<String>()
            .parse()
            .map_err(|_| self.fail("a degree"))?;
        self.expect('_')?;
        let label = match self.chars.get(self.pos) {
            Some('0') => NodeLabel::Zero,
            Some('1') => NodeLabel::One,
            Some('2') => NodeLabel::Two,
            _ => return Err(self.fail("a label")),
        };
        self.pos += 1;
        let label = if label != NodeLabel::Zero && self.eat('*') {
            if label == NodeLabel::One {
                NodeLabel::OneStar
            } else {
                NodeLabel::TwoStar
            }
        } else {
            label
        };
        let mut args = Vec::new();
        if degree > 0 {
            self.expect('[')?;
            args.push(self.atom()?);
            while self.eat(',') {
                args.push(self.atom()?);
            }
            self.expect(']')?;
        }
        if args.len() != degree {
            return Err(self.fail(&format!("{degree} arguments")));
        }
        TermExpr::integral(label, args).map_err(|_| self.fail("a nonzero label"))
    }
}
