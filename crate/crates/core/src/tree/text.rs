//! Text form of trees and woods.
//!
//! A wood is a `;`-separated list of parenthesized trees. A tree is a
//! pre-order walk: a label followed by an optional bracketed, comma-separated
//! child list, e.g. `(2*[0]);(1[2,0])`. Trees whose numbering is not the
//! pre-order one carry an explicit index on every node, `label:n`. Whitespace
//! is insignificant.

use std::fmt;
use std::str::FromStr;

use super::{NodeLabel, STree, SWood};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {column}: expected {expected}, found {found}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub expected: String,
    pub found: String,
}

impl fmt::Display for STree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kids = self.children_table();
        let indexed = !self.is_preorder();
        write_node(self, &kids, 1, indexed, f)
    }
}

fn write_node(
    tree: &STree,
    kids: &[Vec<usize>],
    j: usize,
    indexed: bool,
    f: &mut fmt::Formatter<'_>,
) -> fmt::Result {
    f.write_str(tree.label(j).as_str())?;
    if indexed {
        write!(f, ":{j}")?;
    }
    if !kids[j].is_empty() {
        f.write_str("[")?;
        for (k, &c) in kids[j].iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write_node(tree, kids, c, indexed, f)?;
        }
        f.write_str("]")?;
    }
    Ok(())
}

impl fmt::Display for SWood {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.trees().iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "({t})")?;
        }
        Ok(())
    }
}

impl FromStr for SWood {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        let mut p = Parser::new(s);
        let mut trees = vec![p.paren_tree()?];
        while p.eat(';') {
            trees.push(p.paren_tree()?);
        }
        p.end()?;
        Ok(SWood::new(trees).expect("at least one tree parsed"))
    }
}

impl FromStr for STree {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        let mut p = Parser::new(s);
        let t = p.tree()?;
        p.end()?;
        Ok(t)
    }
}

struct RawNode {
    label: NodeLabel,
    index: Option<usize>,
    parent: Option<usize>,
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn new(s: &str) -> Self {
        Parser {
            chars: s.chars().collect(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn location(&self, at: usize) -> (usize, usize) {
        let mut line = 1;
        let mut column = 1;
        for &c in &self.chars[..at.min(self.chars.len())] {
            if c == '\n' {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
        }
        (line, column)
    }

    fn error_at(&self, at: usize, expected: &str, found: String) -> ParseError {
        let (line, column) = self.location(at);
        ParseError {
            line,
            column,
            expected: expected.to_string(),
            found,
        }
    }

    fn error(&mut self, expected: &str) -> ParseError {
        let found = match self.peek() {
            Some(c) => format!("'{c}'"),
            None => "end of input".to_string(),
        };
        self.error_at(self.pos, expected, found)
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("'{c}'")))
        }
    }

    fn end(&mut self) -> Result<(), ParseError> {
        if self.peek().is_some() {
            Err(self.error("';' or end of input"))
        } else {
            Ok(())
        }
    }

    fn paren_tree(&mut self) -> Result<STree, ParseError> {
        self.expect('(')?;
        let t = self.tree()?;
        self.expect(')')?;
        Ok(t)
    }

    fn label(&mut self) -> Result<NodeLabel, ParseError> {
        let l = match self.peek() {
            Some('0') => NodeLabel::Zero,
            Some('1') => NodeLabel::One,
            Some('2') => NodeLabel::Two,
            _ => return Err(self.error("a label in {0, 1, 2, 1*, 2*}")),
        };
        self.pos += 1;
        // no whitespace allowed between digit and star
        if l != NodeLabel::Zero && self.chars.get(self.pos) == Some(&'*') {
            self.pos += 1;
            return Ok(match l {
                NodeLabel::One => NodeLabel::OneStar,
                _ => NodeLabel::TwoStar,
            });
        }
        Ok(l)
    }

    fn index(&mut self) -> Result<Option<usize>, ParseError> {
        if !self.eat(':') {
            return Ok(None);
        }
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let digits: String = self.chars[start..self.pos].iter().collect();
        match digits.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => {
                self.pos = start;
                Err(self.error("a node index >= 1"))
            }
        }
    }

    fn tree(&mut self) -> Result<STree, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let mut nodes: Vec<RawNode> = Vec::new();
        self.node(None, &mut nodes)?;
        self.assemble(start, nodes)
    }

    fn node(&mut self, parent: Option<usize>, nodes: &mut Vec<RawNode>) -> Result<(), ParseError> {
        let label = self.label()?;
        let index = self.index()?;
        let me = nodes.len();
        nodes.push(RawNode {
            label,
            index,
            parent,
        });
        if self.eat('[') {
            self.node(Some(me), nodes)?;
            while self.eat(',') {
                self.node(Some(me), nodes)?;
            }
            self.expect(']')?;
        }
        Ok(())
    }

    /// Turns walk order plus optional indices into a numbered tree.
    fn assemble(&self, start: usize, nodes: Vec<RawNode>) -> Result<STree, ParseError> {
        let n = nodes.len();
        let fail = |expected: &str, found: String| Err(self.error_at(start, expected, found));
        let given = nodes.iter().filter(|r| r.index.is_some()).count();
        let numbering: Vec<usize> = if given == 0 {
            (1..=n).collect()
        } else if given == n {
            nodes.iter().map(|r| r.index.unwrap()).collect()
        } else {
            return fail(
                "node indices on all nodes or on none",
                format!("{given} of {n} indexed"),
            );
        };
        let mut seen = vec![false; n + 1];
        for &k in &numbering {
            if k > n || seen[k] {
                return fail(
                    &format!("indices forming a permutation of 1..={n}"),
                    format!("index {k}"),
                );
            }
            seen[k] = true;
        }
        if numbering[0] != 1 {
            return fail("root index 1", format!("root index {}", numbering[0]));
        }
        let mut labels = vec![NodeLabel::Zero; n];
        let mut parents = vec![0; n.saturating_sub(1)];
        for (w, r) in nodes.iter().enumerate() {
            let k = numbering[w];
            labels[k - 1] = r.label;
            if let Some(p) = r.parent {
                parents[k - 2] = numbering[p];
            }
        }
        STree::new(parents, labels).or_else(|e| fail("a valid tree", e.to_string()))
    }
}

/// Parses a wood from its text form.
pub fn parse_wood(text: &str) -> Result<SWood, ParseError> {
    text.parse()
}

/// Serializes a wood; inverse of [`parse_wood`].
pub fn serialize_wood(wood: &SWood) -> String {
    wood.to_string()
}
