//! XML forests, their first-child/next-sibling binary encoding, and the
//! `eval` mapping that interprets `@` nodes as concatenation.

use std::fmt;
use std::sync::Arc;

use crate::error::Error;

/// Reserved binary label standing for forest concatenation.
pub const CONCAT: &str = "@";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Element,
    Attribute,
    Text,
}

/// A node label: the node kind together with its name (or text content).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label {
    pub kind: NodeKind,
    pub name: Arc<str>,
}

impl Label {
    pub fn element(name: impl Into<Arc<str>>) -> Self {
        Label { kind: NodeKind::Element, name: name.into() }
    }

    pub fn attribute(name: impl Into<Arc<str>>) -> Self {
        Label { kind: NodeKind::Attribute, name: name.into() }
    }

    pub fn text(content: impl Into<Arc<str>>) -> Self {
        Label { kind: NodeKind::Text, name: content.into() }
    }

    pub fn is_text(&self) -> bool {
        self.kind == NodeKind::Text
    }

    pub fn is_concat(&self) -> bool {
        self.kind == NodeKind::Element && &*self.name == CONCAT
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::term::label_to_term(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tree {
    pub label: Label,
    pub children: Forest,
}

/// An ordered sequence of unranked trees; the empty forest is ε.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Forest(pub Vec<Tree>);

impl Tree {
    pub fn new(label: Label, children: Forest) -> Self {
        Tree { label, children }
    }

    pub fn element(name: &str, children: Forest) -> Self {
        Tree::new(Label::element(name), children)
    }

    pub fn text(content: &str) -> Self {
        Tree::new(Label::text(content), Forest::empty())
    }

    /// An attribute node with its single text child.
    pub fn attribute(name: &str, value: &str) -> Self {
        Tree::new(Label::attribute(name), Forest(vec![Tree::text(value)]))
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.node_count()
    }

    pub fn depth(&self) -> usize {
        1 + self.children.depth()
    }
}

impl Forest {
    pub fn empty() -> Self {
        Forest(Vec::new())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn trees(&self) -> &[Tree] {
        &self.0
    }

    pub fn node_count(&self) -> usize {
        self.0.iter().map(Tree::node_count).sum()
    }

    pub fn depth(&self) -> usize {
        self.0.iter().map(Tree::depth).max().unwrap_or(0)
    }

    pub fn concat(mut self, other: Forest) -> Forest {
        self.0.extend(other.0);
        self
    }

    /// Merge adjacent text siblings (recursively) and drop empty text nodes.
    pub fn normalize(&self) -> Forest {
        let mut out: Vec<Tree> = Vec::with_capacity(self.0.len());
        for t in &self.0 {
            if t.label.is_text() {
                if t.label.name.is_empty() {
                    continue;
                }
                if let Some(prev) = out.last_mut() {
                    if prev.label.is_text() {
                        let merged = format!("{}{}", prev.label.name, t.label.name);
                        prev.label = Label::text(merged);
                        continue;
                    }
                }
                out.push(Tree::text(&t.label.name));
            } else {
                out.push(Tree::new(t.label.clone(), t.children.normalize()));
            }
        }
        Forest(out)
    }

    /// Check the structural invariants of XML forests.
    pub fn check_invariants(&self) -> Result<(), Error> {
        let mut prev_text = false;
        for t in &self.0 {
            if t.label.name.is_empty() && !t.label.is_text() {
                return Err(Error::Invariant("empty node label".into()));
            }
            if t.label.is_concat() {
                return Err(Error::Invariant("reserved label `@` in forest".into()));
            }
            match t.label.kind {
                NodeKind::Text => {
                    if !t.children.is_empty() {
                        return Err(Error::Invariant(format!(
                            "text node {:?} has children",
                            t.label.name
                        )));
                    }
                    if prev_text {
                        return Err(Error::Invariant("adjacent text siblings".into()));
                    }
                }
                NodeKind::Attribute => {
                    let ok = t.children.len() == 1 && t.children.0[0].label.is_text();
                    if !ok {
                        return Err(Error::Invariant(format!(
                            "attribute {} must have exactly one text child",
                            t.label.name
                        )));
                    }
                }
                NodeKind::Element => t.children.check_invariants()?,
            }
            prev_text = t.label.is_text();
        }
        Ok(())
    }
}

impl From<Vec<Tree>> for Forest {
    fn from(v: Vec<Tree>) -> Self {
        Forest(v)
    }
}

impl fmt::Display for Forest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::term::print_term(self))
    }
}

/// Binary trees: leaves are ε, inner nodes carry a label and two subtrees.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BinaryTree {
    Leaf,
    Node(Label, Box<BinaryTree>, Box<BinaryTree>),
}

impl BinaryTree {
    pub fn node(label: Label, left: BinaryTree, right: BinaryTree) -> Self {
        BinaryTree::Node(label, Box::new(left), Box::new(right))
    }

    pub fn concat(left: BinaryTree, right: BinaryTree) -> Self {
        BinaryTree::node(Label::element(CONCAT), left, right)
    }

    /// Number of labeled (non-ε) nodes.
    pub fn inner_count(&self) -> usize {
        match self {
            BinaryTree::Leaf => 0,
            BinaryTree::Node(_, l, r) => 1 + l.inner_count() + r.inner_count(),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            BinaryTree::Leaf => 1,
            BinaryTree::Node(_, l, r) => l.leaf_count() + r.leaf_count(),
        }
    }

    pub fn height(&self) -> usize {
        match self {
            BinaryTree::Leaf => 0,
            BinaryTree::Node(_, l, r) => 1 + l.height().max(r.height()),
        }
    }
}

impl fmt::Display for BinaryTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BinaryTree::Leaf => f.write_str("eps"),
            BinaryTree::Node(label, l, r) => write!(f, "{label}({l},{r})"),
        }
    }
}

/// First-child/next-sibling encoding.
pub fn fcns(f: &Forest) -> BinaryTree {
    fcns_slice(&f.0)
}

fn fcns_slice(trees: &[Tree]) -> BinaryTree {
    // Build right spine iteratively so long sibling lists do not recurse.
    let mut acc = BinaryTree::Leaf;
    for t in trees.iter().rev() {
        acc = BinaryTree::node(t.label.clone(), fcns_slice(&t.children.0), acc);
    }
    acc
}

/// Inverse of [`fcns`]; rejects trees containing `@`.
pub fn fcns_inverse(b: &BinaryTree) -> Result<Forest, Error> {
    let mut out = Vec::new();
    let mut cur = b;
    while let BinaryTree::Node(label, l, r) = cur {
        if label.is_concat() {
            return Err(Error::Invariant("`@` node has no forest preimage".into()));
        }
        out.push(Tree::new(label.clone(), fcns_inverse(l)?));
        cur = r;
    }
    Ok(Forest(out))
}

/// Interpret `@` as concatenation: `eval(@(l,r)) = eval(l) eval(r)` and
/// `eval(σ(l,r)) = σ(eval(l)) eval(r)`.
pub fn eval(b: &BinaryTree) -> Forest {
    let mut out = Vec::new();
    eval_into(b, &mut out);
    Forest(out)
}

fn eval_into(b: &BinaryTree, out: &mut Vec<Tree>) {
    let mut cur = b;
    while let BinaryTree::Node(label, l, r) = cur {
        if label.is_concat() {
            eval_into(l, out);
        } else {
            out.push(Tree::new(label.clone(), eval(l)));
        }
        cur = r;
    }
}

/// Splice out every `@` node of a forest, keeping its children in place.
/// On the forest view this is exactly `eval ∘ fcns`.
pub fn flatten_concat(f: &Forest) -> Forest {
    let mut out = Vec::new();
    flatten_into(&f.0, &mut out);
    Forest(out)
}

fn flatten_into(trees: &[Tree], out: &mut Vec<Tree>) {
    for t in trees {
        if t.label.is_concat() {
            flatten_into(&t.children.0, out);
        } else {
            out.push(Tree::new(t.label.clone(), flatten_concat(&t.children)));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::parse_term;

    fn leaf(name: &str) -> BinaryTree {
        BinaryTree::node(Label::element(name), BinaryTree::Leaf, BinaryTree::Leaf)
    }

    #[test]
    fn fcns_base_case() {
        assert_eq!(fcns(&Forest::empty()), BinaryTree::Leaf);
    }

    #[test]
    fn fcns_nested() {
        let f = parse_term("a(b())").unwrap();
        let expected = BinaryTree::node(Label::element("a"), leaf("b"), BinaryTree::Leaf);
        assert_eq!(fcns(&f), expected);
        assert_eq!(fcns_inverse(&expected).unwrap(), f);
    }

    #[test]
    fn fcns_siblings() {
        let f = parse_term("a() b()").unwrap();
        let expected = BinaryTree::node(Label::element("a"), BinaryTree::Leaf, leaf("b"));
        assert_eq!(fcns(&f), expected);
    }

    #[test]
    fn fcns_inverse_rejects_concat() {
        let b = BinaryTree::concat(leaf("a"), leaf("b"));
        assert!(fcns_inverse(&b).is_err());
    }

    #[test]
    fn eval_concat() {
        let b = BinaryTree::concat(leaf("a"), leaf("b"));
        assert_eq!(eval(&b), parse_term("a() b()").unwrap());
        assert_eq!(eval(&BinaryTree::Leaf), Forest::empty());
    }

    #[test]
    fn eval_nested_concat_in_left_child() {
        // c(@(a(ε,ε), b(ε,ε)), ε) is c(a() b())
        let b = BinaryTree::node(
            Label::element("c"),
            BinaryTree::concat(leaf("a"), leaf("b")),
            BinaryTree::Leaf,
        );
        assert_eq!(eval(&b), parse_term("c(a() b())").unwrap());
    }

    #[test]
    fn node_count_relation() {
        let f = parse_term("a(b() #\"t\") c(@k(#\"v\"))").unwrap();
        let b = fcns(&f);
        assert_eq!(b.inner_count(), f.node_count());
        assert_eq!(b.leaf_count(), f.node_count() + 1);
    }

    #[test]
    fn invariants() {
        assert!(parse_term("a(#\"x\" b())").unwrap().check_invariants().is_ok());
        let bad = Forest(vec![Tree::text("x"), Tree::text("y")]);
        assert!(bad.check_invariants().is_err());
        let bad_attr = Forest(vec![Tree::new(Label::attribute("k"), Forest::empty())]);
        assert!(bad_attr.check_invariants().is_err());
    }

    #[test]
    fn normalize_merges_text() {
        let f = Forest(vec![Tree::element(
            "out",
            Forest(vec![Tree::text("Jim"), Tree::text("Li")]),
        )]);
        assert_eq!(f.normalize(), parse_term("out(#\"JimLi\")").unwrap());
    }
}
