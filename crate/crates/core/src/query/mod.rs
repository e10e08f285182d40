//! MinXQuery: abstract syntax, parser, static checks and a direct
//! interpreter used as the reference semantics.

mod check;
mod interp;
mod parse;
mod print;

use std::fmt;

pub use check::{check_ft_eligibility, check_scoping, query_size};
pub use interp::{interpret, select_nodes, NodeRef};
pub(crate) use interp::comparison_steps;
pub use parse::parse_query;

pub const INPUT: &str = "input";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Query {
    /// `<name>...</name>`; children are elements, strings or clauses.
    Element { name: String, children: Vec<Query> },
    Str(String),
    For { var: String, path: Path, body: Box<Query> },
    Let { var: String, bound: Box<Query>, body: Box<Query> },
    Path(Path),
    Seq(Vec<Query>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    /// Variable name without the `$`.
    pub start: String,
    pub steps: Vec<Step>,
}

impl Path {
    pub fn new(start: impl Into<String>, steps: Vec<Step>) -> Self {
        Path { start: start.into(), steps }
    }

    /// A zero-step path is a plain variable reference.
    pub fn is_var(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn has_predicates(&self) -> bool {
        self.steps.iter().any(|s| !s.preds.is_empty())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    Child,
    Descendant,
    FollowingSibling,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeTest {
    Name(String),
    Star,
    Text,
    Node,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub axis: Axis,
    pub test: NodeTest,
    pub preds: Vec<Predicate>,
}

impl Step {
    pub fn new(axis: Axis, test: NodeTest) -> Self {
        Step { axis, test, preds: Vec::new() }
    }

    pub fn child(name: &str) -> Self {
        Step::new(Axis::Child, NodeTest::Name(name.to_string()))
    }

    pub fn with_pred(mut self, p: Predicate) -> Self {
        self.preds.push(p);
        self
    }
}

/// Predicate paths are relative to the context node (`.`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Predicate {
    Exists(Vec<Step>),
    Empty(Vec<Step>),
    Eq(Vec<Step>, String),
    Neq(Vec<Step>, String),
}

impl Predicate {
    pub fn steps(&self) -> &[Step] {
        match self {
            Predicate::Exists(s) | Predicate::Empty(s) | Predicate::Eq(s, _) | Predicate::Neq(s, _) => s,
        }
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_query(self, f)
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_path(self, f)
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_step(self, f)
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_pred(self, f)
    }
}
