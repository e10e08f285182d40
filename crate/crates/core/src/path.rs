//! Step-set automata for downward paths.
//!
//! A scan state is the set of step indices (1-based) that may match any node
//! of the sibling list currently being scanned. Reading a node of some label
//! class gives the steps it matches, whether it is selected, the state for
//! its children and the state for its right siblings.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use crate::forest::{Forest, Label, NodeKind, Tree};
use crate::query::{Axis, NodeRef, NodeTest, Step};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Test {
    Name(Arc<str>),
    Star,
    Text,
    Node,
    /// A text node whose trimmed content equals the string.
    TextEq(Arc<str>),
    TextNeq(Arc<str>),
}

impl Test {
    pub fn of(t: &NodeTest) -> Test {
        match t {
            NodeTest::Name(n) => Test::Name(n.as_str().into()),
            NodeTest::Star => Test::Star,
            NodeTest::Text => Test::Text,
            NodeTest::Node => Test::Node,
        }
    }

    pub fn matches(&self, c: &Class) -> bool {
        match (self, c) {
            (Test::Node, _) => true,
            (Test::Name(n), Class::Name(m)) => n == m,
            (Test::Name(_), _) => false,
            (Test::Star, c) => !c.is_text(),
            (Test::Text, c) => c.is_text(),
            (Test::TextEq(s), Class::Text(t)) => s == t,
            (Test::TextEq(_), _) => false,
            (Test::TextNeq(s), Class::Text(t)) => s != t,
            (Test::TextNeq(_), Class::OtherText) => true,
            (Test::TextNeq(_), _) => false,
        }
    }
}

/// Label classes distinguished by a set of tests.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Class {
    /// An element or attribute with this name.
    Name(Arc<str>),
    /// Any other element or attribute.
    Other,
    /// A text node with this trimmed content.
    Text(Arc<str>),
    OtherText,
}

impl Class {
    pub fn is_text(&self) -> bool {
        matches!(self, Class::Text(_) | Class::OtherText)
    }

    /// The class of `label` relative to the given class list.
    pub fn of_label(label: &Label, classes: &[Class]) -> Class {
        if label.kind == NodeKind::Text {
            let t = label.name.trim();
            classes
                .iter()
                .find(|c| matches!(c, Class::Text(s) if &**s == t))
                .cloned()
                .unwrap_or(Class::OtherText)
        } else {
            classes
                .iter()
                .find(|c| matches!(c, Class::Name(s) if *s == label.name))
                .cloned()
                .unwrap_or(Class::Other)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PStep {
    pub axis: Axis,
    pub test: Test,
}

impl PStep {
    pub fn of(s: &Step) -> PStep {
        PStep { axis: s.axis, test: Test::of(&s.test) }
    }
}

pub type StepSet = BTreeSet<usize>;

/// All classes the tests of `steps` can tell apart, symbols first.
pub fn classes_of(steps: &[PStep]) -> Vec<Class> {
    let mut names = BTreeSet::new();
    let mut texts = BTreeSet::new();
    for s in steps {
        match &s.test {
            Test::Name(n) => {
                names.insert(n.clone());
            }
            Test::TextEq(t) | Test::TextNeq(t) => {
                texts.insert(t.clone());
            }
            _ => {}
        }
    }
    let mut out: Vec<Class> = names.into_iter().map(Class::Name).collect();
    out.extend(texts.into_iter().map(Class::Text));
    out.push(Class::OtherText);
    out.push(Class::Other);
    out
}

/// Steps of `set` whose test accepts class `c`.
pub fn matched(steps: &[PStep], set: &StepSet, c: &Class) -> StepSet {
    set.iter().copied().filter(|&j| steps[j - 1].test.matches(c)).collect()
}

/// Successor sets after a node matched exactly the steps in `m`.
pub fn successors(steps: &[PStep], set: &StepSet, m: &StepSet) -> (StepSet, StepSet) {
    let mut down: StepSet =
        set.iter().copied().filter(|&j| steps[j - 1].axis == Axis::Descendant).collect();
    let mut right = set.clone();
    for &j in m {
        if let Some(next) = steps.get(j) {
            if next.axis == Axis::FollowingSibling {
                right.insert(j + 1);
            } else {
                down.insert(j + 1);
            }
        }
    }
    (down, right)
}

/// Sets for the children and the right siblings of a context node, which
/// counts as having matched step 0.
pub fn root_sets(steps: &[PStep]) -> (StepSet, StepSet) {
    let mut down = StepSet::new();
    let mut right = StepSet::new();
    if let Some(first) = steps.first() {
        if first.axis == Axis::FollowingSibling {
            right.insert(1);
        } else {
            down.insert(1);
        }
    }
    (down, right)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub accept: bool,
    pub down: usize,
    pub right: usize,
}

/// Total deterministic automaton for a predicate-free path. State 0 is the
/// context node; it has no incoming transitions.
#[derive(Debug, Clone)]
pub struct PathDfa {
    pub steps: Vec<PStep>,
    pub classes: Vec<Class>,
    /// Step set of each state; state 0 (the context node) has the empty set
    /// and is distinguished by `initial`.
    pub sets: Vec<StepSet>,
    pub initial: usize,
    /// States with at least one accepting transition.
    pub finals: BTreeSet<usize>,
    /// `trans[state][class]`.
    pub trans: Vec<Vec<Transition>>,
}

impl PathDfa {
    pub fn state_count(&self) -> usize {
        self.sets.len()
    }

    pub fn sink(&self) -> Option<usize> {
        self.sets.iter().enumerate().skip(1).find(|(_, s)| s.is_empty()).map(|(i, _)| i)
    }

    pub fn step(&self, state: usize, label: &Label) -> Transition {
        let c = Class::of_label(label, &self.classes);
        let ci = self.classes.iter().position(|x| *x == c).expect("class list is complete");
        self.trans[state][ci]
    }

    /// DOT-like dump.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph path {\n");
        for (i, set) in self.sets.iter().enumerate() {
            let name = if i == self.initial { "init".to_string() } else { format!("{set:?}") };
            let shape = if self.finals.contains(&i) { "doublecircle" } else { "circle" };
            let _ = writeln!(out, "  s{i} [label=\"{name}\" shape={shape}];");
        }
        for (i, row) in self.trans.iter().enumerate() {
            for (ci, t) in row.iter().enumerate() {
                let c = match &self.classes[ci] {
                    Class::Name(n) => n.to_string(),
                    Class::Other => "other".into(),
                    Class::Text(t) => format!("#{t:?}"),
                    Class::OtherText => "text".into(),
                };
                let acc = if t.accept { " accept" } else { "" };
                let _ = writeln!(out, "  s{i} -> s{} [label=\"{c} down{acc}\"];", t.down);
                let _ = writeln!(out, "  s{i} -> s{} [label=\"{c} right\"];", t.right);
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Subset construction; reachable sets only.
pub fn compile_path(steps: &[Step]) -> PathDfa {
    let psteps: Vec<PStep> = steps.iter().map(PStep::of).collect();
    compile_psteps(psteps)
}

pub fn compile_psteps(steps: Vec<PStep>) -> PathDfa {
    let classes = classes_of(&steps);
    let k = steps.len();
    let mut sets: Vec<StepSet> = vec![StepSet::new()];
    let mut ids: HashMap<StepSet, usize> = HashMap::new();
    let mut trans: Vec<Vec<Transition>> = vec![Vec::new()];
    let mut intern = |s: StepSet, sets: &mut Vec<StepSet>, trans: &mut Vec<Vec<Transition>>| -> usize {
        *ids.entry(s.clone()).or_insert_with(|| {
            sets.push(s);
            trans.push(Vec::new());
            sets.len() - 1
        })
    };
    let (d0, r0) = root_sets(&steps);
    let d = intern(d0, &mut sets, &mut trans);
    let r = intern(r0, &mut sets, &mut trans);
    let t0 = Transition { accept: k == 0, down: d, right: r };
    trans[0] = vec![t0; classes.len()];
    let mut i = 1;
    while i < sets.len() {
        let set = sets[i].clone();
        let mut row = Vec::with_capacity(classes.len());
        for c in &classes {
            let m = matched(&steps, &set, c);
            let (down, right) = successors(&steps, &set, &m);
            let accept = m.contains(&k) && k > 0;
            let down = intern(down, &mut sets, &mut trans);
            let right = intern(right, &mut sets, &mut trans);
            row.push(Transition { accept, down, right });
        }
        trans[i] = row;
        i += 1;
    }
    let finals = trans
        .iter()
        .enumerate()
        .filter(|(_, row)| row.iter().any(|t| t.accept))
        .map(|(i, _)| i)
        .collect();
    PathDfa { steps, classes, sets, initial: 0, finals, trans }
}

fn children<'a>(doc: &'a Forest, r: &[usize]) -> &'a [Tree] {
    let Some((first, rest)) = r.split_first() else { return &doc.0 };
    let mut t = &doc.0[*first];
    for &i in rest {
        t = &t.children.0[i];
    }
    &t.children.0
}

/// Nodes selected by running `dfa` from the context node `start` (the empty
/// reference is the document root), in the order the scan visits them.
pub fn run_dfa(dfa: &PathDfa, doc: &Forest, start: &NodeRef) -> Vec<NodeRef> {
    let t0 = dfa.trans[dfa.initial][0];
    let mut out = Vec::new();
    let mut r = start.clone();
    scan(dfa, doc, &mut r, 0, t0.down, &mut out);
    if let Some((&i, parent)) = start.split_last() {
        let mut p = parent.to_vec();
        scan(dfa, doc, &mut p, i + 1, t0.right, &mut out);
    }
    out
}

fn scan(
    dfa: &PathDfa,
    doc: &Forest,
    parent: &mut NodeRef,
    from: usize,
    mut state: usize,
    out: &mut Vec<NodeRef>,
) {
    let n = children(doc, parent).len();
    for i in from..n {
        if dfa.sets[state].is_empty() {
            return;
        }
        let label = children(doc, parent)[i].label.clone();
        let t = dfa.step(state, &label);
        parent.push(i);
        if t.accept {
            out.push(parent.clone());
        }
        scan(dfa, doc, parent, 0, t.down, out);
        parent.pop();
        state = t.right;
    }
}

/// Reference selection (direct recursive path semantics).
pub fn select_nodes_oracle(doc: &Forest, start: &NodeRef, steps: &[Step]) -> Vec<NodeRef> {
    crate::query::select_nodes(doc, start, steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::{parse_query, Query};
    use crate::term::parse_term;

    fn steps(p: &str) -> Vec<Step> {
        match parse_query(p).unwrap() {
            Query::Path(p) => p.steps,
            _ => panic!(),
        }
    }

    #[test]
    fn single_child_step_has_three_states() {
        let dfa = compile_path(&steps("$v/child::a"));
        assert_eq!(dfa.state_count(), 3);
        assert!(dfa.sink().is_some());
        assert_eq!(dfa.finals.len(), 1);
        for row in &dfa.trans {
            assert_eq!(row.len(), dfa.classes.len());
        }
    }

    #[test]
    fn initial_state_has_no_incoming_transition() {
        for p in ["$v/a", "$v//a/b", "$v/a/following-sibling::b//c", "$v/*/text()"] {
            let dfa = compile_path(&steps(p));
            for row in &dfa.trans {
                for t in row {
                    assert_ne!(t.down, dfa.initial);
                    assert_ne!(t.right, dfa.initial);
                }
            }
        }
    }

    #[test]
    fn descendant_selection_in_preorder() {
        let doc = parse_term("doc(a(b(c(c()) d() d()) b(d())))").unwrap();
        let dfa = compile_path(&steps("$v/descendant::b"));
        assert_eq!(run_dfa(&dfa, &doc, &vec![]), vec![vec![0, 0, 0], vec![0, 0, 1]]);
    }

    #[test]
    fn following_sibling_from_context() {
        let doc = parse_term("r(a() b() a() b())").unwrap();
        let s = steps("$v/following-sibling::b");
        let dfa = compile_path(&s);
        let from = vec![0, 0];
        assert_eq!(run_dfa(&dfa, &doc, &from), select_nodes_oracle(&doc, &from, &s));
        assert_eq!(run_dfa(&dfa, &doc, &from), vec![vec![0, 1], vec![0, 3]]);
    }

    #[test]
    fn dot_dump_mentions_every_state() {
        let dfa = compile_path(&steps("$v//a/b"));
        let dot = dfa.to_dot();
        for i in 0..dfa.state_count() {
            assert!(dot.contains(&format!("s{i} [")));
        }
    }
}
