//! Macro forest transducers.
//!
//! An [`Mft`] is a ranked state set, a rule list keyed by `(state, guard)` and
//! an initial state. The subclasses FT/MTT/TT are recognised by
//! [`classify`] rather than being separate types.

mod check;
mod eval;
mod text;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::forest::{Label, NodeKind};

pub use check::{classify, is_tree_shaped, size, validate, TransducerClass};
pub use eval::{evaluate, evaluate_with_budget, Evaluator};
pub use text::{parse_mft, print_mft};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct State {
    pub name: String,
    /// `1 + number of parameters`.
    pub rank: usize,
}

impl State {
    pub fn params(&self) -> usize {
        self.rank - 1
    }
}

/// A guard symbol. Element and attribute nodes are matched by name; text
/// symbols (string constants) match text nodes by content.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol {
    pub name: Arc<str>,
    pub text: bool,
}

impl Symbol {
    pub fn element(name: impl Into<Arc<str>>) -> Self {
        Symbol { name: name.into(), text: false }
    }

    pub fn text(content: impl Into<Arc<str>>) -> Self {
        Symbol { name: content.into(), text: true }
    }

    pub fn matches(&self, label: &Label) -> bool {
        if self.text {
            label.kind == NodeKind::Text && label.name.trim() == &*self.name
        } else {
            label.kind != NodeKind::Text && label.name == self.name
        }
    }

    /// The symbol a concrete label is looked up under.
    pub fn of_label(label: &Label) -> Symbol {
        if label.is_text() {
            Symbol::text(label.name.trim())
        } else {
            Symbol { name: label.name.clone(), text: false }
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.text {
            write!(f, "#{}", crate::term::quote(&self.name))
        } else if crate::term::needs_quotes(&self.name) {
            f.write_str(&crate::term::quote(&self.name))
        } else {
            f.write_str(&self.name)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Guard {
    Symbol(Symbol),
    /// Any text node without a more specific symbol rule.
    TextNode,
    Default,
    Epsilon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    X0,
    X1,
    X2,
}

impl Var {
    pub fn index(self) -> usize {
        match self {
            Var::X0 => 0,
            Var::X1 => 1,
            Var::X2 => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum OutLabel {
    Fixed(Label),
    /// `%t`: the label of the current input node.
    Current,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RhsItem {
    Node { label: OutLabel, children: Rhs },
    /// 1-based parameter index.
    Param(usize),
    Call { state: StateId, input: Var, args: Vec<Rhs> },
}

/// A right-hand side: a forest expression.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Rhs(pub Vec<RhsItem>);

impl Rhs {
    pub fn empty() -> Self {
        Rhs(Vec::new())
    }

    pub fn one(item: RhsItem) -> Self {
        Rhs(vec![item])
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn node(label: Label, children: Rhs) -> RhsItem {
        RhsItem::Node { label: OutLabel::Fixed(label), children }
    }

    pub fn call(state: StateId, input: Var, args: Vec<Rhs>) -> RhsItem {
        RhsItem::Call { state, input, args }
    }

    /// Number of nodes: output nodes, parameters, and calls (each call also
    /// counts its input variable leaf).
    pub fn node_count(&self) -> usize {
        self.0
            .iter()
            .map(|it| match it {
                RhsItem::Node { children, .. } => 1 + children.node_count(),
                RhsItem::Param(_) => 1,
                RhsItem::Call { args, .. } => 2 + args.iter().map(Rhs::node_count).sum::<usize>(),
            })
            .sum()
    }

    pub fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a RhsItem)) {
        for it in &self.0 {
            f(it);
            match it {
                RhsItem::Node { children, .. } => children.visit(f),
                RhsItem::Call { args, .. } => args.iter().for_each(|a| a.visit(f)),
                RhsItem::Param(_) => {}
            }
        }
    }

    pub fn visit_mut(&mut self, f: &mut dyn FnMut(&mut RhsItem)) {
        for it in &mut self.0 {
            f(it);
            match it {
                RhsItem::Node { children, .. } => children.visit_mut(f),
                RhsItem::Call { args, .. } => args.iter_mut().for_each(|a| a.visit_mut(f)),
                RhsItem::Param(_) => {}
            }
        }
    }

    /// Input variables used anywhere.
    pub fn vars(&self) -> [bool; 3] {
        let mut used = [false; 3];
        self.visit(&mut |it| {
            if let RhsItem::Call { input, .. } = it {
                used[input.index()] = true;
            }
        });
        used
    }

    pub fn uses_current_label(&self) -> bool {
        let mut used = false;
        self.visit(&mut |it| {
            if let RhsItem::Node { label: OutLabel::Current, .. } = it {
                used = true;
            }
        });
        used
    }

    pub fn params_used(&self) -> BTreeSet<usize> {
        let mut used = BTreeSet::new();
        self.visit(&mut |it| {
            if let RhsItem::Param(j) = it {
                used.insert(*j);
            }
        });
        used
    }

    /// True when the expression contains no calls, parameters, or `%t`.
    pub fn is_ground(&self) -> bool {
        let mut ground = true;
        self.visit(&mut |it| match it {
            RhsItem::Node { label: OutLabel::Current, .. } | RhsItem::Param(_) | RhsItem::Call { .. } => {
                ground = false
            }
            _ => {}
        });
        ground
    }

    /// Substitute parameters: `Param(j)` becomes `args[j-1]` spliced in place.
    pub fn subst_params(&self, args: &[Rhs]) -> Rhs {
        let mut out = Vec::with_capacity(self.0.len());
        for it in &self.0 {
            match it {
                RhsItem::Param(j) => out.extend(args[j - 1].0.iter().cloned()),
                RhsItem::Node { label, children } => out.push(RhsItem::Node {
                    label: label.clone(),
                    children: children.subst_params(args),
                }),
                RhsItem::Call { state, input, args: a } => out.push(RhsItem::Call {
                    state: *state,
                    input: *input,
                    args: a.iter().map(|x| x.subst_params(args)).collect(),
                }),
            }
        }
        Rhs(out)
    }

    /// Replace the input variable `x0` of every call by `var`.
    pub fn subst_x0(&self, var: Var) -> Rhs {
        let mut r = self.clone();
        r.visit_mut(&mut |it| {
            if let RhsItem::Call { input, .. } = it {
                if *input == Var::X0 {
                    *input = var;
                }
            }
        });
        r
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub state: StateId,
    pub guard: Guard,
    pub rhs: Rhs,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mft {
    pub states: Vec<State>,
    pub initial: StateId,
    pub sigma: BTreeSet<Symbol>,
    pub rules: Vec<Rule>,
}

/// Per-state rule lookup, built once for evaluation.
#[derive(Debug, Clone, Default)]
pub struct StateRules {
    pub symbols: HashMap<Symbol, usize>,
    pub text: Option<usize>,
    pub default: Option<usize>,
    pub epsilon: Option<usize>,
}

impl Mft {
    pub fn new() -> Self {
        Mft { states: Vec::new(), initial: StateId(0), sigma: BTreeSet::new(), rules: Vec::new() }
    }

    pub fn add_state(&mut self, name: impl Into<String>, rank: usize) -> StateId {
        assert!(rank >= 1, "state rank must be at least 1");
        self.states.push(State { name: name.into(), rank });
        StateId(self.states.len() - 1)
    }

    pub fn state(&self, id: StateId) -> &State {
        &self.states[id.0]
    }

    pub fn rank(&self, id: StateId) -> usize {
        self.states[id.0].rank
    }

    pub fn find_state(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s.name == name).map(StateId)
    }

    pub fn add_rule(&mut self, state: StateId, guard: Guard, rhs: Rhs) {
        if let Guard::Symbol(s) = &guard {
            self.sigma.insert(s.clone());
        }
        self.rules.push(Rule { state, guard, rhs });
    }

    /// The `q(%, y1..ym) -> rhs` shorthand: identical default and ε rules.
    pub fn add_stay_rule(&mut self, state: StateId, rhs: Rhs) {
        self.add_rule(state, Guard::Default, rhs.clone());
        self.add_rule(state, Guard::Epsilon, rhs);
    }

    pub fn rules_of(&self, state: StateId) -> impl Iterator<Item = &Rule> {
        self.rules.iter().filter(move |r| r.state == state)
    }

    pub fn index(&self) -> Vec<StateRules> {
        let mut idx = vec![StateRules::default(); self.states.len()];
        for (i, r) in self.rules.iter().enumerate() {
            let e = &mut idx[r.state.0];
            match &r.guard {
                Guard::Symbol(s) => {
                    e.symbols.entry(s.clone()).or_insert(i);
                }
                Guard::TextNode => {
                    e.text.get_or_insert(i);
                }
                Guard::Default => {
                    e.default.get_or_insert(i);
                }
                Guard::Epsilon => {
                    e.epsilon.get_or_insert(i);
                }
            }
        }
        idx
    }

    pub fn param_count(&self) -> usize {
        self.states.iter().map(State::params).sum()
    }

    /// Keep only states with `keep[i]`, renumbering and dropping their rules.
    /// Calls to removed states must not remain.
    pub fn retain_states(&self, keep: &[bool]) -> Mft {
        let mut map = vec![None; self.states.len()];
        let mut states = Vec::new();
        for (i, s) in self.states.iter().enumerate() {
            if keep[i] {
                map[i] = Some(StateId(states.len()));
                states.push(s.clone());
            }
        }
        let rules = self
            .rules
            .iter()
            .filter(|r| keep[r.state.0])
            .map(|r| {
                let mut rhs = r.rhs.clone();
                rhs.visit_mut(&mut |it| {
                    if let RhsItem::Call { state, .. } = it {
                        *state = map[state.0].expect("call to a removed state");
                    }
                });
                Rule { state: map[r.state.0].unwrap(), guard: r.guard.clone(), rhs }
            })
            .collect();
        Mft {
            states,
            initial: map[self.initial.0].expect("initial state removed"),
            sigma: self.sigma.clone(),
            rules,
        }
    }

    /// Rules in a canonical order (state, then guard order).
    pub fn sort_rules(&mut self) {
        fn guard_key(g: &Guard) -> (u8, Option<&Symbol>) {
            match g {
                Guard::Symbol(s) => (0, Some(s)),
                Guard::TextNode => (1, None),
                Guard::Default => (2, None),
                Guard::Epsilon => (3, None),
            }
        }
        let initial = self.initial;
        // stable: the initial state's rules come first
        self.rules.sort_by(|a, b| {
            let ka = (a.state != initial, a.state, guard_key(&a.guard));
            let kb = (b.state != initial, b.state, guard_key(&b.guard));
            ka.cmp(&kb)
        });
    }

    /// Σ recomputed from the guards plus fixed output labels.
    pub fn infer_sigma(&self) -> BTreeSet<Symbol> {
        let mut sigma = BTreeSet::new();
        for r in &self.rules {
            if let Guard::Symbol(s) = &r.guard {
                sigma.insert(s.clone());
            }
            r.rhs.visit(&mut |it| {
                if let RhsItem::Node { label: OutLabel::Fixed(l), .. } = it {
                    if !l.is_concat() {
                        sigma.insert(Symbol::of_label(l));
                    }
                }
            });
        }
        sigma
    }
}

impl Default for Mft {
    fn default() -> Self {
        Mft::new()
    }
}

impl fmt::Display for Mft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_mft(self))
    }
}

/// The identity transducer `q_copy`.
pub fn copy_transducer() -> Mft {
    let mut m = Mft::new();
    let q = m.add_state("q_copy", 1);
    m.initial = q;
    m.add_rule(
        q,
        Guard::Default,
        Rhs(vec![
            RhsItem::Node {
                label: OutLabel::Current,
                children: Rhs::one(Rhs::call(q, Var::X1, vec![])),
            },
            Rhs::call(q, Var::X2, vec![]),
        ]),
    );
    m.add_rule(q, Guard::Epsilon, Rhs::empty());
    m
}
