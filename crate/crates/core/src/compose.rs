//! Composition of tree and forest transducers, and the decomposition of
//! forest transducers into a tree transducer followed by `eval`.
//!
//! Composed states are named `q~p` (a pair of states) and `q~r<i>u<j>~p`
//! (state `p` run on node `j` of the right-hand side of rule `i`).

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::forest::{Label, CONCAT};
use crate::mft::{classify, size, Guard, Mft, OutLabel, Rhs, RhsItem, StateId, StateRules, Symbol, TransducerClass, Var};
use crate::optimize::remove_unreachable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    TtTt,
    MttTt,
    TtMtt,
    MttFt,
    TtFt,
    FtTt,
    /// Two forest transducers; the first is turned into an MTT.
    FtFt,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "tt-tt" => Mode::TtTt,
            "mtt-tt" => Mode::MttTt,
            "tt-mtt" => Mode::TtMtt,
            "mtt-ft" => Mode::MttFt,
            "tt-ft" => Mode::TtFt,
            "ft-tt" => Mode::FtTt,
            "ft-ft" => Mode::FtFt,
            _ => return Err(Error::Unsupported(format!("unknown composition mode `{s}`"))),
        })
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::TtTt => "tt-tt",
            Mode::MttTt => "mtt-tt",
            Mode::TtMtt => "tt-mtt",
            Mode::MttFt => "mtt-ft",
            Mode::TtFt => "tt-ft",
            Mode::FtTt => "ft-tt",
            Mode::FtFt => "ft-ft",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompositionReport {
    pub mode: Mode,
    pub sigma: usize,
    pub size1: usize,
    pub size2: usize,
    pub size: usize,
    pub rules1: usize,
    pub rules2: usize,
    pub rules: usize,
    pub states: usize,
    pub class: TransducerClass,
    pub elapsed: Duration,
}

impl CompositionReport {
    /// `|Σ| |M1| |M2|`.
    pub fn bound(&self) -> usize {
        self.sigma.max(1) * self.size1 * self.size2
    }

    pub fn ratio(&self) -> f64 {
        self.size as f64 / self.bound() as f64
    }
}

impl fmt::Display for CompositionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "mode={}", self.mode)?;
        writeln!(f, "sigma={}", self.sigma)?;
        writeln!(f, "size1={} size2={} size={}", self.size1, self.size2, self.size)?;
        writeln!(f, "rules1={} rules2={} rules={}", self.rules1, self.rules2, self.rules)?;
        writeln!(f, "states={} class={}", self.states, self.class)?;
        writeln!(f, "bound={} ratio={:.4}", self.bound(), self.ratio())?;
        write!(f, "elapsed_us={}", self.elapsed.as_micros())
    }
}

fn require(m: &Mft, allowed: &[TransducerClass], what: &str, which: &str) -> Result<()> {
    let c = classify(m);
    if allowed.contains(&c) {
        Ok(())
    } else {
        Err(Error::Class(format!("{which} operand must be {what}, found {c}")))
    }
}

const TT: &[TransducerClass] = &[TransducerClass::Tt];
const FT: &[TransducerClass] = &[TransducerClass::Tt, TransducerClass::Ft];
const MTT: &[TransducerClass] = &[TransducerClass::Tt, TransducerClass::Mtt];

/// Compose in pipeline order: the result computes `m2` applied to the
/// output of `m1`.
pub fn compose(m1: &Mft, m2: &Mft, mode: Mode) -> Result<(Mft, CompositionReport)> {
    let start = Instant::now();
    let m = match mode {
        Mode::TtTt => compose_tt_tt(m1, m2)?,
        Mode::MttTt => compose_mtt_tt(m1, m2)?,
        Mode::TtMtt => compose_tt_mtt(m1, m2)?,
        Mode::MttFt => compose_mtt_ft(m1, m2)?,
        Mode::TtFt => compose_tt_ft(m1, m2)?,
        Mode::FtTt => compose_ft_tt(m1, m2)?,
        Mode::FtFt => compose_ft_ft(m1, m2)?,
    };
    let sigma: BTreeSet<&Symbol> = m1.sigma.iter().chain(&m2.sigma).collect();
    let report = CompositionReport {
        mode,
        sigma: sigma.len(),
        size1: size(m1),
        size2: size(m2),
        size: size(&m),
        rules1: m1.rules.len(),
        rules2: m2.rules.len(),
        rules: m.rules.len(),
        states: m.states.len(),
        class: classify(&m),
        elapsed: start.elapsed(),
    };
    Ok((m, report))
}

pub fn compose_tt_tt(m1: &Mft, m2: &Mft) -> Result<Mft> {
    require(m1, TT, "a TT", "first")?;
    require(m2, TT, "a TT", "second")?;
    mtt_then_tt(m1, m2)
}

pub fn compose_mtt_tt(m1: &Mft, m2: &Mft) -> Result<Mft> {
    require(m1, MTT, "an MTT", "first")?;
    require(m2, TT, "a TT", "second")?;
    mtt_then_tt(m1, m2)
}

pub fn compose_tt_mtt(m1: &Mft, m2: &Mft) -> Result<Mft> {
    require(m1, TT, "a TT", "first")?;
    require(m2, MTT, "an MTT", "second")?;
    tt_then_mtt(m1, m2)
}

pub fn compose_mtt_ft(m1: &Mft, m2: &Mft) -> Result<Mft> {
    require(m1, MTT, "an MTT", "first")?;
    require(m2, FT, "an FT", "second")?;
    Ok(recompose_eval(&mtt_then_tt(m1, &decompose_eval(m2))?))
}

pub fn compose_tt_ft(m1: &Mft, m2: &Mft) -> Result<Mft> {
    require(m1, TT, "a TT", "first")?;
    require(m2, FT, "an FT", "second")?;
    Ok(recompose_eval(&mtt_then_tt(m1, &decompose_eval(m2))?))
}

pub fn compose_ft_tt(m1: &Mft, m2: &Mft) -> Result<Mft> {
    require(m1, FT, "an FT", "first")?;
    require(m2, TT, "a TT", "second")?;
    let first = tt_then_mtt(&decompose_eval(m1), &eval_mtt())?;
    mtt_then_tt(&first, m2)
}

pub fn compose_ft_ft(m1: &Mft, m2: &Mft) -> Result<Mft> {
    require(m1, FT, "an FT", "first")?;
    compose_mtt_ft(&ft_to_mtt(m1)?, m2)
}

/// An equivalent MTT for a forest transducer: decompose and compose the
/// tree part with the `eval` MTT.
pub fn ft_to_mtt(m: &Mft) -> Result<Mft> {
    require(m, FT, "an FT", "the")?;
    tt_then_mtt(&decompose_eval(m), &eval_mtt())
}

/// Replace concatenation in every right-hand side by the binary `@`
/// symbol. The result is tree-shaped and `flatten_concat` of its output is
/// the output of `m`.
pub fn decompose_eval(m: &Mft) -> Mft {
    fn one(it: &RhsItem) -> RhsItem {
        match it {
            RhsItem::Node { label, children } => RhsItem::Node { label: label.clone(), children: seq(children) },
            RhsItem::Call { state, input, args } => {
                RhsItem::Call { state: *state, input: *input, args: args.iter().map(seq).collect() }
            }
            RhsItem::Param(j) => RhsItem::Param(*j),
        }
    }
    fn seq(r: &Rhs) -> Rhs {
        match r.0.as_slice() {
            [] => Rhs::empty(),
            [x] => Rhs::one(one(x)),
            [x, rest @ ..] => {
                let mut out = vec![Rhs::node(Label::element(CONCAT), Rhs::one(one(x)))];
                out.extend(seq(&Rhs(rest.to_vec())).0);
                Rhs(out)
            }
        }
    }
    let mut out = m.clone();
    for r in &mut out.rules {
        r.rhs = seq(&r.rhs);
    }
    out
}

/// Remove every `@` node from right-hand sides, splicing its children.
pub fn recompose_eval(m: &Mft) -> Mft {
    fn seq(r: &Rhs, out: &mut Vec<RhsItem>) {
        for it in &r.0 {
            match it {
                RhsItem::Node { label: OutLabel::Fixed(l), children } if l.is_concat() => seq(children, out),
                RhsItem::Node { label, children } => {
                    out.push(RhsItem::Node { label: label.clone(), children: flat(children) })
                }
                RhsItem::Call { state, input, args } => {
                    out.push(RhsItem::Call { state: *state, input: *input, args: args.iter().map(flat).collect() })
                }
                RhsItem::Param(j) => out.push(RhsItem::Param(*j)),
            }
        }
    }
    fn flat(r: &Rhs) -> Rhs {
        let mut out = Vec::new();
        seq(r, &mut out);
        Rhs(out)
    }
    let mut out = m.clone();
    for r in &mut out.rules {
        r.rhs = flat(&r.rhs);
    }
    out
}

/// The `eval` mapping as an MTT over fcns-encoded inputs with `@` nodes.
pub fn eval_mtt() -> Mft {
    let mut m = Mft::new();
    let e0 = m.add_state("e0", 1);
    let e = m.add_state("e", 2);
    m.initial = e0;
    let call = |input, args| Rhs::call(e, input, args);
    m.add_stay_rule(e0, Rhs::one(call(Var::X0, vec![Rhs::empty()])));
    m.add_rule(
        e,
        Guard::Symbol(Symbol::element(CONCAT)),
        Rhs::one(call(Var::X1, vec![Rhs::one(call(Var::X2, vec![Rhs::one(RhsItem::Param(1))]))])),
    );
    m.add_rule(
        e,
        Guard::Default,
        Rhs(vec![
            RhsItem::Node { label: OutLabel::Current, children: Rhs::one(call(Var::X1, vec![Rhs::empty()])) },
            call(Var::X2, vec![Rhs::one(RhsItem::Param(1))]),
        ]),
    );
    m.add_rule(e, Guard::Epsilon, Rhs::one(RhsItem::Param(1)));
    m
}

/// A node of a tree-shaped right-hand side read as a binary tree.
#[derive(Debug, Clone)]
enum BNode {
    Eps,
    Node { label: OutLabel, left: usize, right: usize },
    Call { state: StateId, input: Var, args: Vec<usize> },
    Param(usize),
}

/// Preorder arena of the binary reading of `rhs`; node 0 is the root.
/// Children of text nodes are dropped, as evaluation drops them.
fn binary(rhs: &Rhs, current_is_text: bool) -> Result<Vec<BNode>> {
    fn go(items: &[RhsItem], text: bool, a: &mut Vec<BNode>) -> Result<usize> {
        let at = a.len();
        a.push(BNode::Eps);
        let Some((first, rest)) = items.split_first() else { return Ok(at) };
        match first {
            RhsItem::Node { label, children } => {
                let is_text = match label {
                    OutLabel::Fixed(l) => l.is_text(),
                    OutLabel::Current => text,
                };
                let left = if is_text { go(&[], text, a)? } else { go(&children.0, text, a)? };
                let right = go(rest, text, a)?;
                a[at] = BNode::Node { label: label.clone(), left, right };
            }
            RhsItem::Call { state, input, args } if rest.is_empty() => {
                let args = args.iter().map(|r| go(&r.0, text, a)).collect::<Result<_>>()?;
                a[at] = BNode::Call { state: *state, input: *input, args };
            }
            RhsItem::Param(j) if rest.is_empty() => a[at] = BNode::Param(*j),
            _ => return Err(Error::Class("right-hand side is not tree-shaped".into())),
        }
        Ok(at)
    }
    let mut a = Vec::new();
    go(&rhs.0, current_is_text, &mut a)?;
    Ok(a)
}

/// Add to `m1` the rules the product construction needs: a text rule copied
/// from the default rule, and one rule per symbol that `m2` distinguishes
/// but `m1` does not. `%t` is kept; the guard records what it matched.
fn instantiate(m1: &Mft, m2: &Mft) -> Mft {
    let syms: BTreeSet<Symbol> = m2
        .rules
        .iter()
        .filter_map(|r| match &r.guard {
            Guard::Symbol(s) => Some(s.clone()),
            _ => None,
        })
        .collect();
    let mut out = m1.clone();
    let idx = m1.index();
    for (i, rules) in idx.iter().enumerate() {
        let q = StateId(i);
        let default = rules.default.map(|k| m1.rules[k].rhs.clone());
        let text = rules.text.map(|k| m1.rules[k].rhs.clone());
        if let (None, Some(d)) = (&text, &default) {
            out.add_rule(q, Guard::TextNode, d.clone());
        }
        for s in &syms {
            if rules.symbols.contains_key(s) {
                continue;
            }
            let base = if s.text { text.as_ref().or(default.as_ref()) } else { default.as_ref() };
            if let Some(b) = base {
                out.add_rule(q, Guard::Symbol(s.clone()), b.clone());
            }
        }
    }
    out
}

/// The rule of `p` that applies to an `m1` output node labeled `label`,
/// produced by an `m1` rule with guard `guard`.
fn select_for(idx: &[StateRules], p: StateId, label: &OutLabel, guard: &Guard) -> Option<usize> {
    let rules = &idx[p.0];
    match label {
        OutLabel::Fixed(l) => crate::mft::Evaluator::select(idx, p, Some(l)),
        OutLabel::Current => match guard {
            Guard::Symbol(s) => {
                rules.symbols.get(s).copied().or(if s.text { rules.text } else { None }).or(rules.default)
            }
            Guard::TextNode => rules.text.or(rules.default),
            _ => rules.default,
        },
    }
}

fn current_is_text(g: &Guard) -> bool {
    matches!(g, Guard::TextNode) || matches!(g, Guard::Symbol(s) if s.text)
}

/// Rewrite a right-hand side of `m2` for a node: `%t` becomes the node's
/// label, each call `p'(xi, args)` becomes `target(p', xi)(x0, args ++ extra)`.
fn translate(s: &Rhs, label: &OutLabel, target: &dyn Fn(StateId, Var) -> StateId, extra: &[Rhs]) -> Rhs {
    Rhs(s
        .0
        .iter()
        .map(|it| match it {
            RhsItem::Node { label: l, children } => RhsItem::Node {
                label: match l {
                    OutLabel::Current => label.clone(),
                    fixed => fixed.clone(),
                },
                children: translate(children, label, target, extra),
            },
            RhsItem::Call { state, input, args } => {
                let mut a: Vec<Rhs> = args.iter().map(|x| translate(x, label, target, extra)).collect();
                a.extend(extra.iter().cloned());
                RhsItem::Call { state: target(*state, *input), input: Var::X0, args: a }
            }
            RhsItem::Param(j) => RhsItem::Param(*j),
        })
        .collect())
}

struct Namer(HashSet<String>);

impl Namer {
    fn add(&mut self, m: &mut Mft, base: String, rank: usize) -> StateId {
        let mut name = base.clone();
        let mut k = 1;
        while !self.0.insert(name.clone()) {
            k += 1;
            name = format!("{base}'{k}");
        }
        m.add_state(name, rank)
    }
}

fn params(n: usize) -> Vec<Rhs> {
    (1..=n).map(|j| Rhs::one(RhsItem::Param(j))).collect()
}

fn finish(mut out: Mft, m1: &Mft, m2: &Mft) -> Mft {
    out.sigma = m1.sigma.iter().chain(&m2.sigma).cloned().collect();
    out.sigma.extend(out.infer_sigma());
    let mut out = remove_unreachable(&out);
    out.sort_rules();
    out
}

/// `m1` an MTT, `m2` a TT. Pair states carry `n = |Q2|` copies of each
/// parameter: copy `(j-1)n + i` holds `p_i` applied to `y_j`.
fn mtt_then_tt(m1: &Mft, m2: &Mft) -> Result<Mft> {
    let m1 = instantiate(m1, m2);
    let idx2 = m2.index();
    let n = m2.states.len();
    let mut out = Mft::new();
    let mut names = Namer(HashSet::new());
    let pair: Vec<Vec<StateId>> = m1
        .states
        .iter()
        .map(|q| {
            m2.states
                .iter()
                .map(|p| names.add(&mut out, format!("{}~{}", q.name, p.name), 1 + q.params() * n))
                .collect()
        })
        .collect();
    out.initial = pair[m1.initial.0][m2.initial.0];
    for (ri, r) in m1.rules.iter().enumerate() {
        let mq = m1.rank(r.state) - 1;
        let rank = 1 + mq * n;
        let ys = params(mq * n);
        let tree = binary(&r.rhs, current_is_text(&r.guard))?;
        let qname = &m1.state(r.state).name;
        let ns: Vec<Vec<StateId>> = (0..tree.len())
            .map(|u| {
                m2.states.iter().map(|p| names.add(&mut out, format!("{qname}~r{ri}u{u}~{}", p.name), rank)).collect()
            })
            .collect();
        for p in 0..n {
            out.add_rule(pair[r.state.0][p], r.guard.clone(), Rhs::one(Rhs::call(ns[0][p], Var::X0, ys.clone())));
        }
        for (u, node) in tree.iter().enumerate() {
            for (i, p) in (0..n).map(|i| (i, StateId(i))) {
                let rhs = match node {
                    BNode::Param(j) => Rhs::one(RhsItem::Param((j - 1) * n + i + 1)),
                    BNode::Call { state, input, args } => {
                        let a = args
                            .iter()
                            .flat_map(|&k| (0..n).map(move |l| (k, l)))
                            .map(|(k, l)| Rhs::one(Rhs::call(ns[k][l], Var::X0, ys.clone())))
                            .collect();
                        Rhs::one(Rhs::call(pair[state.0][i], *input, a))
                    }
                    BNode::Eps => {
                        let k = idx2[p.0].epsilon.ok_or_else(|| missing(m2, p, "eps"))?;
                        let target = |p2: StateId, _: Var| ns[u][p2.0];
                        translate(&m2.rules[k].rhs, &OutLabel::Current, &target, &ys)
                    }
                    BNode::Node { label, left, right } => {
                        let k = select_for(&idx2, p, label, &r.guard).ok_or_else(|| missing(m2, p, "default"))?;
                        let target = |p2: StateId, v: Var| match v {
                            Var::X0 => ns[u][p2.0],
                            Var::X1 => ns[*left][p2.0],
                            Var::X2 => ns[*right][p2.0],
                        };
                        translate(&m2.rules[k].rhs, label, &target, &ys)
                    }
                };
                add_node_rules(&mut out, ns[u][i], &r.guard, rhs);
            }
        }
    }
    Ok(finish(out, &m1, m2))
}

/// `m1` a TT, `m2` an MTT. States keep the rank of their `m2` component.
fn tt_then_mtt(m1: &Mft, m2: &Mft) -> Result<Mft> {
    let m1 = instantiate(m1, m2);
    let idx2 = m2.index();
    let n = m2.states.len();
    let mut out = Mft::new();
    let mut names = Namer(HashSet::new());
    let pair: Vec<Vec<StateId>> = m1
        .states
        .iter()
        .map(|q| m2.states.iter().map(|p| names.add(&mut out, format!("{}~{}", q.name, p.name), p.rank)).collect())
        .collect();
    out.initial = pair[m1.initial.0][m2.initial.0];
    for (ri, r) in m1.rules.iter().enumerate() {
        let tree = binary(&r.rhs, current_is_text(&r.guard))?;
        let qname = &m1.state(r.state).name;
        let ns: Vec<Vec<StateId>> = (0..tree.len())
            .map(|u| {
                m2.states.iter().map(|p| names.add(&mut out, format!("{qname}~r{ri}u{u}~{}", p.name), p.rank)).collect()
            })
            .collect();
        for (p, st) in m2.states.iter().enumerate() {
            let ys = params(st.params());
            out.add_rule(pair[r.state.0][p], r.guard.clone(), Rhs::one(Rhs::call(ns[0][p], Var::X0, ys)));
        }
        for (u, node) in tree.iter().enumerate() {
            for p in (0..n).map(StateId) {
                let ys = params(m2.states[p.0].params());
                let rhs = match node {
                    BNode::Param(_) => return Err(Error::Class("first operand must be a TT".into())),
                    BNode::Call { state, input, .. } => Rhs::one(Rhs::call(pair[state.0][p.0], *input, ys)),
                    BNode::Eps => {
                        let k = idx2[p.0].epsilon.ok_or_else(|| missing(m2, p, "eps"))?;
                        let target = |p2: StateId, _: Var| ns[u][p2.0];
                        translate(&m2.rules[k].rhs, &OutLabel::Current, &target, &[])
                    }
                    BNode::Node { label, left, right } => {
                        let k = select_for(&idx2, p, label, &r.guard).ok_or_else(|| missing(m2, p, "default"))?;
                        let target = |p2: StateId, v: Var| match v {
                            Var::X0 => ns[u][p2.0],
                            Var::X1 => ns[*left][p2.0],
                            Var::X2 => ns[*right][p2.0],
                        };
                        translate(&m2.rules[k].rhs, label, &target, &[])
                    }
                };
                add_node_rules(&mut out, ns[u][p.0], &r.guard, rhs);
            }
        }
    }
    Ok(finish(out, &m1, m2))
}

/// A node state is only entered right after its rule matched, so one rule
/// carries the translation and the other branch is never taken.
fn add_node_rules(out: &mut Mft, s: StateId, guard: &Guard, rhs: Rhs) {
    if *guard == Guard::Epsilon {
        out.add_rule(s, Guard::Default, Rhs::empty());
        out.add_rule(s, Guard::Epsilon, rhs);
    } else {
        out.add_rule(s, Guard::Default, rhs);
        out.add_rule(s, Guard::Epsilon, Rhs::empty());
    }
}

fn missing(m: &Mft, p: StateId, what: &str) -> Error {
    Error::Invalid(vec![format!("state `{}` has no {what} rule", m.state(p).name)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::{flatten_concat, Forest};
    use crate::mft::{copy_transducer, evaluate, parse_mft, print_mft, validate};
    use crate::term::{parse_term, print_term};

    fn run(m: &Mft, f: &Forest) -> Forest {
        evaluate(m, f).unwrap().normalize()
    }

    fn pipeline(m1: &Mft, m2: &Mft, f: &Forest) -> Forest {
        run(m2, &evaluate(m1, f).unwrap())
    }

    fn height(rhs: &Rhs) -> usize {
        fn h(a: &[BNode], u: usize) -> usize {
            match &a[u] {
                BNode::Node { left, right, .. } => 1 + h(a, *left).max(h(a, *right)),
                BNode::Call { args, .. } => args.iter().map(|&k| h(a, k)).max().unwrap_or(0),
                _ => 0,
            }
        }
        h(&binary(rhs, false).unwrap(), 0)
    }

    const B4: &str = "
        q0(a(x1)x2) -> b(b(b(b(q0(x1)))))
        q0(%t(x1)x2) -> eps
        q0(eps) -> eps
    ";
    const C2: &str = "
        p0(b(x1)x2) -> c(p0(x1)) p0(x1)
        p0(%t(x1)x2) -> eps
        p0(eps) -> eps
    ";
    const DOUBLING: &str = "
        q(a(x1)x2) -> q(x2) q(x2)
        q(%t(x1)x2) -> eps
        q(eps) -> a()
    ";

    #[test]
    fn stay_rules_avoid_exponential_rhs() {
        let (m1, m2) = (parse_mft(B4).unwrap(), parse_mft(C2).unwrap());
        let (m, rep) = compose(&m1, &m2, Mode::TtTt).unwrap();
        assert!(validate(&m).is_empty(), "{:?}", validate(&m));
        assert!(rep.size < 2 * rep.bound(), "{rep}");
        assert!(m.rules.iter().all(|r| height(&r.rhs) < 5));
        for f in ["a()", "a(a())", "b() a(c())"] {
            let f = parse_term(f).unwrap();
            assert_eq!(run(&m, &f), pipeline(&m1, &m2, &f));
        }
        let out = run(&m, &parse_term("a(a())").unwrap());
        assert_eq!(out.node_count(), (1 << 8) - 1);
    }

    #[test]
    fn doubling_composed_with_itself() {
        let d = parse_mft(DOUBLING).unwrap();
        let f = parse_term("a() a()").unwrap();
        assert_eq!(run(&d, &f).len(), 4);
        let (m, rep) = compose(&d, &d, Mode::FtFt).unwrap();
        assert!(validate(&m).is_empty());
        let out = run(&m, &f);
        assert_eq!(out.len(), 16);
        assert!(out.0.iter().all(|t| &*t.label.name == "a" && t.children.is_empty()));
        assert_eq!(out, pipeline(&d, &d, &f));
        assert_eq!(rep.class, TransducerClass::Mft);
    }

    #[test]
    fn decompose_example() {
        let m = parse_mft("q0(%) -> q(x0, eps)\nq(%t(x1)x2, y1) -> q2(x1) y1 b()\nq(eps, y1) -> y1\nq2(%) -> eps")
            .unwrap();
        let d = decompose_eval(&m);
        let text = print_mft(&d);
        assert!(text.contains("-> @(q2(x1)) @(y1) b()"), "{text}");
        assert_eq!(recompose_eval(&d), m);
        let f = parse_term("a(b()) c()").unwrap();
        assert_eq!(flatten_concat(&evaluate(&d, &f).unwrap()).normalize(), run(&m, &f));
    }

    #[test]
    fn eval_mtt_interprets_concat() {
        let e = eval_mtt();
        assert!(validate(&e).is_empty());
        assert_eq!(classify(&e), TransducerClass::Mtt);
        let f = parse_term("@(a() @(b(c()))) d(@(e()))").unwrap();
        assert_eq!(print_term(&run(&e, &f)), "a() b(c()) d(e())");
    }

    #[test]
    fn identity_operands() {
        let id = copy_transducer();
        let m1 = parse_mft(B4).unwrap();
        let d = parse_mft(DOUBLING).unwrap();
        let f = parse_term("a(a() x(#\"t\")) a()").unwrap();
        for (a, b, mode) in [
            (&id, &m1, Mode::TtTt),
            (&m1, &id, Mode::TtTt),
            (&id, &d, Mode::TtFt),
            (&d, &id, Mode::FtTt),
            (&id, &m1, Mode::MttFt),
        ] {
            let (m, _) = compose(a, b, mode).unwrap();
            assert!(validate(&m).is_empty(), "{mode}");
            assert_eq!(run(&m, &f), pipeline(a, b, &f), "{mode}");
        }
    }

    #[test]
    fn parameter_copies() {
        let m1 = parse_mft("q0(%) -> q(x0, a())\nq(%t(x1)x2, y1) -> %t(q(x1, y1)) q(x2, b(y1))\nq(eps, y1) -> y1")
            .unwrap();
        let m2 = parse_mft("p(a(x1)x2) -> z(r(x1)) p(x2)\np(%t(x1)x2) -> %t(p(x1)) p(x2)\np(eps) -> eps\nr(%) -> eps")
            .unwrap();
        let m = compose_mtt_tt(&m1, &m2).unwrap();
        let q = m.find_state("q~p").unwrap();
        assert_eq!(m.rank(q), 1 + 2);
        let f = parse_term("c(a()) a(d())").unwrap();
        assert_eq!(run(&m, &f), pipeline(&m1, &m2, &f));
    }

    #[test]
    fn class_mismatch_is_reported() {
        let d = parse_mft(DOUBLING).unwrap();
        assert!(matches!(compose(&d, &d, Mode::TtTt), Err(Error::Class(_))));
    }
}
