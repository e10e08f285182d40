use std::collections::HashSet;
use std::fmt;

use super::{Guard, Mft, OutLabel, Rhs, RhsItem, StateId, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TransducerClass {
    Tt,
    Ft,
    Mtt,
    Mft,
}

impl fmt::Display for TransducerClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransducerClass::Tt => "TT",
            TransducerClass::Ft => "FT",
            TransducerClass::Mtt => "MTT",
            TransducerClass::Mft => "MFT",
        })
    }
}

/// Check every structural constraint; an empty list means valid.
pub fn validate(m: &Mft) -> Vec<String> {
    let mut diags = Vec::new();
    if m.initial.0 >= m.states.len() {
        diags.push("initial state does not exist".to_string());
        return diags;
    }
    if m.rank(m.initial) != 1 {
        diags.push(format!("initial state `{}` must have rank 1", m.state(m.initial).name));
    }
    let mut names = HashSet::new();
    for s in &m.states {
        if s.rank == 0 {
            diags.push(format!("state `{}` has rank 0", s.name));
        }
        if !names.insert(s.name.as_str()) {
            diags.push(format!("duplicate state name `{}`", s.name));
        }
    }

    let mut seen = HashSet::new();
    let mut eps = vec![0usize; m.states.len()];
    let mut default = vec![0usize; m.states.len()];
    for r in &m.rules {
        let Some(state) = m.states.get(r.state.0) else {
            diags.push(format!("rule for unknown state #{}", r.state.0));
            continue;
        };
        let at = format!("{}[{}]", state.name, guard_name(&r.guard));
        match &r.guard {
            Guard::Epsilon => eps[r.state.0] += 1,
            Guard::Default => default[r.state.0] += 1,
            Guard::Symbol(s) => {
                if !m.sigma.contains(s) {
                    diags.push(format!("{at}: symbol {s} not in sigma"));
                }
                if !seen.insert((r.state, r.guard.clone())) {
                    diags.push(format!("{at}: duplicate rule"));
                }
            }
            Guard::TextNode => {
                if !seen.insert((r.state, r.guard.clone())) {
                    diags.push(format!("{at}: duplicate rule"));
                }
            }
        }
        check_rhs(m, &r.rhs, state.rank - 1, &r.guard, &at, &mut diags);
    }
    for (i, s) in m.states.iter().enumerate() {
        match eps[i] {
            1 => {}
            0 => diags.push(format!("{}: missing eps rule", s.name)),
            _ => diags.push(format!("{}: more than one eps rule", s.name)),
        }
        match default[i] {
            1 => {}
            0 => diags.push(format!("{}: missing default rule", s.name)),
            _ => diags.push(format!("{}: more than one default rule", s.name)),
        }
    }
    diags
}

fn guard_name(g: &Guard) -> String {
    match g {
        Guard::Symbol(s) => s.to_string(),
        Guard::TextNode => "%text".into(),
        Guard::Default => "%t".into(),
        Guard::Epsilon => "eps".into(),
    }
}

fn check_rhs(m: &Mft, rhs: &Rhs, params: usize, guard: &Guard, at: &str, diags: &mut Vec<String>) {
    rhs.visit(&mut |it| match it {
        RhsItem::Param(j) => {
            if *j == 0 || *j > params {
                diags.push(format!("{at}: parameter y{j} out of range (state has {params})"));
            }
        }
        RhsItem::Call { state, input, args } => match m.states.get(state.0) {
            None => diags.push(format!("{at}: call to unknown state #{}", state.0)),
            Some(s) => {
                if args.len() != s.rank - 1 {
                    diags.push(format!(
                        "{at}: call to `{}` has {} arguments, rank needs {}",
                        s.name,
                        args.len(),
                        s.rank - 1
                    ));
                }
                if *guard == Guard::Epsilon && *input != Var::X0 {
                    diags.push(format!("{at}: eps rule may only use x0"));
                }
            }
        },
        RhsItem::Node { label: OutLabel::Current, .. } if *guard == Guard::Epsilon => {
            diags.push(format!("{at}: %t output in eps rule"));
        }
        RhsItem::Node { label: OutLabel::Fixed(l), .. } if l.name.is_empty() && !l.is_text() => {
            diags.push(format!("{at}: empty output label"));
        }
        _ => {}
    });
}

/// Calls and parameters only in tail position of every sequence, i.e. the
/// right-hand side denotes a binary tree under the fcns reading.
pub fn is_tree_shaped(rhs: &Rhs) -> bool {
    let n = rhs.0.len();
    rhs.0.iter().enumerate().all(|(i, it)| match it {
        RhsItem::Node { children, .. } => is_tree_shaped(children),
        RhsItem::Param(_) => i + 1 == n,
        RhsItem::Call { args, .. } => i + 1 == n && args.iter().all(is_tree_shaped),
    })
}

pub fn classify(m: &Mft) -> TransducerClass {
    let no_params = m.states.iter().all(|s| s.rank == 1);
    let tree = m.rules.iter().all(|r| is_tree_shaped(&r.rhs));
    match (no_params, tree) {
        (true, true) => TransducerClass::Tt,
        (true, false) => TransducerClass::Ft,
        (false, true) => TransducerClass::Mtt,
        (false, false) => TransducerClass::Mft,
    }
}

fn lhs_size(m: &Mft, state: StateId, guard: &Guard) -> usize {
    let params = m.rank(state) - 1;
    match guard {
        // q, ε, y1..ym
        Guard::Epsilon => 2 + params,
        // q, σ, x1, x2, y1..ym
        _ => 4 + params,
    }
}

/// `|Σ|` plus the node counts of all left- and right-hand sides.
pub fn size(m: &Mft) -> usize {
    m.sigma.len()
        + m.rules
            .iter()
            .map(|r| lhs_size(m, r.state, &r.guard) + r.rhs.node_count())
            .sum::<usize>()
}
