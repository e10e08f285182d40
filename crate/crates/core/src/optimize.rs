//! Parameter reduction: unused and constant parameters, stay-move
//! inlining and unreachable-state removal, iterated to a fixpoint.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::mft::{Guard, Mft, Rhs, RhsItem, StateId, Var};

/// `(state, i)`: the `i`-th parameter (1-based) of a state.
pub type ParamId = (StateId, usize);

/// Largest rhs (in nodes) inlined at more than one call site.
pub const INLINE_LIMIT: usize = 32;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OptReport {
    pub states_before: usize,
    pub states_after: usize,
    pub params_before: usize,
    pub params_after: usize,
    pub rules_before: usize,
    pub rules_after: usize,
    pub rounds: usize,
    pub unreachable_removed: usize,
    pub unused_removed: usize,
    pub constant_removed: usize,
    pub inlined: usize,
    pub warnings: Vec<String>,
}

impl fmt::Display for OptReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "states: {} -> {}", self.states_before, self.states_after)?;
        writeln!(f, "params: {} -> {}", self.params_before, self.params_after)?;
        writeln!(f, "rules: {} -> {}", self.rules_before, self.rules_after)?;
        writeln!(f, "rounds: {}", self.rounds)?;
        writeln!(f, "unreachable states removed: {}", self.unreachable_removed)?;
        writeln!(f, "unused params removed: {}", self.unused_removed)?;
        writeln!(f, "constant params removed: {}", self.constant_removed)?;
        write!(f, "stay states inlined: {}", self.inlined)?;
        for w in &self.warnings {
            write!(f, "\nwarning: {w}")?;
        }
        Ok(())
    }
}

/// Run all four rewrites until nothing changes.
pub fn optimize(m: &Mft) -> Mft {
    optimize_with_report(m).0
}

pub fn optimize_with_report(m: &Mft) -> (Mft, OptReport) {
    let mut rep = OptReport {
        states_before: m.states.len(),
        params_before: m.param_count(),
        rules_before: m.rules.len(),
        ..OptReport::default()
    };
    let mut cur = m.clone();
    cur.sort_rules();
    loop {
        rep.rounds += 1;
        let start = cur.clone();
        let n = cur.states.len();
        cur = remove_unreachable(&cur);
        rep.unreachable_removed += n - cur.states.len();
        let p = cur.param_count();
        cur = remove_unused_params(&cur);
        rep.unused_removed += p - cur.param_count();
        let p = cur.param_count();
        cur = constant_params(&cur);
        rep.constant_removed += p - cur.param_count();
        let (next, inlined, warnings) = inline_stay_states(&cur);
        cur = next;
        rep.inlined += inlined;
        for w in warnings {
            if !rep.warnings.contains(&w) {
                rep.warnings.push(w);
            }
        }
        cur.sort_rules();
        if cur == start {
            break;
        }
    }
    rep.states_after = cur.states.len();
    rep.params_after = cur.param_count();
    rep.rules_after = cur.rules.len();
    (cur, rep)
}

fn calls_in<'a>(rhs: &'a Rhs, out: &mut Vec<(StateId, Var, &'a [Rhs])>) {
    rhs.visit(&mut |it| {
        if let RhsItem::Call { state, input, args } = it {
            out.push((*state, *input, args));
        }
    });
}

/// Parameters occurring in `e` outside every call argument.
pub fn bare_params(e: &Rhs) -> BTreeSet<usize> {
    fn go(e: &Rhs, out: &mut BTreeSet<usize>) {
        for it in &e.0 {
            match it {
                RhsItem::Param(j) => {
                    out.insert(*j);
                }
                RhsItem::Node { children, .. } => go(children, out),
                RhsItem::Call { .. } => {}
            }
        }
    }
    let mut out = BTreeSet::new();
    go(e, &mut out);
    out
}

/// The necessary parameters: least set containing bare rhs occurrences and
/// closed under flow into necessary arguments.
pub fn necessary_params(m: &Mft) -> BTreeSet<ParamId> {
    let mut s: BTreeSet<ParamId> = BTreeSet::new();
    for r in &m.rules {
        for j in bare_params(&r.rhs) {
            s.insert((r.state, j));
        }
    }
    loop {
        let mut added = false;
        for r in &m.rules {
            let mut calls = Vec::new();
            calls_in(&r.rhs, &mut calls);
            for (callee, _, args) in calls {
                for (k, e) in args.iter().enumerate() {
                    if !s.contains(&(callee, k + 1)) {
                        continue;
                    }
                    for j in bare_params(e) {
                        added |= s.insert((r.state, j));
                    }
                }
            }
        }
        if !added {
            return s;
        }
    }
}

/// Drop the parameters in `drop` and replace those in `fill` by constants.
/// Arguments at removed positions vanish from every call.
fn rewrite_params(m: &Mft, drop: &BTreeSet<ParamId>, fill: &BTreeMap<ParamId, Rhs>) -> Mft {
    let gone = |q: StateId, k: usize| drop.contains(&(q, k)) || fill.contains_key(&(q, k));
    let mut out = m.clone();
    for (i, st) in out.states.iter_mut().enumerate() {
        let q = StateId(i);
        st.rank = 1 + (1..st.rank).filter(|&k| !gone(q, k)).count();
    }
    for r in &mut out.rules {
        let q = r.state;
        let mut next = 0;
        let subst: Vec<Rhs> = (1..m.rank(q))
            .map(|k| {
                if let Some(c) = fill.get(&(q, k)) {
                    c.clone()
                } else if drop.contains(&(q, k)) {
                    Rhs::empty()
                } else {
                    next += 1;
                    Rhs::one(RhsItem::Param(next))
                }
            })
            .collect();
        r.rhs.visit_mut(&mut |it| {
            if let RhsItem::Call { state, args, .. } = it {
                let old = std::mem::take(args);
                *args = old
                    .into_iter()
                    .enumerate()
                    .filter(|(k, _)| !gone(*state, k + 1))
                    .map(|(_, a)| a)
                    .collect();
            }
        });
        r.rhs = r.rhs.subst_params(&subst);
    }
    out
}

/// Remove parameters that never reach the output.
pub fn remove_unused_params(m: &Mft) -> Mft {
    let s = necessary_params(m);
    let drop: BTreeSet<ParamId> = (0..m.states.len())
        .flat_map(|i| (1..m.states[i].rank).map(move |k| (StateId(i), k)))
        .filter(|p| !s.contains(p))
        .collect();
    if drop.is_empty() {
        return m.clone();
    }
    rewrite_params(m, &drop, &BTreeMap::new())
}

/// Parameters instantiated with one ground forest at every call site, or
/// passed through unchanged by their own state.
pub fn constant_params(m: &Mft) -> Mft {
    // None: not constant; Some(None): only self-passing seen so far
    let mut seen: BTreeMap<ParamId, Option<Option<Rhs>>> = BTreeMap::new();
    for (i, st) in m.states.iter().enumerate() {
        if StateId(i) == m.initial {
            continue;
        }
        for k in 1..st.rank {
            seen.insert((StateId(i), k), Some(None));
        }
    }
    for r in &m.rules {
        let mut calls = Vec::new();
        calls_in(&r.rhs, &mut calls);
        for (callee, _, args) in calls {
            for (k, e) in args.iter().enumerate() {
                let Some(entry) = seen.get_mut(&(callee, k + 1)) else { continue };
                let Some(cur) = entry else { continue };
                let self_pass = callee == r.state && e.0 == [RhsItem::Param(k + 1)];
                if self_pass {
                    continue;
                }
                if !e.is_ground() {
                    *entry = None;
                    continue;
                }
                match cur {
                    None => *cur = Some(e.clone()),
                    Some(c) if c == e => {}
                    Some(_) => *entry = None,
                }
            }
        }
    }
    let fill: BTreeMap<ParamId, Rhs> =
        seen.into_iter().filter_map(|(p, v)| v.flatten().map(|c| (p, c))).collect();
    if fill.is_empty() {
        return m.clone();
    }
    rewrite_params(m, &BTreeSet::new(), &fill)
}

/// Delete states not reachable from the initial state through calls.
pub fn remove_unreachable(m: &Mft) -> Mft {
    let keep = reachable(m);
    if keep.iter().all(|&k| k) {
        return m.clone();
    }
    m.retain_states(&keep)
}

pub fn reachable(m: &Mft) -> Vec<bool> {
    let mut succ = vec![BTreeSet::new(); m.states.len()];
    for r in &m.rules {
        let mut calls = Vec::new();
        calls_in(&r.rhs, &mut calls);
        succ[r.state.0].extend(calls.into_iter().map(|c| c.0 .0));
    }
    let mut seen = vec![false; m.states.len()];
    let mut queue = VecDeque::from([m.initial.0]);
    seen[m.initial.0] = true;
    while let Some(q) = queue.pop_front() {
        for &n in &succ[q] {
            if !seen[n] {
                seen[n] = true;
                queue.push_back(n);
            }
        }
    }
    seen
}

/// The rhs of `q` if `q` is defined by a single `q(%, ..) -> f` rule pair
/// whose calls all read `x0`.
pub fn stay_rhs(m: &Mft, q: StateId) -> Option<&Rhs> {
    let mut default = None;
    let mut eps = None;
    for r in m.rules_of(q) {
        match r.guard {
            Guard::Default if default.is_none() => default = Some(&r.rhs),
            Guard::Epsilon if eps.is_none() => eps = Some(&r.rhs),
            _ => return None,
        }
    }
    let (d, e) = (default?, eps?);
    if d != e || d.uses_current_label() {
        return None;
    }
    let v = d.vars();
    (!v[1] && !v[2]).then_some(d)
}

fn call_sites(m: &Mft, q: StateId) -> usize {
    let mut n = 0;
    for r in &m.rules {
        r.rhs.visit(&mut |it| {
            if matches!(it, RhsItem::Call { state, .. } if *state == q) {
                n += 1;
            }
        });
    }
    n
}

fn calls_state(rhs: &Rhs, q: StateId) -> bool {
    let mut found = false;
    rhs.visit(&mut |it| {
        if matches!(it, RhsItem::Call { state, .. } if *state == q) {
            found = true;
        }
    });
    found
}

/// Replace every call `q(xi, e1..en)` by `f[x0 := xi, yj := ej]`.
fn inline_calls(rhs: &Rhs, q: StateId, f: &Rhs) -> Rhs {
    let mut out = Vec::with_capacity(rhs.0.len());
    for it in &rhs.0 {
        match it {
            RhsItem::Call { state, input, args } => {
                let args: Vec<Rhs> = args.iter().map(|a| inline_calls(a, q, f)).collect();
                if *state == q {
                    out.extend(f.subst_x0(*input).subst_params(&args).0);
                } else {
                    out.push(RhsItem::Call { state: *state, input: *input, args });
                }
            }
            RhsItem::Node { label, children } => out.push(RhsItem::Node {
                label: label.clone(),
                children: inline_calls(children, q, f),
            }),
            RhsItem::Param(j) => out.push(RhsItem::Param(*j)),
        }
    }
    Rhs(out)
}

/// Inline stay states one at a time. Returns the rewritten transducer, the
/// number of states inlined and warnings for skipped cycles.
pub fn inline_stay_states(m: &Mft) -> (Mft, usize, Vec<String>) {
    let mut cur = m.clone();
    let mut inlined = 0;
    let mut warnings = Vec::new();
    let mut i = 0;
    while i < cur.states.len() {
        let q = StateId(i);
        i += 1;
        if q == cur.initial {
            continue;
        }
        let Some(f) = stay_rhs(&cur, q).cloned() else { continue };
        if calls_state(&f, q) {
            let w = format!("stay state `{}` calls itself; not inlined", cur.state(q).name);
            if !warnings.contains(&w) {
                warnings.push(w);
            }
            continue;
        }
        let sites = call_sites(&cur, q);
        if sites > 1 && f.node_count() > INLINE_LIMIT {
            continue;
        }
        for r in &mut cur.rules {
            if r.state != q && calls_state(&r.rhs, q) {
                r.rhs = inline_calls(&r.rhs, q, &f);
            }
        }
        let keep: Vec<bool> = (0..cur.states.len()).map(|k| k != q.0).collect();
        cur = cur.retain_states(&keep);
        inlined += 1;
        i = 0;
    }
    (cur, inlined, warnings)
}

/// Stay-move removal on its own.
pub fn remove_stay_moves(m: &Mft) -> Mft {
    inline_stay_states(m).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mft::{evaluate, parse_mft, print_mft, validate};
    use crate::term::parse_term;

    fn rules_of(m: &Mft, q: &str) -> Vec<String> {
        let text = print_mft(m);
        let prefix = format!("{q}(");
        text.lines().filter(|l| l.starts_with(&prefix)).map(str::to_string).collect()
    }

    const UNUSED: &str = "
        q0(%) -> q(x0, a(), b())
        q(sigma(x1)x2, y1, y2) -> delta(qq(x2, y1, y2))
        q(%t(x1)x2, y1, y2) -> %t(qq(x2, delta(y2), sigma(y2)))
        q(eps, y1, y2) -> sigma(y2)
        qq(%t(x1)x2, y1, y2) -> q(x1, eps, y1)
        qq(eps, y1, y2) -> eps
    ";

    #[test]
    fn unused_example() {
        let m = parse_mft(UNUSED).unwrap();
        let q = m.find_state("q").unwrap();
        let qq = m.find_state("qq").unwrap();
        let s = necessary_params(&m);
        // y1 of q flows through y1 of qq into y2 of q, which is output
        assert_eq!(s, BTreeSet::from([(q, 1), (q, 2), (qq, 1)]));
        let witness = parse_term("sigma() b()").unwrap();
        assert_eq!(crate::term::print_term(&evaluate(&m, &witness).unwrap()), "delta(sigma(a()))");
        let r = remove_unused_params(&m);
        assert_eq!(r.rank(q), 3);
        assert_eq!(r.rank(qq), 2);
        assert!(validate(&r).is_empty());
        assert_eq!(rules_of(&r, "qq")[0], "qq(%t(x1)x2, y1) -> q(x1, eps, y1)");
        let f = parse_term("sigma(a()) b() sigma()").unwrap();
        assert_eq!(evaluate(&m, &f).unwrap(), evaluate(&r, &f).unwrap());
    }

    #[test]
    fn constant_example() {
        let m = parse_mft(
            "
            q0(%) -> qq(x0, eps)
            q(sigma(x1)x2, y1, y2) -> q(x1, eps, y2) delta(qq(x2, y2))
            q(%t(x1)x2, y1, y2) -> q(x1, y1, y2) %t(qq(x2, delta(y2)))
            q(eps, y1, y2) -> y1
            qq(%t(x1)x2, y1) -> delta(q(x1, eps, y1))
            qq(eps, y1) -> eps
            ",
        )
        .unwrap();
        let r = constant_params(&m);
        assert!(rules_of(&r, "q").contains(&"q(eps, y1) -> eps".to_string()));
        assert_eq!(r.rank(r.find_state("qq").unwrap()), 2);
        let f = parse_term("a(sigma(b() c()) d()) sigma(e())").unwrap();
        assert_eq!(evaluate(&m, &f).unwrap(), evaluate(&r, &f).unwrap());
    }

    #[test]
    fn stay_example() {
        let m = parse_mft(
            "
            q0(%t(x1)x2) -> q(x1, a(), b()) q0(x2)
            q0(eps) -> eps
            q(%, y1, y2) -> qq(x0) y1
            qq(%t(x1)x2) -> %t() qq(x2)
            qq(eps) -> eps
            ",
        )
        .unwrap();
        let r = remove_stay_moves(&m);
        assert!(r.find_state("q").is_none());
        assert_eq!(rules_of(&r, "q0")[0], "q0(%t(x1)x2) -> qq(x1) a() q0(x2)");
    }

    #[test]
    fn symbol_rule_blocks_inlining() {
        let m = parse_mft(
            "
            q0(%) -> q(x0)
            q(%) -> a()
            q(b(x1)x2) -> b()
            ",
        )
        .unwrap();
        assert!(remove_stay_moves(&m).find_state("q").is_some());
    }

    #[test]
    fn orphan_is_removed() {
        let mut m = parse_mft(UNUSED).unwrap();
        let orphan = m.add_state("orphan", 1);
        m.add_stay_rule(orphan, Rhs::empty());
        let r = remove_unreachable(&m);
        assert!(r.find_state("orphan").is_none());
        assert_eq!(r.states.len(), 3);
        assert_eq!(remove_unreachable(&r), r);
    }

    #[test]
    fn self_calling_stay_state_is_kept() {
        let m = parse_mft("q0(%) -> q(x0)\nq(%) -> a() q(x0)").unwrap();
        let (r, n, w) = inline_stay_states(&m);
        assert_eq!(n, 0);
        assert_eq!(w.len(), 1);
        assert_eq!(r, m);
    }
}
