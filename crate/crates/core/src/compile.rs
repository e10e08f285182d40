//! Translation of MinXQuery programs into macro forest transducers.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::forest::Label;
use crate::mft::{Guard, Mft, OutLabel, Rhs, RhsItem, StateId, Symbol, Var};
use crate::path::{classes_of, matched, root_sets, successors, Class, PStep, StepSet, Test};
use crate::query::{check_scoping, NodeTest, Path, Predicate, Query, Step, INPUT};

/// Compile a well-scoped program. The result computes the same forest as
/// [`crate::query::interpret`].
pub fn compile(q: &Query) -> Result<Mft> {
    let diags = check_scoping(q);
    if !diags.is_empty() {
        return Err(Error::Scope(diags));
    }
    let mut c = Compiler::new();
    let q0 = c.m.initial;
    let q0p = c.fresh("query", 2);
    let copy = c.copy;
    c.m.add_stay_rule(
        q0,
        Rhs::one(Rhs::call(q0p, Var::X0, vec![Rhs::one(Rhs::call(copy, Var::X0, vec![]))])),
    );
    c.translate(q, &[INPUT.to_string()], q0p)?;
    c.m.sigma = c.m.infer_sigma();
    c.m.sort_rules();
    Ok(c.m)
}

fn ys(m: usize) -> Vec<Rhs> {
    (1..=m).map(|j| Rhs::one(RhsItem::Param(j))).collect()
}

fn call(state: StateId, input: Var, args: Vec<Rhs>) -> Rhs {
    Rhs::one(Rhs::call(state, input, args))
}

fn concat(parts: impl IntoIterator<Item = Rhs>) -> Rhs {
    Rhs(parts.into_iter().flat_map(|r| r.0).collect())
}

/// A step after predicate compilation: its automaton step plus the
/// predicate states guarding it, each with a negation flag.
struct GStep {
    step: PStep,
    guards: Vec<(StateId, bool)>,
}

struct Compiler {
    m: Mft,
    copy: StateId,
    counter: usize,
}

impl Compiler {
    fn new() -> Self {
        let mut m = Mft::new();
        let q0 = m.add_state("q0", 1);
        m.initial = q0;
        let copy = m.add_state("q_copy", 1);
        m.add_rule(
            copy,
            Guard::Default,
            concat([
                Rhs::one(RhsItem::Node { label: OutLabel::Current, children: call(copy, Var::X1, vec![]) }),
                call(copy, Var::X2, vec![]),
            ]),
        );
        m.add_rule(copy, Guard::Epsilon, Rhs::empty());
        Compiler { m, copy, counter: 1 }
    }

    fn fresh(&mut self, construct: &str, rank: usize) -> StateId {
        let name = format!("q{}_{construct}", self.counter);
        self.counter += 1;
        self.m.add_state(name, rank)
    }

    fn translate(&mut self, e: &Query, rho: &[String], q: StateId) -> Result<()> {
        let m = rho.len();
        match e {
            Query::Seq(items) => {
                let mut rhs = Rhs::empty();
                for item in items {
                    let qi = self.fresh("seq", m + 1);
                    rhs.0.push(Rhs::call(qi, Var::X0, ys(m)));
                    self.translate(item, rho, qi)?;
                }
                self.m.add_stay_rule(q, rhs);
            }
            Query::Element { name, children } => {
                let content = match children.len() {
                    0 => Rhs::empty(),
                    _ => {
                        let qc = self.fresh("content", m + 1);
                        if children.len() == 1 {
                            self.translate(&children[0], rho, qc)?;
                        } else {
                            self.translate(&Query::Seq(children.clone()), rho, qc)?;
                        }
                        call(qc, Var::X0, ys(m))
                    }
                };
                self.m.add_stay_rule(q, Rhs::one(Rhs::node(Label::element(name.as_str()), content)));
            }
            Query::Str(s) => {
                self.m.add_stay_rule(q, Rhs::one(Rhs::node(Label::text(s.as_str()), Rhs::empty())));
            }
            Query::Path(p) if p.is_var() => {
                let j = var_index(rho, &p.start)?;
                self.m.add_stay_rule(q, Rhs::one(RhsItem::Param(j)));
            }
            Query::Path(p) => {
                let qp = self.fresh("pathexpr", m + 2);
                self.m.add_stay_rule(qp, Rhs::one(RhsItem::Param(m + 1)));
                self.paths(p, q, qp, m)?;
            }
            Query::For { var, path, body } => {
                if path.is_var() {
                    return Err(Error::Unsupported(format!(
                        "for clause over the bare variable `${}` needs at least one step",
                        path.start
                    )));
                }
                let qf = self.fresh("for", m + 2);
                let mut rho2 = rho.to_vec();
                rho2.push(var.clone());
                self.translate(body, &rho2, qf)?;
                self.paths(path, q, qf, m)?;
            }
            Query::Let { var, bound, body } => {
                let qv = self.fresh("letval", m + 1);
                let ql = self.fresh("let", m + 2);
                let mut args = ys(m);
                args.push(call(qv, Var::X0, ys(m)));
                self.m.add_stay_rule(q, call(ql, Var::X0, args));
                self.translate(bound, rho, qv)?;
                let mut rho2 = rho.to_vec();
                rho2.push(var.clone());
                self.translate(body, &rho2, ql)?;
            }
        }
        Ok(())
    }

    fn guarded_steps(&mut self, steps: &[Step]) -> Vec<GStep> {
        steps
            .iter()
            .map(|s| GStep {
                step: PStep::of(s),
                guards: s.preds.iter().map(|p| self.predicate(p)).collect(),
            })
            .collect()
    }

    /// Rules for `q` such that `q` outputs, for every node `t` selected by
    /// `p` in pre-order, `q'` applied to `t` and its right siblings with `t`
    /// as the extra last argument.
    fn paths(&mut self, p: &Path, q: StateId, qsel: StateId, m: usize) -> Result<()> {
        let gsteps = self.guarded_steps(&p.steps);
        let psteps: Vec<PStep> = gsteps.iter().map(|g| g.step.clone()).collect();
        let (d0, r0) = root_sets(&psteps);
        let mut scan = Scan::new(gsteps, m, ScanKind::Select(qsel));
        if p.start == INPUT {
            let rhs = self.scan_call(&mut scan, &d0, Var::X0, ys(m));
            self.m.add_stay_rule(q, rhs);
        } else {
            let down = self.scan_call(&mut scan, &d0, Var::X1, ys(m));
            let right = self.scan_call(&mut scan, &r0, Var::X2, ys(m));
            self.m.add_rule(q, Guard::Default, concat([down, right]));
            self.m.add_rule(q, Guard::Epsilon, Rhs::empty());
        }
        self.finish_scan(&mut scan);
        Ok(())
    }

    fn scan_call(&mut self, scan: &mut Scan, set: &StepSet, var: Var, args: Vec<Rhs>) -> Rhs {
        if set.is_empty() {
            return Rhs::empty();
        }
        let id = match scan.ids.get(set) {
            Some(&id) => id,
            None => {
                let (construct, rank) = match scan.kind {
                    ScanKind::Select(_) => ("scan", scan.m + 1),
                    ScanKind::Test => ("pscan", 3),
                };
                let id = self.fresh(construct, rank);
                scan.ids.insert(set.clone(), id);
                scan.todo.push(set.clone());
                id
            }
        };
        call(id, var, args)
    }

    /// A predicate's chained call: look below, and if nothing is found
    /// there, look right; `else_` when neither side has a set.
    fn test_chain(&mut self, scan: &mut Scan, down: &StepSet, right: &StepSet, else_: Rhs) -> Rhs {
        let y1 = Rhs::one(RhsItem::Param(1));
        let r = if right.is_empty() { else_ } else { self.scan_call(scan, right, Var::X2, vec![y1.clone(), else_]) };
        if down.is_empty() {
            r
        } else {
            self.scan_call(scan, down, Var::X1, vec![y1, r])
        }
    }

    fn finish_scan(&mut self, scan: &mut Scan) {
        while let Some(set) = scan.todo.pop() {
            let id = scan.ids[&set];
            let mut rules: Vec<(Class, Rhs)> = Vec::new();
            for c in scan.classes.clone() {
                let rhs = self.class_rhs(scan, &set, &c);
                rules.push((c, rhs));
            }
            let default = rules.iter().find(|(c, _)| *c == Class::Other).unwrap().1.clone();
            let text = rules.iter().find(|(c, _)| *c == Class::OtherText).unwrap().1.clone();
            let text_differs = text != default;
            for (c, rhs) in rules {
                match c {
                    Class::Name(n) if rhs != default => {
                        self.m.add_rule(id, Guard::Symbol(Symbol::element(n)), rhs)
                    }
                    Class::Text(s) if rhs != if text_differs { text.clone() } else { default.clone() } => {
                        self.m.add_rule(id, Guard::Symbol(Symbol::text(s)), rhs)
                    }
                    _ => {}
                }
            }
            if text_differs {
                self.m.add_rule(id, Guard::TextNode, text);
            }
            self.m.add_rule(id, Guard::Default, default);
            let eps = match scan.kind {
                ScanKind::Select(_) => Rhs::empty(),
                ScanKind::Test => Rhs::one(RhsItem::Param(2)),
            };
            self.m.add_rule(id, Guard::Epsilon, eps);
        }
    }

    fn class_rhs(&mut self, scan: &mut Scan, set: &StepSet, c: &Class) -> Rhs {
        let psteps: Vec<PStep> = scan.steps.iter().map(|g| g.step.clone()).collect();
        let m0 = matched(&psteps, set, c);
        let (guarded, plain): (Vec<usize>, Vec<usize>) =
            m0.iter().partition(|&&j| !scan.steps[j - 1].guards.is_empty());
        let k = psteps.len();
        let m = scan.m;
        let guards = scan.steps_guards();
        let base: StepSet = plain.iter().copied().collect();
        match scan.kind {
            ScanKind::Select(qsel) => {
                let mut parts = Vec::new();
                for seg in 0..3 {
                    let mut outcome = |this: &mut Self, chosen: &StepSet| -> Rhs {
                        let (down, right) = successors(&psteps, set, chosen);
                        match seg {
                            0 if chosen.contains(&k) => {
                                let mut args = ys(m);
                                args.push(Rhs::one(RhsItem::Node {
                                    label: OutLabel::Current,
                                    children: call(this.copy, Var::X1, vec![]),
                                }));
                                call(qsel, Var::X0, args)
                            }
                            0 => Rhs::empty(),
                            1 => this.scan_call(scan, &down, Var::X1, ys(m)),
                            _ => this.scan_call(scan, &right, Var::X2, ys(m)),
                        }
                    };
                    parts.push(self.branch(&guards, &guarded, base.clone(), &mut outcome));
                }
                concat(parts)
            }
            ScanKind::Test => {
                let mut outcome = |this: &mut Self, chosen: &StepSet| -> Rhs {
                    if chosen.contains(&k) {
                        return Rhs::one(RhsItem::Param(1));
                    }
                    let (down, right) = successors(&psteps, set, chosen);
                    this.test_chain(scan, &down, &right, Rhs::one(RhsItem::Param(2)))
                };
                self.branch(&guards, &guarded, base, &mut outcome)
            }
        }
    }

    /// Decision tree over the guarded steps that matched: each guard is a
    /// predicate call choosing between the outcome with and without the step.
    fn branch(
        &mut self,
        guards: &[Vec<(StateId, bool)>],
        pending: &[usize],
        chosen: StepSet,
        outcome: &mut dyn FnMut(&mut Self, &StepSet) -> Rhs,
    ) -> Rhs {
        let Some((&j, rest)) = pending.split_first() else {
            return outcome(self, &chosen);
        };
        let mut with = chosen.clone();
        with.insert(j);
        let then = self.branch(guards, rest, with, outcome);
        let else_ = self.branch(guards, rest, chosen, outcome);
        if then == else_ {
            return then;
        }
        let mut r = then;
        for &(pred, negate) in guards[j - 1].iter().rev() {
            let (a, b) = if negate { (else_.clone(), r) } else { (r, else_.clone()) };
            r = call(pred, Var::X0, vec![a, b]);
        }
        r
    }

    /// A rank-3 state returning its first argument if the predicate holds at
    /// the head node and its second otherwise. The flag asks the caller to
    /// swap the arguments (for `empty`).
    fn predicate(&mut self, p: &Predicate) -> (StateId, bool) {
        let (steps, negate): (Vec<Step>, bool) = match p {
            Predicate::Exists(s) => (s.clone(), false),
            Predicate::Empty(s) => (s.clone(), true),
            Predicate::Eq(s, _) | Predicate::Neq(s, _) => (crate::query::comparison_steps(s), false),
        };
        let qp = self.fresh("pred", 3);
        let y1 = Rhs::one(RhsItem::Param(1));
        let y2 = Rhs::one(RhsItem::Param(2));
        self.m.add_rule(qp, Guard::Epsilon, y2.clone());
        let cmp = match p {
            Predicate::Eq(_, v) => Some((true, v.trim().to_string())),
            Predicate::Neq(_, v) => Some((false, v.trim().to_string())),
            _ => None,
        };
        if steps.is_empty() {
            match cmp {
                None => self.m.add_rule(qp, Guard::Default, y1),
                Some((eq, v)) => {
                    let sym = Guard::Symbol(Symbol::text(v));
                    if eq {
                        self.m.add_rule(qp, sym, y1);
                    } else {
                        self.m.add_rule(qp, Guard::TextNode, y1);
                        self.m.add_rule(qp, sym, y2.clone());
                    }
                    self.m.add_rule(qp, Guard::Default, y2);
                }
            }
            return (qp, negate);
        }
        let mut gsteps = self.guarded_steps(&steps);
        if let Some((eq, v)) = cmp {
            let last = gsteps.last_mut().unwrap();
            debug_assert!(matches!(steps.last().unwrap().test, NodeTest::Text | NodeTest::Node));
            last.step.test = if eq { Test::TextEq(v.into()) } else { Test::TextNeq(v.into()) };
        }
        let psteps: Vec<PStep> = gsteps.iter().map(|g| g.step.clone()).collect();
        let (d0, r0) = root_sets(&psteps);
        let mut scan = Scan::new(gsteps, 2, ScanKind::Test);
        let head = self.test_chain(&mut scan, &d0, &r0, y2);
        self.m.add_rule(qp, Guard::Default, head);
        self.finish_scan(&mut scan);
        (qp, negate)
    }
}

fn var_index(rho: &[String], v: &str) -> Result<usize> {
    rho.iter()
        .rposition(|x| x == v)
        .map(|i| i + 1)
        .ok_or_else(|| Error::Scope(vec![format!("`${v}` is not bound")]))
}

#[derive(Clone, Copy)]
enum ScanKind {
    Select(StateId),
    Test,
}

struct Scan {
    steps: Vec<GStep>,
    classes: Vec<Class>,
    m: usize,
    kind: ScanKind,
    ids: HashMap<StepSet, StateId>,
    todo: Vec<StepSet>,
}

impl Scan {
    fn new(steps: Vec<GStep>, m: usize, kind: ScanKind) -> Self {
        let psteps: Vec<PStep> = steps.iter().map(|g| g.step.clone()).collect();
        let classes = classes_of(&psteps);
        Scan { steps, classes, m, kind, ids: HashMap::new(), todo: Vec::new() }
    }

    fn steps_guards(&self) -> Vec<Vec<(StateId, bool)>> {
        self.steps.iter().map(|g| g.guards.clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::xml_to_forest;
    use crate::mft::{evaluate, validate};
    use crate::query::{interpret, parse_query};
    use crate::term::print_term;

    const PERSON: &str = r#"<out>{ for $b in $input/person[./p_id/text() = "person0"]
        return let $r := $b/name/text() return $r }</out>"#;
    const DOC1: &str = "<person><p_id><a/>person0</p_id><name>Jim\n</name><c/><name>Li</name></person>";
    const DOC2: &str = "<person><p_id><a/>perso7</p_id><name>Jim\n</name><c/><p_id>person0</p_id></person>";

    fn agree(q: &str, xml: &str) -> String {
        let q = parse_query(q).unwrap();
        let m = compile(&q).unwrap();
        assert!(validate(&m).is_empty(), "{:?}", validate(&m));
        let doc = xml_to_forest(xml).unwrap();
        let got = evaluate(&m, &doc).unwrap().normalize();
        assert_eq!(got, interpret(&q, &doc).unwrap().normalize(), "{q}");
        print_term(&got)
    }

    #[test]
    fn person_state_count() {
        let m = compile(&parse_query(PERSON).unwrap()).unwrap();
        assert_eq!(m.states.len(), 14);
        let guards: std::collections::BTreeSet<String> = m
            .rules
            .iter()
            .filter_map(|r| match &r.guard {
                Guard::Symbol(s) => Some(s.to_string()),
                _ => None,
            })
            .collect();
        assert_eq!(guards.len(), 4, "{guards:?}");
    }

    #[test]
    fn person_outputs() {
        assert_eq!(agree(PERSON, DOC1), r#"out(#"JimLi")"#);
        assert_eq!(agree(PERSON, DOC2), r#"out(#"Jim")"#);
    }

    #[test]
    fn constant_element() {
        assert_eq!(agree("<r>hello</r>", "<a/>"), r#"r(#"hello")"#);
    }

    #[test]
    fn axes_and_predicates_agree() {
        let xml = "<r><a>1</a><b/><a><b>2</b></a><c><a/></c></r>";
        for q in [
            "$input/r/a/following-sibling::*",
            "$input//b",
            "$input//a//b",
            "$input/r/*[./b]",
            "$input/r/*[empty(./b)]",
            r#"$input/r/a[./text() = "1"]"#,
            r#"$input//*[./b != "2"]"#,
            "<x>{ for $v in $input/r/* return <y>{ $v/b }</y> }</x>",
            "for $v in $input//a return let $w := $v/text() return ($w, $w)",
            "for $v in $input/r return for $w in $v/* return $w/c",
        ] {
            agree(q, xml);
        }
    }
}
