//! Line-oriented rule format.
//!
//! ```text
//! # sigma: name p_id person #"person0"
//! q0(%t(x1)x2) -> out(q1(x0))
//! q3(#"person0"(x1)x2, y1, y2) -> y1
//! q5(%text(x1)x2) -> %t() q5(x2)
//! q1(eps) -> eps
//! q(%, y1) -> y1
//! ```
//!
//! The first rule's state is the initial state. `q(%, ...)` abbreviates an
//! identical default rule and eps rule. Output labels that clash with state
//! names or `y<i>` are written quoted.

use std::collections::{BTreeSet, HashMap};

use super::{Guard, Mft, OutLabel, Rhs, RhsItem, StateId, Symbol, Var};
use crate::error::{Error, Result};
use crate::forest::{Label, CONCAT};
use crate::term::{label_with, Lexer, Tok};

enum LhsGuard {
    One(Guard),
    Stay,
}

struct Lhs {
    state: String,
    guard: LhsGuard,
    params: usize,
}

fn is_param_name(w: &str) -> Option<usize> {
    let digits = w.strip_prefix('y')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok().filter(|j| *j > 0)
}

fn parse_lhs(lx: &mut Lexer<'_>) -> Result<Lhs> {
    let state = match lx.next_tok()? {
        Some(Tok::Word(w)) => w,
        other => return Err(lx.error(format!("expected state name, found {other:?}"))),
    };
    lx.expect(Tok::LParen)?;
    let guard = match lx.next_tok()? {
        Some(Tok::Word(w)) if w == "eps" => LhsGuard::One(Guard::Epsilon),
        Some(Tok::Word(w)) if w == "%" => LhsGuard::Stay,
        Some(Tok::Word(w)) if w == "%t" => {
            expect_pattern_tail(lx)?;
            LhsGuard::One(Guard::Default)
        }
        Some(Tok::Word(w)) if w == "%text" => {
            expect_pattern_tail(lx)?;
            LhsGuard::One(Guard::TextNode)
        }
        Some(Tok::Word(w)) | Some(Tok::Quoted(w)) | Some(Tok::Attr(w)) if !w.starts_with('%') => {
            expect_pattern_tail(lx)?;
            LhsGuard::One(Guard::Symbol(Symbol::element(w)))
        }
        Some(Tok::Text(s)) => {
            expect_pattern_tail(lx)?;
            LhsGuard::One(Guard::Symbol(Symbol::text(s)))
        }
        Some(Tok::Concat) => {
            expect_pattern_tail(lx)?;
            LhsGuard::One(Guard::Symbol(Symbol::element(CONCAT)))
        }
        other => return Err(lx.error(format!("expected an input pattern, found {other:?}"))),
    };
    let mut params = 0;
    loop {
        match lx.next_tok()? {
            Some(Tok::RParen) => break,
            Some(Tok::Comma) => match lx.next_tok()? {
                Some(Tok::Word(w)) if is_param_name(&w) == Some(params + 1) => params += 1,
                other => {
                    return Err(lx.error(format!("expected parameter y{}, found {other:?}", params + 1)))
                }
            },
            other => return Err(lx.error(format!("expected `,` or `)`, found {other:?}"))),
        }
    }
    Ok(Lhs { state, guard, params })
}

fn expect_pattern_tail(lx: &mut Lexer<'_>) -> Result<()> {
    lx.expect(Tok::LParen)?;
    lx.expect(Tok::Word("x1".into()))?;
    lx.expect(Tok::RParen)?;
    lx.expect(Tok::Word("x2".into()))
}

struct RhsParser<'s> {
    states: &'s HashMap<String, StateId>,
}

impl RhsParser<'_> {
    fn forest(&self, lx: &mut Lexer<'_>) -> Result<Rhs> {
        let mut items = Vec::new();
        loop {
            match lx.peek()? {
                None | Some(Tok::RParen) | Some(Tok::Comma) => return Ok(Rhs(items)),
                Some(Tok::Word(w)) if lx.peek2()? != Some(Tok::LParen) => {
                    lx.next_tok()?;
                    if w == "eps" {
                        continue;
                    }
                    match is_param_name(&w) {
                        Some(j) => items.push(RhsItem::Param(j)),
                        None => return Err(lx.error(format!("unexpected word `{w}`"))),
                    }
                }
                Some(_) => items.push(self.item(lx)?),
            }
        }
    }

    fn children(&self, lx: &mut Lexer<'_>) -> Result<Rhs> {
        lx.expect(Tok::LParen)?;
        let r = self.forest(lx)?;
        lx.expect(Tok::RParen)?;
        Ok(r)
    }

    fn item(&self, lx: &mut Lexer<'_>) -> Result<RhsItem> {
        let tok = lx.next_tok()?;
        let label = match tok {
            Some(Tok::Word(w)) if w == "%t" => {
                return Ok(RhsItem::Node { label: OutLabel::Current, children: self.children(lx)? })
            }
            Some(Tok::Word(w)) if self.states.contains_key(&w) => {
                let state = self.states[&w];
                lx.expect(Tok::LParen)?;
                let input = match lx.next_tok()? {
                    Some(Tok::Word(v)) if v == "x0" => Var::X0,
                    Some(Tok::Word(v)) if v == "x1" => Var::X1,
                    Some(Tok::Word(v)) if v == "x2" => Var::X2,
                    other => {
                        return Err(lx.error(format!("call to `{w}` needs x0/x1/x2, found {other:?}")))
                    }
                };
                let mut args = Vec::new();
                loop {
                    match lx.next_tok()? {
                        Some(Tok::RParen) => break,
                        Some(Tok::Comma) => args.push(self.forest(lx)?),
                        other => return Err(lx.error(format!("expected `,` or `)`, found {other:?}"))),
                    }
                }
                return Ok(RhsItem::Call { state, input, args });
            }
            Some(Tok::Word(w)) if w.starts_with('%') => {
                return Err(lx.error(format!("unexpected `{w}` in right-hand side")))
            }
            Some(Tok::Word(w)) | Some(Tok::Quoted(w)) => Label::element(w),
            Some(Tok::Attr(w)) => Label::attribute(w),
            Some(Tok::Concat) => Label::element(CONCAT),
            Some(Tok::Text(s)) => {
                if lx.peek()? == Some(Tok::LParen) {
                    lx.next_tok()?;
                    lx.expect(Tok::RParen)?;
                }
                return Ok(Rhs::node(Label::text(s), Rhs::empty()));
            }
            other => return Err(lx.error(format!("expected an output item, found {other:?}"))),
        };
        Ok(Rhs::node(label, self.children(lx)?))
    }
}

fn parse_sigma(line: &str, full: &str, base: usize) -> Result<BTreeSet<Symbol>> {
    let mut lx = Lexer::with_base(line, full, base);
    let mut out = BTreeSet::new();
    while let Some(t) = lx.next_tok()? {
        match t {
            Tok::Word(w) | Tok::Quoted(w) => out.insert(Symbol::element(w)),
            Tok::Text(s) => out.insert(Symbol::text(s)),
            other => return Err(lx.error(format!("bad sigma entry {other:?}"))),
        };
    }
    Ok(out)
}

/// Parse the rule format; the result is validated.
pub fn parse_mft(text: &str) -> Result<Mft> {
    let mut lines = Vec::new();
    let mut sigma_header = None;
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            if let Some(syms) = rest.trim_start().strip_prefix("sigma:") {
                let base = start + line.find("sigma:").unwrap() + "sigma:".len();
                sigma_header = Some(parse_sigma(syms, text, base)?);
            }
            continue;
        }
        lines.push((start, line.trim_end()));
    }

    let mut m = Mft::new();
    let mut ids: HashMap<String, StateId> = HashMap::new();
    let mut parsed = Vec::new();
    for &(start, line) in &lines {
        let mut lx = Lexer::with_base(line, text, start);
        let lhs = parse_lhs(&mut lx)?;
        lx.expect(Tok::Arrow)?;
        let id = match ids.get(&lhs.state) {
            Some(&id) => {
                if m.rank(id) != lhs.params + 1 {
                    return Err(lx.error(format!(
                        "state `{}` used with {} parameters, earlier with {}",
                        lhs.state,
                        lhs.params,
                        m.rank(id) - 1
                    )));
                }
                id
            }
            None => {
                let id = m.add_state(lhs.state.clone(), lhs.params + 1);
                ids.insert(lhs.state.clone(), id);
                id
            }
        };
        parsed.push((id, lhs.guard, lx));
    }
    if parsed.is_empty() {
        return Err(Error::syntax(text, 0, "no rules"));
    }
    m.initial = parsed[0].0;

    let rp = RhsParser { states: &ids };
    for (id, guard, mut lx) in parsed {
        let rhs = rp.forest(&mut lx)?;
        if !lx.at_end() {
            return Err(lx.error("trailing input after right-hand side"));
        }
        match guard {
            LhsGuard::One(g) => m.add_rule(id, g, rhs),
            LhsGuard::Stay => m.add_stay_rule(id, rhs),
        }
    }
    if let Some(sigma) = sigma_header {
        m.sigma.extend(sigma);
    } else {
        m.sigma = m.infer_sigma();
    }
    let diags = super::validate(&m);
    if !diags.is_empty() {
        return Err(Error::Invalid(diags));
    }
    Ok(m)
}

struct Printer<'m> {
    m: &'m Mft,
    names: HashMap<&'m str, ()>,
}

impl Printer<'_> {
    fn must_quote(&self, name: &str) -> bool {
        self.names.contains_key(name) || is_param_name(name).is_some() || name.starts_with('%')
    }

    fn rhs(&self, r: &Rhs, out: &mut String) {
        if r.is_empty() {
            out.push_str("eps");
            return;
        }
        for (i, it) in r.0.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            self.item(it, out);
        }
    }

    fn children(&self, r: &Rhs, out: &mut String) {
        out.push('(');
        if !r.is_empty() {
            self.rhs(r, out);
        }
        out.push(')');
    }

    fn item(&self, it: &RhsItem, out: &mut String) {
        match it {
            RhsItem::Param(j) => out.push_str(&format!("y{j}")),
            RhsItem::Node { label: OutLabel::Current, children } => {
                out.push_str("%t");
                self.children(children, out);
            }
            RhsItem::Node { label: OutLabel::Fixed(l), children } => {
                out.push_str(&label_with(l, &|n| self.must_quote(n)));
                if !l.is_text() {
                    self.children(children, out);
                }
            }
            RhsItem::Call { state, input, args } => {
                out.push_str(&self.m.state(*state).name);
                out.push_str(&format!("(x{}", input.index()));
                for a in args {
                    out.push_str(", ");
                    self.rhs(a, out);
                }
                out.push(')');
            }
        }
    }
}

/// Print in canonical form: rules grouped by state, initial state first.
pub fn print_mft(m: &Mft) -> String {
    let mut sorted = m.clone();
    sorted.sort_rules();
    let p = Printer { m, names: m.states.iter().map(|s| (s.name.as_str(), ())).collect() };
    let mut out = String::from("# sigma:");
    for s in &m.sigma {
        out.push(' ');
        out.push_str(&s.to_string());
    }
    out.push('\n');
    for r in &sorted.rules {
        let st = m.state(r.state);
        out.push_str(&st.name);
        out.push('(');
        match &r.guard {
            Guard::Epsilon => out.push_str("eps"),
            Guard::Default => out.push_str("%t(x1)x2"),
            Guard::TextNode => out.push_str("%text(x1)x2"),
            Guard::Symbol(s) => {
                out.push_str(&s.to_string());
                out.push_str("(x1)x2");
            }
        }
        for j in 1..st.rank {
            out.push_str(&format!(", y{j}"));
        }
        out.push_str(") -> ");
        p.rhs(&r.rhs, &mut out);
        out.push('\n');
    }
    out
}
