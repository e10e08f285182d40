use super::{Axis, NodeTest, Path, Predicate, Query, Step, INPUT};
use crate::error::{Error, Result};

/// Parse a MinXQuery program. Abbreviations are desugared: `p/a` becomes
/// `p/child::a`, `p//a` becomes `p/descendant::a`, and a leading `/`
/// starts at `$input`.
pub fn parse_query(text: &str) -> Result<Query> {
    let mut p = Parser { src: text, pos: 0 };
    let q = p.query()?;
    p.skip_ws()?;
    if p.pos < text.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(q)
}

struct Parser<'s> {
    src: &'s str,
    pos: usize,
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-' || c == '.'
}

impl<'s> Parser<'s> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::syntax(self.src, self.pos, msg)
    }

    fn rest(&self) -> &'s str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn skip_ws(&mut self) -> Result<()> {
        loop {
            let r = self.rest();
            let t = r.trim_start();
            self.pos += r.len() - t.len();
            if t.starts_with("(:") {
                match t.find(":)") {
                    Some(end) => self.pos += end + 2,
                    None => return Err(self.err("unterminated comment")),
                }
            } else {
                return Ok(());
            }
        }
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.rest().starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<()> {
        self.skip_ws()?;
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{s}`")))
        }
    }

    fn keyword(&mut self, kw: &str) -> bool {
        let r = self.rest();
        if r.starts_with(kw) && !r[kw.len()..].chars().next().is_some_and(is_name_char) {
            self.pos += kw.len();
            true
        } else {
            false
        }
    }

    fn name(&mut self) -> Result<String> {
        let r = self.rest();
        let n: usize = r.chars().take_while(|&c| is_name_char(c)).map(char::len_utf8).sum();
        if n == 0 {
            return Err(self.err("expected a name"));
        }
        self.pos += n;
        Ok(r[..n].to_string())
    }

    fn var(&mut self) -> Result<String> {
        self.skip_ws()?;
        if !self.eat("$") {
            return Err(self.err("expected a variable"));
        }
        self.name()
    }

    fn query(&mut self) -> Result<Query> {
        self.skip_ws()?;
        if self.peek() == Some('<') {
            self.element()
        } else {
            self.clause()
        }
    }

    fn clause(&mut self) -> Result<Query> {
        self.skip_ws()?;
        if self.keyword("for") {
            let var = self.var()?;
            self.skip_ws()?;
            if !self.keyword("in") {
                return Err(self.err("expected `in`"));
            }
            let path = self.path()?;
            self.return_kw()?;
            let body = self.query()?;
            return Ok(Query::For { var, path, body: Box::new(body) });
        }
        if self.keyword("let") {
            let var = self.var()?;
            self.expect(":=")?;
            let bound = self.query()?;
            self.return_kw()?;
            let body = self.query()?;
            return Ok(Query::Let { var, bound: Box::new(bound), body: Box::new(body) });
        }
        if self.keyword("where") {
            return Err(self.err("`where` clauses are not supported; use a path predicate instead"));
        }
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let mut items = vec![self.query()?];
                loop {
                    self.skip_ws()?;
                    if self.eat(",") {
                        items.push(self.query()?);
                    } else if self.eat(")") {
                        break;
                    } else {
                        return Err(self.err("expected `,` or `)`"));
                    }
                }
                Ok(if items.len() == 1 { items.pop().unwrap() } else { Query::Seq(items) })
            }
            Some('$') | Some('/') => Ok(Query::Path(self.path()?)),
            _ => Err(self.err("expected an element, `for`, `let`, a path or `(`")),
        }
    }

    fn return_kw(&mut self) -> Result<()> {
        self.skip_ws()?;
        if self.keyword("return") {
            Ok(())
        } else {
            Err(self.err("expected `return`"))
        }
    }

    fn path(&mut self) -> Result<Path> {
        self.skip_ws()?;
        let start = if self.peek() == Some('/') { INPUT.to_string() } else { self.var()? };
        Ok(Path { start, steps: self.steps()? })
    }

    fn steps(&mut self) -> Result<Vec<Step>> {
        let mut steps = Vec::new();
        loop {
            let save = self.pos;
            self.skip_ws()?;
            if !self.eat("/") {
                self.pos = save;
                return Ok(steps);
            }
            let abbrev = if self.eat("/") { Some(Axis::Descendant) } else { None };
            steps.push(self.step(abbrev)?);
        }
    }

    fn step(&mut self, abbrev: Option<Axis>) -> Result<Step> {
        self.skip_ws()?;
        let mut axis = abbrev.unwrap_or(Axis::Child);
        for (kw, ax) in [
            ("child::", Axis::Child),
            ("descendant::", Axis::Descendant),
            ("following-sibling::", Axis::FollowingSibling),
        ] {
            if self.eat(kw) {
                if abbrev.is_some() {
                    return Err(self.err("an explicit axis cannot follow `//`"));
                }
                axis = ax;
                break;
            }
        }
        let test = if self.eat("*") {
            NodeTest::Star
        } else if self.eat("text()") {
            NodeTest::Text
        } else if self.eat("node()") {
            NodeTest::Node
        } else {
            self.eat("@");
            NodeTest::Name(self.name()?)
        };
        let mut step = Step::new(axis, test);
        loop {
            let save = self.pos;
            self.skip_ws()?;
            if !self.eat("[") {
                self.pos = save;
                return Ok(step);
            }
            step.preds.push(self.predicate()?);
            self.expect("]")?;
        }
    }

    fn predpath(&mut self) -> Result<Vec<Step>> {
        self.skip_ws()?;
        if self.eat(".") {
            return self.steps();
        }
        let first = self.step(None)?;
        let mut steps = vec![first];
        steps.extend(self.steps()?);
        Ok(steps)
    }

    fn predicate(&mut self) -> Result<Predicate> {
        self.skip_ws()?;
        if self.rest().starts_with("empty") && self.rest()[5..].trim_start().starts_with('(') {
            self.pos += 5;
            self.expect("(")?;
            let steps = self.predpath()?;
            self.expect(")")?;
            return Ok(Predicate::Empty(steps));
        }
        let steps = self.predpath()?;
        self.skip_ws()?;
        if self.eat("!=") {
            Ok(Predicate::Neq(steps, self.string()?))
        } else if self.eat("=") {
            Ok(Predicate::Eq(steps, self.string()?))
        } else {
            Ok(Predicate::Exists(steps))
        }
    }

    fn string(&mut self) -> Result<String> {
        self.skip_ws()?;
        let quote = match self.peek() {
            Some(c @ ('"' | '\'')) => c,
            _ => return Err(self.err("expected a string literal")),
        };
        self.pos += 1;
        let mut out = String::new();
        loop {
            match self.peek() {
                None => return Err(self.err("unterminated string literal")),
                Some(c) if c == quote => {
                    self.pos += 1;
                    if self.peek() == Some(quote) {
                        self.pos += 1;
                        out.push(quote);
                    } else {
                        return Ok(out);
                    }
                }
                Some(c) => {
                    self.pos += c.len_utf8();
                    out.push(c);
                }
            }
        }
    }

    fn element(&mut self) -> Result<Query> {
        self.expect("<")?;
        let name = self.name()?;
        self.skip_ws()?;
        if self.eat("/>") {
            return Ok(Query::Element { name, children: Vec::new() });
        }
        self.expect(">")?;
        let mut children = Vec::new();
        let mut text = String::new();
        loop {
            let Some(c) = self.peek() else {
                return Err(self.err(format!("unclosed element <{name}>")));
            };
            if self.eat("{{") {
                text.push('{');
            } else if self.eat("}}") {
                text.push('}');
            } else if c == '&' {
                text.push(self.entity()?);
            } else if c == '<' || c == '{' {
                flush_text(&mut text, &mut children);
                if self.eat("</") {
                    let close = self.name()?;
                    if close != name {
                        return Err(self.err(format!("</{close}> does not close <{name}>")));
                    }
                    self.expect(">")?;
                    return Ok(Query::Element { name, children });
                }
                if c == '<' {
                    children.push(self.element()?);
                } else {
                    self.pos += 1;
                    children.push(self.query()?);
                    self.expect("}")?;
                }
            } else if c == '}' {
                return Err(self.err("unbalanced `}` in element content"));
            } else {
                self.pos += c.len_utf8();
                text.push(c);
            }
        }
    }

    fn entity(&mut self) -> Result<char> {
        for (e, c) in [("&lt;", '<'), ("&gt;", '>'), ("&amp;", '&'), ("&quot;", '"'), ("&apos;", '\'')] {
            if self.eat(e) {
                return Ok(c);
            }
        }
        Err(self.err("unknown entity"))
    }
}

fn flush_text(text: &mut String, children: &mut Vec<Query>) {
    let t = text.trim();
    if !t.is_empty() {
        children.push(Query::Str(t.to_string()));
    }
    text.clear();
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_element() {
        assert_eq!(parse_query("<r></r>").unwrap(), Query::Element { name: "r".into(), children: vec![] });
    }

    #[test]
    fn abbreviations() {
        let q = parse_query("/site//item/text()").unwrap();
        let Query::Path(p) = q else { panic!() };
        assert_eq!(p.start, "input");
        assert_eq!(p.steps[0], Step::child("site"));
        assert_eq!(p.steps[1], Step::new(Axis::Descendant, NodeTest::Name("item".into())));
        assert_eq!(p.steps[2], Step::new(Axis::Child, NodeTest::Text));
    }

    #[test]
    fn predicates() {
        let q = parse_query(r#"$input/a[./b/text() = "x"][empty(./c)][./d != 'y'][./e]"#).unwrap();
        let Query::Path(p) = q else { panic!() };
        let preds = &p.steps[0].preds;
        assert!(matches!(&preds[0], Predicate::Eq(s, v) if s.len() == 2 && v == "x"));
        assert!(matches!(&preds[1], Predicate::Empty(s) if s.len() == 1));
        assert!(matches!(&preds[2], Predicate::Neq(_, v) if v == "y"));
        assert!(matches!(&preds[3], Predicate::Exists(_)));
    }

    #[test]
    fn element_text_is_trimmed() {
        let q = parse_query("<r>\n  hello  <b/> {$input} </r>").unwrap();
        let Query::Element { children, .. } = q else { panic!() };
        assert_eq!(children.len(), 3);
        assert_eq!(children[0], Query::Str("hello".into()));
    }

    #[test]
    fn where_is_rejected_with_hint() {
        let e = parse_query("for $x in $input/a where $x return $x").unwrap_err();
        assert!(e.to_string().contains("return"));
        let e = parse_query("for $x in $input/a return where").unwrap_err();
        assert!(e.to_string().contains("predicate"));
    }

    #[test]
    fn error_position() {
        let e = parse_query("<a>\n{ for $x on $input }</a>").unwrap_err();
        match e {
            Error::Syntax { pos, .. } => assert_eq!((pos.line, pos.col), (2, 10)),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn mismatched_close_tag() {
        assert!(parse_query("<a></b>").is_err());
    }
}
