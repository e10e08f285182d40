//! Term notation for forests, e.g. `person(p_id(#"person0") name(#"Jim"))`.
//!
//! Text nodes print as `#"content"`, attribute nodes as `@name(#"value")`,
//! and the empty forest as `eps` (or nothing inside parentheses).

use crate::error::{Error, Result};
use crate::forest::{Forest, Label, NodeKind, Tree, CONCAT};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Word(String),
    Quoted(String),
    Text(String),
    Attr(String),
    Concat,
    LParen,
    RParen,
    Comma,
    Arrow,
}

#[derive(Debug, Clone)]
pub(crate) struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    /// Offset added to positions when `src` is a slice of a larger text.
    base: usize,
    full: &'a str,
}

fn is_word_char(c: char) -> bool {
    !c.is_whitespace() && !matches!(c, '(' | ')' | ',' | '"')
}

fn is_word_start(c: char) -> bool {
    is_word_char(c) && !matches!(c, '#' | '%' | '@')
}

impl<'a> Lexer<'a> {
    pub(crate) fn new(src: &'a str) -> Self {
        Lexer { src, pos: 0, base: 0, full: src }
    }

    pub(crate) fn with_base(src: &'a str, full: &'a str, base: usize) -> Self {
        Lexer { src, pos: 0, base, full }
    }

    pub(crate) fn error(&self, msg: impl Into<String>) -> Error {
        Error::syntax(self.full, self.base + self.pos, msg)
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    pub(crate) fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.src.len()
    }

    pub(crate) fn peek(&mut self) -> Result<Option<Tok>> {
        let save = self.pos;
        let t = self.next_tok();
        self.pos = save;
        t
    }

    /// Look at the token after the next one.
    pub(crate) fn peek2(&mut self) -> Result<Option<Tok>> {
        let save = self.pos;
        let _ = self.next_tok()?;
        let t = self.next_tok();
        self.pos = save;
        t
    }

    pub(crate) fn expect(&mut self, want: Tok) -> Result<()> {
        match self.next_tok()? {
            Some(t) if t == want => Ok(()),
            other => Err(self.error(format!("expected {want:?}, found {other:?}"))),
        }
    }

    fn quoted(&mut self) -> Result<String> {
        // self.pos is at the opening quote
        let mut out = String::new();
        let mut chars = self.src[self.pos + 1..].char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    self.pos += i + 2;
                    return Ok(out);
                }
                '\\' => match chars.next() {
                    Some((_, 'n')) => out.push('\n'),
                    Some((_, 't')) => out.push('\t'),
                    Some((_, 'r')) => out.push('\r'),
                    Some((_, c)) => out.push(c),
                    None => break,
                },
                c => out.push(c),
            }
        }
        Err(self.error("unterminated string"))
    }

    fn word(&mut self) -> String {
        let rest = &self.src[self.pos..];
        let end = rest.find(|c: char| !is_word_char(c)).unwrap_or(rest.len());
        self.pos += end;
        rest[..end].to_string()
    }

    pub(crate) fn next_tok(&mut self) -> Result<Option<Tok>> {
        self.skip_ws();
        let Some(c) = self.src[self.pos..].chars().next() else {
            return Ok(None);
        };
        let tok = match c {
            '(' => {
                self.pos += 1;
                Tok::LParen
            }
            ')' => {
                self.pos += 1;
                Tok::RParen
            }
            ',' => {
                self.pos += 1;
                Tok::Comma
            }
            '"' => Tok::Quoted(self.quoted()?),
            '#' => {
                self.pos += 1;
                if !self.src[self.pos..].starts_with('"') {
                    return Err(self.error("expected `\"` after `#`"));
                }
                Tok::Text(self.quoted()?)
            }
            '@' => {
                self.pos += 1;
                match self.src[self.pos..].chars().next() {
                    Some('"') => Tok::Attr(self.quoted()?),
                    Some(c) if is_word_start(c) => Tok::Attr(self.word()),
                    _ => Tok::Concat,
                }
            }
            '%' => Tok::Word(self.word()),
            _ => {
                let w = self.word();
                if w == "->" {
                    Tok::Arrow
                } else {
                    Tok::Word(w)
                }
            }
        };
        Ok(Some(tok))
    }
}

/// Parse a forest in term notation.
pub fn parse_term(s: &str) -> Result<Forest> {
    let mut lx = Lexer::new(s);
    let f = parse_forest(&mut lx)?;
    if !lx.at_end() {
        return Err(lx.error("trailing input"));
    }
    Ok(f)
}

fn parse_forest(lx: &mut Lexer<'_>) -> Result<Forest> {
    let mut trees = Vec::new();
    loop {
        match lx.peek()? {
            None | Some(Tok::RParen) => break,
            Some(Tok::Word(w)) if w == "eps" && lx.peek2()? != Some(Tok::LParen) => {
                lx.next_tok()?;
            }
            Some(_) => trees.push(parse_tree(lx)?),
        }
    }
    Ok(Forest(trees))
}

fn parse_tree(lx: &mut Lexer<'_>) -> Result<Tree> {
    let label = match lx.next_tok()? {
        Some(Tok::Text(s)) => {
            if lx.peek()? == Some(Tok::LParen) {
                lx.next_tok()?;
                lx.expect(Tok::RParen)?;
            }
            return Ok(Tree::text(&s));
        }
        Some(Tok::Word(w)) | Some(Tok::Quoted(w)) => Label::element(w),
        Some(Tok::Attr(w)) => Label::attribute(w),
        Some(Tok::Concat) => Label::element(CONCAT),
        other => return Err(lx.error(format!("expected a tree, found {other:?}"))),
    };
    lx.expect(Tok::LParen)?;
    let children = parse_forest(lx)?;
    lx.expect(Tok::RParen)?;
    Ok(Tree::new(label, children))
}

pub(crate) fn needs_quotes(name: &str) -> bool {
    match name.chars().next() {
        None => true,
        Some(c) if !is_word_start(c) => true,
        _ => name == "eps" || name == "->" || !name.chars().all(is_word_char),
    }
}

pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Render a label, quoting it when `force_quote` says so or when required.
pub(crate) fn label_with(label: &Label, force_quote: &dyn Fn(&str) -> bool) -> String {
    let name = &*label.name;
    match label.kind {
        NodeKind::Text => format!("#{}", quote(name)),
        NodeKind::Attribute if needs_quotes(name) => format!("@{}", quote(name)),
        NodeKind::Attribute => format!("@{name}"),
        NodeKind::Element if label.is_concat() => CONCAT.to_string(),
        NodeKind::Element if needs_quotes(name) || force_quote(name) => quote(name),
        NodeKind::Element => name.to_string(),
    }
}

pub(crate) fn label_to_term(label: &Label) -> String {
    label_with(label, &|_| false)
}

/// Print a forest in term notation.
pub fn print_term(f: &Forest) -> String {
    if f.is_empty() {
        return "eps".to_string();
    }
    let mut out = String::new();
    write_forest(f, &mut out);
    out
}

fn write_forest(f: &Forest, out: &mut String) {
    for (i, t) in f.0.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&label_to_term(&t.label));
        if !t.label.is_text() {
            out.push('(');
            write_forest(&t.children, out);
            out.push(')');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_simple() {
        let f = parse_term("a(b())").unwrap();
        assert_eq!(f, Forest(vec![Tree::element("a", Forest(vec![Tree::element("b", Forest::empty())]))]));
        assert_eq!(print_term(&f), "a(b())");
    }

    #[test]
    fn empty_forest() {
        assert_eq!(parse_term("").unwrap(), Forest::empty());
        assert_eq!(parse_term("eps").unwrap(), Forest::empty());
        assert_eq!(print_term(&Forest::empty()), "eps");
    }

    #[test]
    fn text_and_attributes() {
        let f = parse_term(r#"book(@isbn(#"123") author(#"Knuth"))"#).unwrap();
        let book = &f.0[0];
        assert_eq!(book.children.0[0], Tree::attribute("isbn", "123"));
        assert_eq!(print_term(&f), r#"book(@isbn(#"123") author(#"Knuth"))"#);
    }

    #[test]
    fn quoted_labels() {
        let f = Forest(vec![Tree::element("a b", Forest::empty()), Tree::element("eps", Forest::empty())]);
        let s = print_term(&f);
        assert_eq!(s, r#""a b"() "eps"()"#);
        assert_eq!(parse_term(&s).unwrap(), f);
    }

    #[test]
    fn escapes_in_text() {
        let f = Forest(vec![Tree::text("say \"hi\"\\")]);
        assert_eq!(parse_term(&print_term(&f)).unwrap(), f);
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_term("a(b(\n)").unwrap_err();
        match err {
            Error::Syntax { pos, .. } => assert_eq!(pos.line, 2),
            e => panic!("unexpected {e}"),
        }
    }
}
