//! XML bytes <-> event streams <-> forests.
//!
//! Attributes surface as `StartAttribute, Text, End` triples placed before
//! the element's content, so the event stream has exactly the shape of the
//! forest encoding (attribute nodes are the first children of an element).

use std::collections::VecDeque;
use std::io::{BufRead, Write};

use quick_xml::events::Event;
use quick_xml::Reader;

use crate::error::{Error, Result};
use crate::forest::{Forest, Label, NodeKind, Tree};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum XmlEvent {
    StartElement(String),
    StartAttribute(String),
    Text(String),
    End,
    Eof,
}

/// Pull-based producer of events in document order, ending with `Eof`.
pub trait EventSource {
    fn next_event(&mut self) -> Result<XmlEvent>;
}

/// Push-based consumer of events.
pub trait EventSink {
    fn event(&mut self, ev: &XmlEvent) -> Result<()>;
}

impl EventSink for Vec<XmlEvent> {
    fn event(&mut self, ev: &XmlEvent) -> Result<()> {
        self.push(ev.clone());
        Ok(())
    }
}

/// Sink that drops everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl EventSink for NullSink {
    fn event(&mut self, _ev: &XmlEvent) -> Result<()> {
        Ok(())
    }
}

/// Events replayed from memory.
#[derive(Debug, Clone)]
pub struct VecSource {
    events: VecDeque<XmlEvent>,
}

impl VecSource {
    pub fn new(events: Vec<XmlEvent>) -> Self {
        VecSource { events: events.into() }
    }
}

impl EventSource for VecSource {
    fn next_event(&mut self) -> Result<XmlEvent> {
        Ok(self.events.pop_front().unwrap_or(XmlEvent::Eof))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Whitespace {
    /// Trim surrounding whitespace of every text node; drop empty ones.
    #[default]
    Trim,
    /// Keep text exactly, including whitespace-only nodes.
    Preserve,
}

/// Streaming XML reader producing [`XmlEvent`]s.
pub struct XmlReader<R: BufRead> {
    reader: Reader<R>,
    buf: Vec<u8>,
    queue: VecDeque<XmlEvent>,
    text: String,
    depth: usize,
    done: bool,
    whitespace: Whitespace,
    max_buffer: usize,
}

impl<R: BufRead> XmlReader<R> {
    pub fn new(input: R) -> Self {
        Self::with_whitespace(input, Whitespace::Trim)
    }

    pub fn with_whitespace(input: R, whitespace: Whitespace) -> Self {
        let mut reader = Reader::from_reader(input);
        reader.config_mut().check_end_names = true;
        XmlReader {
            reader,
            buf: Vec::new(),
            queue: VecDeque::new(),
            text: String::new(),
            depth: 0,
            done: false,
            whitespace,
            max_buffer: 0,
        }
    }

    /// Largest raw event buffer seen so far, in bytes.
    pub fn max_buffer(&self) -> usize {
        self.max_buffer
    }

    fn error(&self, msg: impl std::fmt::Display) -> Error {
        Error::Xml(format!("at byte {}: {msg}", self.reader.buffer_position()))
    }

    fn flush_text(&mut self) {
        if self.text.is_empty() {
            return;
        }
        let text = std::mem::take(&mut self.text);
        let text = match self.whitespace {
            Whitespace::Trim => text.trim().to_string(),
            Whitespace::Preserve => text,
        };
        if !text.is_empty() && self.depth > 0 {
            self.queue.push_back(XmlEvent::Text(text));
        }
    }

    fn start(&mut self, e: &quick_xml::events::BytesStart<'_>, empty: bool) -> Result<()> {
        self.flush_text();
        let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
        self.queue.push_back(XmlEvent::StartElement(name));
        for attr in e.attributes() {
            let attr = attr.map_err(|err| self.error(err))?;
            let key = String::from_utf8_lossy(attr.key.as_ref()).into_owned();
            let value = attr.unescape_value().map_err(|err| self.error(err))?.into_owned();
            self.queue.push_back(XmlEvent::StartAttribute(key));
            let value = match self.whitespace {
                Whitespace::Trim => value.trim().to_string(),
                Whitespace::Preserve => value,
            };
            if !value.is_empty() {
                self.queue.push_back(XmlEvent::Text(value));
            }
            self.queue.push_back(XmlEvent::End);
        }
        if empty {
            self.queue.push_back(XmlEvent::End);
        } else {
            self.depth += 1;
        }
        Ok(())
    }

    fn fill(&mut self) -> Result<()> {
        while self.queue.is_empty() && !self.done {
            self.buf.clear();
            let ev = self
                .reader
                .read_event_into(&mut self.buf)
                .map_err(|e| Error::Xml(format!("at byte {}: {e}", self.reader.buffer_position())))?
                .into_owned();
            self.max_buffer = self.max_buffer.max(self.buf.len());
            match ev {
                Event::Start(e) => self.start(&e, false)?,
                Event::Empty(e) => self.start(&e, true)?,
                Event::End(_) => {
                    self.flush_text();
                    self.depth -= 1;
                    self.queue.push_back(XmlEvent::End);
                }
                Event::Text(t) => {
                    let s = t.unescape().map_err(|e| Error::Xml(e.to_string()))?;
                    self.text.push_str(&s);
                }
                Event::CData(t) => {
                    self.text.push_str(&String::from_utf8_lossy(&t));
                }
                Event::Eof => {
                    if self.depth != 0 {
                        return Err(self.error("unexpected end of input inside an element"));
                    }
                    self.text.clear();
                    self.done = true;
                    self.queue.push_back(XmlEvent::Eof);
                }
                // comments, processing instructions, declarations, doctype
                _ => {}
            }
        }
        Ok(())
    }
}

impl<R: BufRead> EventSource for XmlReader<R> {
    fn next_event(&mut self) -> Result<XmlEvent> {
        self.fill()?;
        Ok(self.queue.pop_front().unwrap_or(XmlEvent::Eof))
    }
}

/// Convenience: read a complete document from a string.
pub fn read_events(xml: &str) -> Result<Vec<XmlEvent>> {
    let mut src = XmlReader::new(xml.as_bytes());
    collect_events(&mut src)
}

pub fn collect_events(src: &mut dyn EventSource) -> Result<Vec<XmlEvent>> {
    let mut out = Vec::new();
    loop {
        let ev = src.next_event()?;
        let eof = ev == XmlEvent::Eof;
        out.push(ev);
        if eof {
            return Ok(out);
        }
    }
}

/// Materialize the whole stream as a forest.
pub fn build_forest(src: &mut dyn EventSource) -> Result<Forest> {
    let mut stack: Vec<(Label, Vec<Tree>)> = Vec::new();
    let mut top: Vec<Tree> = Vec::new();
    loop {
        match src.next_event()? {
            XmlEvent::StartElement(n) => stack.push((Label::element(n), std::mem::take(&mut top))),
            XmlEvent::StartAttribute(n) => {
                stack.push((Label::attribute(n), std::mem::take(&mut top)))
            }
            XmlEvent::Text(s) => top.push(Tree::text(&s)),
            XmlEvent::End => {
                let (label, mut siblings) =
                    stack.pop().ok_or_else(|| Error::Xml("unbalanced End event".into()))?;
                let children = std::mem::replace(&mut top, Vec::new());
                siblings.push(Tree::new(label, Forest(children)));
                top = siblings;
            }
            XmlEvent::Eof => {
                if !stack.is_empty() {
                    return Err(Error::Xml("Eof inside an open element".into()));
                }
                return Ok(Forest(top));
            }
        }
    }
}

/// Replay a forest as events (without the trailing `Eof`).
pub fn emit_forest(f: &Forest, sink: &mut dyn EventSink) -> Result<()> {
    for t in &f.0 {
        match t.label.kind {
            NodeKind::Text => sink.event(&XmlEvent::Text(t.label.name.to_string()))?,
            NodeKind::Element => {
                sink.event(&XmlEvent::StartElement(t.label.name.to_string()))?;
                emit_forest(&t.children, sink)?;
                sink.event(&XmlEvent::End)?;
            }
            NodeKind::Attribute => {
                sink.event(&XmlEvent::StartAttribute(t.label.name.to_string()))?;
                emit_forest(&t.children, sink)?;
                sink.event(&XmlEvent::End)?;
            }
        }
    }
    Ok(())
}

pub fn forest_events(f: &Forest) -> Vec<XmlEvent> {
    let mut out = Vec::new();
    emit_forest(f, &mut out).expect("vec sink is infallible");
    out.push(XmlEvent::Eof);
    out
}

#[derive(Debug)]
enum Frame {
    Element(String),
    /// Attribute collected into the enclosing start tag; `usize` counts
    /// nested markup whose text is folded into the value.
    Attribute { name: String, value: String, nested: usize },
}

/// Serializes events to UTF-8 XML.
///
/// Attributes arriving while a start tag is still open become real
/// attributes; anywhere else they are written as elements. Adjacent text
/// events come out concatenated.
pub struct XmlWriter<W: Write> {
    out: W,
    stack: Vec<Frame>,
    open_tag: Option<(String, Vec<(String, String)>)>,
    bytes: usize,
}

impl<W: Write> XmlWriter<W> {
    pub fn new(out: W) -> Self {
        XmlWriter { out, stack: Vec::new(), open_tag: None, bytes: 0 }
    }

    pub fn bytes_written(&self) -> usize {
        self.bytes
    }

    pub fn into_inner(self) -> W {
        self.out
    }

    fn write(&mut self, s: &str) -> Result<()> {
        self.bytes += s.len();
        self.out.write_all(s.as_bytes())?;
        Ok(())
    }

    fn flush_open_tag(&mut self, self_close: bool) -> Result<()> {
        if let Some((name, attrs)) = self.open_tag.take() {
            let mut s = format!("<{name}");
            for (k, v) in attrs {
                s.push_str(&format!(" {k}=\"{}\"", escape_attr(&v)));
            }
            s.push_str(if self_close { "/>" } else { ">" });
            self.write(&s)?;
        }
        Ok(())
    }
}

fn escape_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            c => out.push(c),
        }
    }
    out
}

fn escape_attr(s: &str) -> String {
    escape_text(s).replace('"', "&quot;")
}

impl<W: Write> EventSink for XmlWriter<W> {
    fn event(&mut self, ev: &XmlEvent) -> Result<()> {
        if let Some(Frame::Attribute { value, nested, .. }) = self.stack.last_mut() {
            match ev {
                XmlEvent::StartElement(_) | XmlEvent::StartAttribute(_) => *nested += 1,
                XmlEvent::Text(s) => value.push_str(s),
                XmlEvent::End if *nested > 0 => *nested -= 1,
                XmlEvent::End => {
                    if let Some(Frame::Attribute { name, value, .. }) = self.stack.pop() {
                        if let Some((_, attrs)) = self.open_tag.as_mut() {
                            attrs.push((name, value));
                        }
                    }
                }
                XmlEvent::Eof => return Err(Error::Xml("Eof inside an attribute".into())),
            }
            return Ok(());
        }
        match ev {
            XmlEvent::StartAttribute(n) if self.open_tag.is_some() => {
                self.stack.push(Frame::Attribute { name: n.clone(), value: String::new(), nested: 0 });
            }
            XmlEvent::StartElement(n) | XmlEvent::StartAttribute(n) => {
                self.flush_open_tag(false)?;
                self.open_tag = Some((n.clone(), Vec::new()));
                self.stack.push(Frame::Element(n.clone()));
            }
            XmlEvent::Text(s) => {
                self.flush_open_tag(false)?;
                self.write(&escape_text(s))?;
            }
            XmlEvent::End => match self.stack.pop() {
                Some(Frame::Element(name)) => {
                    if self.open_tag.is_some() {
                        self.flush_open_tag(true)?;
                    } else {
                        self.write(&format!("</{name}>"))?;
                    }
                }
                _ => return Err(Error::Xml("unbalanced End event".into())),
            },
            XmlEvent::Eof => {
                if !self.stack.is_empty() {
                    return Err(Error::Xml("Eof inside an open element".into()));
                }
                self.out.flush()?;
            }
        }
        Ok(())
    }
}

/// Serialize a forest to an XML string.
pub fn forest_to_xml(f: &Forest) -> String {
    events_to_xml(&forest_events(f)).expect("forest events are balanced")
}

pub fn events_to_xml(events: &[XmlEvent]) -> Result<String> {
    let mut w = XmlWriter::new(Vec::new());
    for ev in events {
        w.event(ev)?;
    }
    Ok(String::from_utf8(w.into_inner()).expect("writer emits UTF-8"))
}

/// Parse an XML document into a forest.
pub fn xml_to_forest(xml: &str) -> Result<Forest> {
    build_forest(&mut XmlReader::new(xml.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::parse_term;
    use XmlEvent::*;

    #[test]
    fn book_snippet() {
        let ev = read_events(r#"<book isbn="123"><author>Knuth</author></book>"#).unwrap();
        assert_eq!(
            ev,
            vec![
                StartElement("book".into()),
                StartAttribute("isbn".into()),
                Text("123".into()),
                End,
                StartElement("author".into()),
                Text("Knuth".into()),
                End,
                End,
                Eof
            ]
        );
    }

    #[test]
    fn empty_element() {
        assert_eq!(read_events("<a/>").unwrap(), vec![StartElement("a".into()), End, Eof]);
        assert_eq!(xml_to_forest("<a/>").unwrap(), parse_term("a()").unwrap());
    }

    #[test]
    fn figure_one_forest() {
        let xml = "<book isbn=\"123\" price=\"$99\"><author>Knuth\n  </author><title>Art of Programming</title>\n  </book>";
        let f = xml_to_forest(xml).unwrap();
        let expected = parse_term(
            r#"book(@isbn(#"123") @price(#"$99") author(#"Knuth") title(#"Art of Programming"))"#,
        )
        .unwrap();
        assert_eq!(f, expected);
        assert_eq!(f.0[0].children.len(), 4);
    }

    #[test]
    fn coalesces_entities_and_cdata() {
        let f = xml_to_forest("<a>x &amp; y<![CDATA[<z>]]></a>").unwrap();
        assert_eq!(f, Forest(vec![Tree::element("a", Forest(vec![Tree::text("x & y<z>")]))]));
    }

    #[test]
    fn skips_comments_and_pis() {
        let f = xml_to_forest("<?xml version=\"1.0\"?><!-- c --><a><?pi x?>t<!-- d --></a>").unwrap();
        assert_eq!(f, parse_term(r#"a(#"t")"#).unwrap());
    }

    #[test]
    fn whitespace_policy() {
        let xml = "<a> <b/> x </a>";
        assert_eq!(xml_to_forest(xml).unwrap(), parse_term(r#"a(b() #"x")"#).unwrap());
        let mut src = XmlReader::with_whitespace(xml.as_bytes(), Whitespace::Preserve);
        let f = build_forest(&mut src).unwrap();
        assert_eq!(f, parse_term(r#"a(#" " b() #" x ")"#).unwrap());
    }

    #[test]
    fn malformed_is_error() {
        assert!(read_events("<a><b></a>").is_err());
        assert!(read_events("<a>").is_err());
    }

    #[test]
    fn writer_escapes_and_attributes() {
        let f = parse_term(r#"a(@k(#"1<\"2") #"x&y" b())"#).unwrap();
        assert_eq!(forest_to_xml(&f), r#"<a k="1&lt;&quot;2">x&amp;y<b/></a>"#);
    }

    #[test]
    fn late_attribute_is_written_as_element() {
        let f = parse_term(r#"a(b() @k(#"v"))"#).unwrap();
        assert_eq!(forest_to_xml(&f), "<a><b/><k>v</k></a>");
    }

    #[test]
    fn adjacent_text_coalesces_in_output() {
        let f = Forest(vec![Tree::element("out", Forest(vec![Tree::text("Jim"), Tree::text("Li")]))]);
        assert_eq!(forest_to_xml(&f), "<out>JimLi</out>");
    }

    #[test]
    fn unbalanced_build_is_error() {
        let mut src = VecSource::new(vec![End, Eof]);
        assert!(build_forest(&mut src).is_err());
        let mut src = VecSource::new(vec![StartElement("a".into()), Eof]);
        assert!(build_forest(&mut src).is_err());
    }
}
