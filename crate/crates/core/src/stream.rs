//! Single-pass evaluation of a transducer over an event stream.
//!
//! The input is parsed on demand into reference-counted cells. A cell holds
//! one forest position: unread, empty, or a head node with cursors to its
//! children and its following siblings. A node stays in memory exactly as
//! long as some pending computation holds a cursor reaching it, so buffering
//! happens only where the transducer needs it.
//!
//! Parameters are call-by-need: an argument used by a single consumer is
//! streamed straight to the output, a shared one is evaluated once and kept.

use std::cell::{Cell, OnceCell, RefCell};
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::events::{EventSink, EventSource, NullSink, XmlEvent};
use crate::forest::{Forest, Label, NodeKind, Tree};
use crate::mft::{size, Evaluator, Guard, Mft, OutLabel, Rhs, RhsItem, StateId, StateRules, Var};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StreamStats {
    /// Largest number of input nodes held in memory at once.
    pub peak_retained: usize,
    /// Largest number of live parameter suspensions.
    pub peak_suspensions: usize,
    pub events_in: usize,
    pub events_out: usize,
    pub elapsed: Duration,
}

impl fmt::Display for StreamStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "peak_retained={}", self.peak_retained)?;
        writeln!(f, "peak_suspensions={}", self.peak_suspensions)?;
        writeln!(f, "events_in={}", self.events_in)?;
        writeln!(f, "events_out={}", self.events_out)?;
        write!(f, "elapsed_ms={:.3}", self.elapsed.as_secs_f64() * 1e3)
    }
}

#[derive(Default)]
struct Meter {
    live: Cell<usize>,
    peak: Cell<usize>,
}

impl Meter {
    fn inc(&self) {
        let n = self.live.get() + 1;
        self.live.set(n);
        self.peak.set(self.peak.get().max(n));
    }

    fn dec(&self) {
        self.live.set(self.live.get() - 1);
    }
}

type Cursor = Rc<InCell>;

enum Slot {
    Unread,
    Empty,
    Node(Head),
}

struct Head {
    label: Label,
    children: Cursor,
    next: Cursor,
    meter: Rc<Meter>,
}

struct InCell {
    slot: RefCell<Slot>,
}

fn cell(slot: Slot) -> Cursor {
    Rc::new(InCell { slot: RefCell::new(slot) })
}

fn release(slot: &mut Slot, pending: &mut Vec<Cursor>) {
    if let Slot::Node(h) = std::mem::replace(slot, Slot::Empty) {
        h.meter.dec();
        pending.push(h.children);
        pending.push(h.next);
    }
}

// Long sibling chains would overflow the stack with the derived drop.
impl Drop for InCell {
    fn drop(&mut self) {
        let mut pending = Vec::new();
        release(self.slot.get_mut(), &mut pending);
        while let Some(c) = pending.pop() {
            if let Ok(mut c) = Rc::try_unwrap(c) {
                release(c.slot.get_mut(), &mut pending);
            }
        }
    }
}

struct Parser<'s> {
    src: &'s mut dyn EventSource,
    frontier: Option<Cursor>,
    /// Sibling cells of the open elements, innermost last.
    open: Vec<Cursor>,
    meter: Rc<Meter>,
    events: usize,
    done: bool,
}

impl<'s> Parser<'s> {
    fn advance(&mut self) -> Result<()> {
        let ev = self.src.next_event()?;
        let Some(cur) = self.frontier.take() else {
            return Err(Error::Xml("read past the end of the input".into()));
        };
        let fill = |slot: Slot| *cur.slot.borrow_mut() = slot;
        match ev {
            XmlEvent::StartElement(_) | XmlEvent::StartAttribute(_) => {
                let label = match ev {
                    XmlEvent::StartElement(n) => Label::element(n),
                    XmlEvent::StartAttribute(n) => Label::attribute(n),
                    _ => unreachable!(),
                };
                let (children, next) = (cell(Slot::Unread), cell(Slot::Unread));
                self.meter.inc();
                fill(Slot::Node(Head { label, children: children.clone(), next: next.clone(), meter: self.meter.clone() }));
                self.open.push(next);
                self.frontier = Some(children);
            }
            XmlEvent::Text(s) => {
                let next = cell(Slot::Unread);
                self.meter.inc();
                fill(Slot::Node(Head {
                    label: Label::text(s),
                    children: cell(Slot::Empty),
                    next: next.clone(),
                    meter: self.meter.clone(),
                }));
                self.frontier = Some(next);
            }
            XmlEvent::End => {
                fill(Slot::Empty);
                self.frontier = Some(self.open.pop().ok_or_else(|| Error::Xml("unbalanced End event".into()))?);
            }
            XmlEvent::Eof => {
                if !self.open.is_empty() {
                    return Err(Error::Xml("input ended inside an open element".into()));
                }
                fill(Slot::Empty);
                self.done = true;
                return Ok(());
            }
        }
        self.events += 1;
        Ok(())
    }
}

/// Suffix liveness: bit `i` for `x_i`, bit `2 + k` for `y_k`. Parameters
/// beyond the mask share the top bit, so they are kept conservatively.
type Live = u128;

fn var_bit(v: Var) -> Live {
    1 << v.index()
}

fn param_bit(k: usize) -> Live {
    if k < 125 {
        1 << (2 + k)
    } else {
        1 << 127
    }
}

fn item_live(it: &RhsItem) -> Live {
    let mut l = 0;
    match it {
        RhsItem::Param(k) => l |= param_bit(*k),
        RhsItem::Node { children, .. } => children.0.iter().for_each(|c| l |= item_live(c)),
        RhsItem::Call { input, args, .. } => {
            l |= var_bit(*input);
            for a in args {
                a.0.iter().for_each(|c| l |= item_live(c));
            }
        }
    }
    l
}

fn index_live(rhs: &Rhs, out: &mut HashMap<*const Rhs, Vec<Live>>) {
    let mut suffix = vec![0; rhs.0.len() + 1];
    for (j, it) in rhs.0.iter().enumerate().rev() {
        suffix[j] = suffix[j + 1] | item_live(it);
        match it {
            RhsItem::Node { children, .. } => index_live(children, out),
            RhsItem::Call { args, .. } => args.iter().for_each(|a| index_live(a, out)),
            RhsItem::Param(_) => {}
        }
    }
    out.insert(rhs as *const Rhs, suffix);
}

struct Env<'m> {
    label: Option<Label>,
    x: [Option<Cursor>; 3],
    params: Vec<Option<Rc<Thunk<'m>>>>,
}

impl Env<'_> {
    /// Drop every cursor and parameter not in `live`.
    fn trim(&mut self, live: Live) {
        for v in [Var::X0, Var::X1, Var::X2] {
            if live & var_bit(v) == 0 {
                self.x[v.index()] = None;
            }
        }
        for (i, p) in self.params.iter_mut().enumerate() {
            if live & param_bit(i + 1) == 0 {
                *p = None;
            }
        }
    }
}

struct Thunk<'m> {
    rhs: &'m Rhs,
    env: RefCell<Option<Env<'m>>>,
    stay: usize,
    value: OnceCell<Rc<Vec<Tree>>>,
    meter: Rc<Meter>,
}

impl Drop for Thunk<'_> {
    fn drop(&mut self) {
        self.meter.dec();
    }
}

struct TailCall<'m> {
    state: StateId,
    input: Cursor,
    params: Vec<Option<Rc<Thunk<'m>>>>,
    stay: usize,
}

enum Out<'o> {
    Sink(&'o mut dyn EventSink),
    Buf(&'o mut Vec<Tree>),
}

fn start_event(label: &Label) -> XmlEvent {
    match label.kind {
        NodeKind::Element => XmlEvent::StartElement(label.name.to_string()),
        NodeKind::Attribute => XmlEvent::StartAttribute(label.name.to_string()),
        NodeKind::Text => XmlEvent::Text(label.name.to_string()),
    }
}

fn emit_trees(trees: &[Tree], sink: &mut dyn EventSink) -> Result<()> {
    for t in trees {
        sink.event(&start_event(&t.label))?;
        if t.label.kind != NodeKind::Text {
            emit_trees(&t.children.0, sink)?;
            sink.event(&XmlEvent::End)?;
        }
    }
    Ok(())
}

struct Counting<'a> {
    inner: &'a mut dyn EventSink,
    n: usize,
}

impl EventSink for Counting<'_> {
    fn event(&mut self, ev: &XmlEvent) -> Result<()> {
        if *ev != XmlEvent::Eof {
            self.n += 1;
        }
        self.inner.event(ev)
    }
}

struct Engine<'m, 's> {
    m: &'m Mft,
    index: Vec<StateRules>,
    live: HashMap<*const Rhs, Vec<Live>>,
    budget: usize,
    parser: RefCell<Parser<'s>>,
    thunks: Rc<Meter>,
    trace: Option<RefCell<Vec<String>>>,
}

impl<'m, 's> Engine<'m, 's> {
    fn new(m: &'m Mft, src: &'s mut dyn EventSource, trace: bool) -> (Self, Cursor) {
        let mut live = HashMap::new();
        for r in &m.rules {
            index_live(&r.rhs, &mut live);
        }
        let root = cell(Slot::Unread);
        let parser = Parser {
            src,
            frontier: Some(root.clone()),
            open: Vec::new(),
            meter: Rc::new(Meter::default()),
            events: 0,
            done: false,
        };
        let engine = Engine {
            m,
            index: m.index(),
            live,
            budget: 10 * size(m).max(1),
            parser: RefCell::new(parser),
            thunks: Rc::new(Meter::default()),
            trace: trace.then(|| RefCell::new(Vec::new())),
        };
        (engine, root)
    }

    fn suffix(&self, rhs: &Rhs) -> &[Live] {
        &self.live[&(rhs as *const Rhs)]
    }

    /// The head of the forest at `c`, reading input as far as needed.
    fn read(&self, c: &Cursor) -> Result<Option<(Label, Cursor, Cursor)>> {
        loop {
            match &*c.slot.borrow() {
                Slot::Empty => return Ok(None),
                Slot::Node(h) => return Ok(Some((h.label.clone(), h.children.clone(), h.next.clone()))),
                Slot::Unread => {}
            }
            let mut p = self.parser.borrow_mut();
            if p.done {
                return Err(Error::Invariant("cursor past the end of the input".into()));
            }
            p.advance()?;
        }
    }

    fn drain(&self) -> Result<()> {
        let mut p = self.parser.borrow_mut();
        while !p.done {
            p.advance()?;
        }
        Ok(())
    }

    fn call(
        &self,
        mut state: StateId,
        mut input: Cursor,
        mut params: Vec<Option<Rc<Thunk<'m>>>>,
        mut stay: usize,
        out: &mut Out,
    ) -> Result<()> {
        loop {
            if stay > self.budget {
                return Err(Error::StayBudget { state: self.m.state(state).name.clone(), budget: self.budget });
            }
            let head = self.read(&input)?;
            let Some(ri) = Evaluator::select(&self.index, state, head.as_ref().map(|h| &h.0)) else {
                return Err(Error::Invalid(vec![format!("state `{}` has no applicable rule", self.m.state(state).name)]));
            };
            let rule = &self.m.rules[ri];
            if let Some(t) = &self.trace {
                let g = match &rule.guard {
                    Guard::Symbol(s) => s.to_string(),
                    Guard::TextNode => "%text".into(),
                    Guard::Default => "%t".into(),
                    Guard::Epsilon => "eps".into(),
                };
                t.borrow_mut().push(format!("{}/{g}", self.m.state(state).name));
            }
            let (label, x1, x2) = match head {
                Some((l, c, n)) => (Some(l), Some(c), Some(n)),
                None => (None, None, None),
            };
            let mut env = Env { label, x: [Some(input), x1, x2], params };
            env.trim(self.suffix(&rule.rhs)[0]);
            match stacker::maybe_grow(64 * 1024, 8 * 1024 * 1024, || {
                self.eval_seq(&rule.rhs, &mut env, 0, stay, out, true)
            })? {
                None => return Ok(()),
                Some(t) => {
                    drop(env);
                    (state, input, params, stay) = (t.state, t.input, t.params, t.stay);
                }
            }
        }
    }

    /// Evaluate `rhs`, keeping what `keep` still needs afterwards. With
    /// `tail`, a trailing call is returned instead of being made.
    fn eval_seq(
        &self,
        rhs: &'m Rhs,
        env: &mut Env<'m>,
        keep: Live,
        stay: usize,
        out: &mut Out,
        tail: bool,
    ) -> Result<Option<TailCall<'m>>> {
        let suffix = self.suffix(rhs);
        let n = rhs.0.len();
        for (j, item) in rhs.0.iter().enumerate() {
            let after = suffix[j + 1] | keep;
            match item {
                RhsItem::Node { label, children } => {
                    let label = match label {
                        OutLabel::Fixed(l) => l.clone(),
                        OutLabel::Current => {
                            env.label.clone().ok_or_else(|| Error::Invalid(vec!["%t used on empty input".into()]))?
                        }
                    };
                    if label.kind == NodeKind::Text {
                        env.trim(after);
                        match out {
                            Out::Sink(s) => s.event(&start_event(&label))?,
                            Out::Buf(v) => v.push(Tree::new(label, Forest::empty())),
                        }
                        continue;
                    }
                    match out {
                        Out::Sink(s) => {
                            s.event(&start_event(&label))?;
                            self.eval_seq(children, env, after, stay, out, false)?;
                            if let Out::Sink(s) = out {
                                s.event(&XmlEvent::End)?;
                            }
                        }
                        Out::Buf(v) => {
                            let mut kids = Vec::new();
                            self.eval_seq(children, env, after, stay, &mut Out::Buf(&mut kids), false)?;
                            v.push(Tree::new(label, Forest(kids)));
                        }
                    }
                    env.trim(after);
                }
                RhsItem::Param(k) => {
                    let p = env.params[k - 1].clone().expect("live parameter");
                    env.trim(after);
                    self.force(p, out)?;
                }
                RhsItem::Call { state, input, args } => {
                    let params = args.iter().map(|a| self.suspend(a, env, stay)).collect();
                    let cursor = env.x[input.index()].clone().expect("live input variable");
                    env.trim(after);
                    let stay = if *input == Var::X0 { stay + 1 } else { 0 };
                    if tail && j + 1 == n {
                        return Ok(Some(TailCall { state: *state, input: cursor, params, stay }));
                    }
                    self.call(*state, cursor, params, stay, out)?;
                }
            }
        }
        Ok(None)
    }

    fn suspend(&self, a: &'m Rhs, env: &Env<'m>, stay: usize) -> Option<Rc<Thunk<'m>>> {
        if let [RhsItem::Param(k)] = a.0.as_slice() {
            return env.params[k - 1].clone();
        }
        let live = self.suffix(a)[0];
        let sub = Env {
            label: env.label.clone(),
            x: [Var::X0, Var::X1, Var::X2].map(|v| if live & var_bit(v) != 0 { env.x[v.index()].clone() } else { None }),
            params: env
                .params
                .iter()
                .enumerate()
                .map(|(i, p)| if live & param_bit(i + 1) != 0 { p.clone() } else { None })
                .collect(),
        };
        let value = OnceCell::new();
        let env = if a.is_empty() {
            let _ = value.set(Rc::new(Vec::new()));
            None
        } else {
            Some(sub)
        };
        self.thunks.inc();
        Some(Rc::new(Thunk { rhs: a, env: RefCell::new(env), stay, value, meter: self.thunks.clone() }))
    }

    fn run_thunk(&self, t: &Thunk<'m>, out: &mut Out) -> Result<()> {
        let mut env = t.env.borrow_mut().take().expect("unforced suspension keeps its environment");
        if let Some(tc) = self.eval_seq(t.rhs, &mut env, 0, t.stay, out, true)? {
            drop(env);
            self.call(tc.state, tc.input, tc.params, tc.stay, out)?;
        }
        Ok(())
    }

    fn force(&self, t: Rc<Thunk<'m>>, out: &mut Out) -> Result<()> {
        if t.value.get().is_none() && Rc::strong_count(&t) == 1 {
            return self.run_thunk(&t, out);
        }
        let v = match t.value.get() {
            Some(v) => v.clone(),
            None => {
                let mut buf = Vec::new();
                self.run_thunk(&t, &mut Out::Buf(&mut buf))?;
                let v = Rc::new(buf);
                let _ = t.value.set(v.clone());
                v
            }
        };
        match out {
            Out::Sink(s) => emit_trees(&v, *s),
            Out::Buf(b) => {
                b.extend(v.iter().cloned());
                Ok(())
            }
        }
    }

    fn stats(&self, events_out: usize, start: Instant) -> StreamStats {
        let p = self.parser.borrow();
        StreamStats {
            peak_retained: p.meter.peak.get(),
            peak_suspensions: self.thunks.peak.get(),
            events_in: p.events,
            events_out,
            elapsed: start.elapsed(),
        }
    }
}

fn run(m: &Mft, src: &mut dyn EventSource, sink: &mut dyn EventSink, trace: bool) -> Result<(StreamStats, Vec<String>)> {
    let start = Instant::now();
    let (engine, root) = Engine::new(m, src, trace);
    let mut sink = Counting { inner: sink, n: 0 };
    engine.call(m.initial, root, Vec::new(), 0, &mut Out::Sink(&mut sink))?;
    engine.drain()?;
    sink.event(&XmlEvent::Eof)?;
    let stats = engine.stats(sink.n, start);
    Ok((stats, engine.trace.map(|t| t.into_inner()).unwrap_or_default()))
}

/// Run `m` over `src`, writing output events (ending with `Eof`) to `sink`
/// as soon as they are determined.
pub fn stream_run(m: &Mft, src: &mut dyn EventSource, sink: &mut dyn EventSink) -> Result<StreamStats> {
    run(m, src, sink, false).map(|(s, _)| s)
}

/// Statistics of a run whose output is discarded.
pub fn measure(m: &Mft, src: &mut dyn EventSource) -> Result<StreamStats> {
    stream_run(m, src, &mut NullSink)
}

/// Like [`stream_run`], also returning the applied rules in order, written
/// `state/guard`.
pub fn stream_trace(m: &Mft, src: &mut dyn EventSource, sink: &mut dyn EventSink) -> Result<(StreamStats, Vec<String>)> {
    run(m, src, sink, true)
}

enum Msg {
    Out(XmlEvent),
    Need,
    Done(Result<StreamStats>),
}

struct ChanSource {
    tx: mpsc::Sender<Msg>,
    rx: mpsc::Receiver<XmlEvent>,
}

impl EventSource for ChanSource {
    fn next_event(&mut self) -> Result<XmlEvent> {
        let _ = self.tx.send(Msg::Need);
        self.rx.recv().map_err(|_| Error::Xml("input closed before Eof".into()))
    }
}

struct ChanSink(mpsc::Sender<Msg>);

impl EventSink for ChanSink {
    fn event(&mut self, ev: &XmlEvent) -> Result<()> {
        let _ = self.0.send(Msg::Out(ev.clone()));
        Ok(())
    }
}

/// Push-driven engine: feed input events one at a time and get back the
/// output events each one releases.
///
/// The evaluation runs on a worker thread that blocks whenever it needs the
/// next input event.
pub struct StreamEngine {
    input: mpsc::Sender<XmlEvent>,
    msgs: mpsc::Receiver<Msg>,
    pending: Vec<XmlEvent>,
    result: Option<Result<StreamStats>>,
    worker: Option<thread::JoinHandle<()>>,
}

impl StreamEngine {
    pub fn new(m: &Mft) -> Self {
        let (in_tx, in_rx) = mpsc::channel();
        let (msg_tx, msg_rx) = mpsc::channel();
        let m = m.clone();
        let worker = thread::spawn(move || {
            let mut src = ChanSource { tx: msg_tx.clone(), rx: in_rx };
            let mut sink = ChanSink(msg_tx.clone());
            let r = stream_run(&m, &mut src, &mut sink);
            let _ = msg_tx.send(Msg::Done(r));
        });
        let mut e = StreamEngine { input: in_tx, msgs: msg_rx, pending: Vec::new(), result: None, worker: Some(worker) };
        let mut first = Vec::new();
        e.collect(&mut first);
        e.pending = first;
        e
    }

    fn collect(&mut self, out: &mut Vec<XmlEvent>) {
        loop {
            match self.msgs.recv() {
                Ok(Msg::Out(ev)) => out.push(ev),
                Ok(Msg::Need) => return,
                Ok(Msg::Done(r)) => {
                    self.result = Some(r);
                    return;
                }
                Err(_) => {
                    self.result = Some(Err(Error::Invariant("stream worker stopped".into())));
                    return;
                }
            }
        }
    }

    pub fn is_finished(&self) -> bool {
        self.result.is_some()
    }

    /// Consume one input event and return the output it made available.
    pub fn step(&mut self, ev: XmlEvent) -> Result<Vec<XmlEvent>> {
        let mut out = std::mem::take(&mut self.pending);
        match &self.result {
            None => {}
            Some(Ok(_)) => return Err(Error::Xml("event after the end of the input".into())),
            Some(Err(e)) => return Err(Error::Xml(format!("stream already failed: {e}"))),
        }
        let _ = self.input.send(ev);
        self.collect(&mut out);
        match &self.result {
            Some(Err(e)) => Err(Error::Xml(e.to_string())),
            _ => Ok(out),
        }
    }

    /// Statistics once `Eof` has been fed.
    pub fn finish(mut self) -> Result<StreamStats> {
        match self.result.take() {
            Some(r) => r,
            None => Err(Error::Xml("stream not finished; feed Eof first".into())),
        }
    }
}

impl Drop for StreamEngine {
    fn drop(&mut self) {
        // closing the input channel makes a blocked worker fail and exit
        let (tx, _) = mpsc::channel();
        drop(std::mem::replace(&mut self.input, tx));
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::compile;
    use crate::corpus;
    use crate::events::{events_to_xml, forest_events, read_events, xml_to_forest, VecSource};
    use crate::mft::evaluate;
    use crate::optimize::optimize;
    use crate::query::parse_query;

    fn streamed(m: &Mft, xml: &str) -> (String, StreamStats) {
        let mut out = Vec::new();
        let stats = stream_run(m, &mut VecSource::new(read_events(xml).unwrap()), &mut out).unwrap();
        (events_to_xml(&out).unwrap(), stats)
    }

    #[test]
    fn m_person_streams() {
        let m = corpus::m_person().unwrap();
        assert_eq!(streamed(&m, corpus::PERSON_DOC).0, "<out>JimLi</out>");
        assert_eq!(streamed(&m, corpus::PERSON_DOC_VARIANT).0, "<out>Jim</out>");
    }

    #[test]
    fn out_tag_precedes_closing_input() {
        let m = corpus::m_person().unwrap();
        let mut e = StreamEngine::new(&m);
        let events = read_events(corpus::PERSON_DOC).unwrap();
        let mut first_out = None;
        for (i, ev) in events.iter().enumerate() {
            let out = e.step(ev.clone()).unwrap();
            if first_out.is_none() && out.contains(&XmlEvent::StartElement("out".into())) {
                first_out = Some(i);
            }
        }
        let last_end = events.iter().rposition(|ev| *ev == XmlEvent::End).unwrap();
        assert!(first_out.unwrap() < last_end);
        assert!(e.finish().is_ok());
    }

    #[test]
    fn rules_fire_in_hand_order() {
        let m = corpus::m_person().unwrap();
        let mut src = VecSource::new(read_events(corpus::PERSON_DOC).unwrap());
        let (_, trace) = stream_trace(&m, &mut src, &mut NullSink).unwrap();
        let want = ["q1/person", "q2/p_id", "q3/%t", "q3/#\"person0\"", "q4/name", "q5/%text", "q4/name", "q5/%text"];
        let mut it = trace.iter();
        for w in want {
            assert!(it.any(|t| t == w), "{w} missing in order from {trace:?}");
        }
    }

    #[test]
    fn constant_output_on_eof() {
        let m = compile(&parse_query("<r>hello</r>").unwrap()).unwrap();
        let mut e = StreamEngine::new(&m);
        let out = e.step(XmlEvent::Eof).unwrap();
        assert_eq!(events_to_xml(&out).unwrap(), "<r>hello</r>");
        assert_eq!(e.finish().unwrap().events_in, 0);
    }

    #[test]
    fn copy_retains_little() {
        let q = parse_query("<out>{$input/node()}</out>").unwrap();
        let m = optimize(&compile(&q).unwrap());
        let peak = |n: usize| {
            let xml = format!("<r>{}</r>", "<a><b/>x</a>".repeat(n));
            let (out, stats) = streamed(&m, &xml);
            assert_eq!(out, format!("<out>{xml}</out>"));
            stats.peak_retained
        };
        let (small, big) = (peak(1_000), peak(10_000));
        assert!(big <= 3 + 8, "{big}");
        assert_eq!(small, big);
    }

    #[test]
    fn double_buffers_input() {
        let m = optimize(&compile(&corpus::query("double").unwrap()).unwrap());
        let xml = format!("<r>{}</r>", "<a/>".repeat(500));
        let doc = xml_to_forest(&xml).unwrap();
        let (out, stats) = streamed(&m, &xml);
        let want = crate::events::forest_to_xml(&evaluate(&m, &doc).unwrap());
        assert_eq!(out, want);
        assert!(stats.peak_retained >= 500, "{}", stats.peak_retained);
    }

    #[test]
    fn step_fold_matches_run() {
        let m = optimize(&compile(&corpus::query("q01").unwrap()).unwrap());
        let doc = crate::gen::generate_forest(crate::gen::GenSpec::new(crate::gen::Profile::XmarkLite, 300, 4)).unwrap();
        let events = forest_events(&doc);
        let mut e = StreamEngine::new(&m);
        let mut folded = Vec::new();
        for ev in &events {
            folded.extend(e.step(ev.clone()).unwrap());
        }
        let mut direct = Vec::new();
        stream_run(&m, &mut VecSource::new(events), &mut direct).unwrap();
        assert_eq!(folded, direct);
    }

    #[test]
    fn malformed_input_is_reported() {
        let m = corpus::m_person().unwrap();
        let events = vec![XmlEvent::StartElement("person".into()), XmlEvent::Eof];
        assert!(stream_run(&m, &mut VecSource::new(events), &mut NullSink).is_err());
    }
}
