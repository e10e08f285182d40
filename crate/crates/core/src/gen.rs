//! Deterministic synthetic documents, produced lazily as event streams.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::events::{build_forest, EventSink, EventSource, XmlEvent};
use crate::forest::Forest;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// `site` documents with the element shapes the benchmark queries use.
    XmarkLite,
    /// Single-child chains of the given depth under one root.
    DeepChain { depth: usize },
    /// One root with many small children.
    WideFlat,
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::XmarkLite => f.write_str("xmark-lite"),
            Profile::DeepChain { depth } => write!(f, "deep-chain:{depth}"),
            Profile::WideFlat => f.write_str("wide-flat"),
        }
    }
}

impl FromStr for Profile {
    type Err = Error;

    /// `xmark-lite`, `wide-flat`, `deep-chain` or `deep-chain:<depth>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xmark-lite" => Ok(Profile::XmarkLite),
            "wide-flat" => Ok(Profile::WideFlat),
            "deep-chain" => Ok(Profile::DeepChain { depth: 37 }),
            _ => match s.strip_prefix("deep-chain:").map(str::parse::<usize>) {
                Some(Ok(depth)) if depth >= 2 => Ok(Profile::DeepChain { depth }),
                _ => Err(Error::Unsupported(format!("unknown profile `{s}`"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenSpec {
    pub profile: Profile,
    /// Approximate node count; at least one unit of every kind is emitted.
    pub size: usize,
    pub seed: u64,
}

impl GenSpec {
    pub fn new(profile: Profile, size: usize, seed: u64) -> Self {
        GenSpec { profile, size: size.max(1), seed }
    }
}

/// Lazy event source for a generated document.
pub struct Generator {
    spec: GenSpec,
    rng: ChaCha8Rng,
    queue: VecDeque<XmlEvent>,
    emitted: usize,
    section: usize,
    unit: usize,
    started: bool,
    done: bool,
}

const SECTIONS: [(&str, &str); 4] = [
    ("people", "person"),
    ("open_auctions", "open_auction"),
    ("closed_auctions", "closed_auction"),
    ("regions", "australia"),
];

/// Share of the node budget per section, in percent.
const SHARE: [usize; 4] = [30, 30, 20, 20];

const WORDS: [&str; 8] = ["gold", "silver", "lot", "rare", "mint", "used", "boxed", "signed"];

impl Generator {
    pub fn new(spec: GenSpec) -> Self {
        Generator {
            spec,
            rng: ChaCha8Rng::seed_from_u64(spec.seed),
            queue: VecDeque::new(),
            emitted: 0,
            section: 0,
            unit: 0,
            started: false,
            done: false,
        }
    }

    fn open(&mut self, name: &str) {
        self.queue.push_back(XmlEvent::StartElement(name.to_string()));
        self.emitted += 1;
    }

    fn close(&mut self) {
        self.queue.push_back(XmlEvent::End);
    }

    fn text(&mut self, s: impl Into<String>) {
        self.queue.push_back(XmlEvent::Text(s.into()));
        self.emitted += 1;
    }

    fn leaf(&mut self, name: &str, s: impl Into<String>) {
        self.open(name);
        self.text(s);
        self.close();
    }

    fn word(&mut self) -> &'static str {
        WORDS[self.rng.gen_range(0..WORDS.len())]
    }

    fn person_ref(&mut self) -> String {
        match self.rng.gen_range(0..4) {
            0 => "personXX".to_string(),
            1 => "personYY".to_string(),
            _ => format!("person{}", self.rng.gen_range(0..10)),
        }
    }

    fn person(&mut self, i: usize) {
        self.open("person");
        self.leaf("person_id", format!("person{i}"));
        self.leaf("p_id", format!("person{i}"));
        let w = self.word();
        self.leaf("name", format!("{w} {i}"));
        if self.rng.gen_bool(0.5) {
            self.leaf("homepage", format!("http://www.example.com/~{i}"));
        }
        self.close();
    }

    fn open_auction(&mut self) {
        self.open("open_auction");
        for _ in 0..self.rng.gen_range(1..=3) {
            self.open("bidder");
            self.open("personref");
            let p = self.person_ref();
            self.leaf("personref_person", p);
            self.close();
            let inc = self.rng.gen_range(1..100);
            self.leaf("increase", format!("{inc}.00"));
            self.close();
        }
        let r = self.rng.gen_range(10..1000);
        self.leaf("reserve", format!("{r}.00"));
        self.close();
    }

    fn closed_auction(&mut self) {
        self.open("closed_auction");
        self.open("seller");
        let p = self.person_ref();
        self.leaf("seller_person", p);
        self.close();
        self.open("annotation");
        self.open("description");
        if self.rng.gen_bool(0.5) {
            for name in ["parlist", "listitem", "parlist", "listitem", "text", "emph"] {
                self.open(name);
            }
            let w = self.word();
            self.leaf("keyword", w);
            for _ in 0..6 {
                self.close();
            }
        } else {
            let w = self.word();
            self.leaf("text", w);
        }
        self.close();
        self.close();
        self.close();
    }

    fn item(&mut self, i: usize) {
        self.open("item");
        self.leaf("name", format!("item {i}"));
        self.open("description");
        let (a, b) = (self.word(), self.word());
        self.text(format!("{a} {b}"));
        if self.rng.gen_bool(0.3) {
            let w = self.word();
            self.leaf("keyword", w);
        }
        self.close();
        self.close();
    }

    /// Queue the next chunk of the document; `false` once finished.
    fn refill(&mut self) -> bool {
        if self.done {
            return false;
        }
        match self.spec.profile {
            Profile::XmarkLite => self.refill_xmark(),
            Profile::DeepChain { depth } => self.refill_simple("chain", |g| {
                let labels = ["a", "b", "c"];
                for _ in 1..depth {
                    let l = labels[g.rng.gen_range(0..3)];
                    g.open(l);
                }
                for _ in 1..depth {
                    g.close();
                }
            }),
            Profile::WideFlat => self.refill_simple("flat", |g| {
                let labels = ["a", "b", "c"];
                let l = labels[g.rng.gen_range(0..3)];
                let w = g.word();
                g.leaf(l, w);
            }),
        }
        true
    }

    fn refill_simple(&mut self, root: &str, unit: impl Fn(&mut Self)) {
        if !self.started {
            self.started = true;
            self.open(root);
            return;
        }
        if self.unit == 0 || self.emitted < self.spec.size {
            self.unit += 1;
            unit(self);
        } else {
            self.close();
            self.done = true;
        }
    }

    fn refill_xmark(&mut self) {
        if !self.started {
            self.started = true;
            self.open("site");
            self.open(SECTIONS[0].0);
            return;
        }
        let budget: usize = SHARE[..=self.section].iter().sum::<usize>() * self.spec.size / 100;
        if self.unit == 0 || self.emitted < budget {
            let i = self.unit;
            self.unit += 1;
            match self.section {
                0 => self.person(i),
                1 => self.open_auction(),
                2 => self.closed_auction(),
                _ => {
                    if i == 0 {
                        self.open(SECTIONS[3].1);
                    }
                    self.item(i);
                }
            }
            return;
        }
        if self.section == 3 {
            self.close();
        }
        self.close();
        self.section += 1;
        self.unit = 0;
        if self.section == SECTIONS.len() {
            self.close();
            self.done = true;
        } else {
            self.open(SECTIONS[self.section].0);
        }
    }
}

impl EventSource for Generator {
    fn next_event(&mut self) -> Result<XmlEvent> {
        while self.queue.is_empty() {
            if !self.refill() {
                return Ok(XmlEvent::Eof);
            }
        }
        Ok(self.queue.pop_front().expect("queue refilled"))
    }
}

/// Push every event of the document into `sink`, without `Eof`.
pub fn generate_doc(spec: GenSpec, sink: &mut dyn EventSink) -> Result<()> {
    let mut g = Generator::new(spec);
    loop {
        match g.next_event()? {
            XmlEvent::Eof => return Ok(()),
            ev => sink.event(&ev)?,
        }
    }
}

pub fn generate_forest(spec: GenSpec) -> Result<Forest> {
    build_forest(&mut Generator::new(spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::compile;
    use crate::corpus;
    use crate::events::XmlWriter;
    use crate::mft::evaluate;
    use crate::optimize::optimize;
    use crate::query::interpret;

    #[test]
    fn deep_chain_depth() {
        let f = generate_forest(GenSpec::new(Profile::DeepChain { depth: 37 }, 500, 1)).unwrap();
        assert_eq!(f.depth(), 37);
        assert!(f.node_count() >= 500);
    }

    #[test]
    fn sizes_are_close() {
        for p in [Profile::XmarkLite, Profile::WideFlat, Profile::DeepChain { depth: 8 }] {
            let n = generate_forest(GenSpec::new(p, 10_000, 3)).unwrap().node_count();
            assert!((10_000..10_200).contains(&n), "{p}: {n}");
        }
    }

    #[test]
    fn deterministic_bytes() {
        let bytes = |seed| {
            let mut w = XmlWriter::new(Vec::new());
            generate_doc(GenSpec::new(Profile::XmarkLite, 2000, seed), &mut w).unwrap();
            w.into_inner()
        };
        assert_eq!(bytes(7), bytes(7));
        assert_ne!(bytes(7), bytes(8));
    }

    #[test]
    fn minimal_site_runs_every_query() {
        let doc = generate_forest(GenSpec::new(Profile::XmarkLite, 1, 0)).unwrap();
        for (id, _) in corpus::QUERIES {
            let q = corpus::query(id).unwrap();
            let want = interpret(&q, &doc).unwrap().normalize();
            let m = optimize(&compile(&q).unwrap());
            assert_eq!(evaluate(&m, &doc).unwrap().normalize(), want, "{id}");
        }
    }
}
