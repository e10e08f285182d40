//! Benchmark harness: stream corpus queries over generated documents.

use std::fmt;
use std::io;
use std::time::Duration;

use crate::compile::compile;
use crate::corpus;
use crate::error::{Error, Result};
use crate::events::{EventSink, EventSource, XmlEvent, XmlWriter};
use crate::gen::{GenSpec, Generator, Profile};
use crate::optimize::optimize;
use crate::stream::stream_run;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchSpec {
    pub query: String,
    pub profile: Profile,
    pub size: usize,
    pub reps: usize,
    pub seed: u64,
    pub optimize: bool,
}

impl BenchSpec {
    pub fn new(query: &str, profile: Profile, size: usize) -> Self {
        BenchSpec { query: query.to_string(), profile, size: size.max(1), reps: 3, seed: 0, optimize: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub query: String,
    pub nodes: usize,
    pub input_bytes: usize,
    /// Median over the repetitions.
    pub time: Duration,
    pub peak: usize,
    pub out_bytes: usize,
}

impl fmt::Display for BenchResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "query={} nodes={} ms={:.3} peak={} out_bytes={}",
            self.query,
            self.nodes,
            self.time.as_secs_f64() * 1e3,
            self.peak,
            self.out_bytes
        )
    }
}

/// Counts nodes and serialized bytes of the events passing through.
struct Tee<S> {
    inner: S,
    nodes: usize,
    bytes: XmlWriter<io::Sink>,
}

impl<S: EventSource> EventSource for Tee<S> {
    fn next_event(&mut self) -> Result<XmlEvent> {
        let ev = self.inner.next_event()?;
        if matches!(ev, XmlEvent::StartElement(_) | XmlEvent::StartAttribute(_) | XmlEvent::Text(_)) {
            self.nodes += 1;
        }
        self.bytes.event(&ev)?;
        Ok(ev)
    }
}

pub fn run_one(spec: &BenchSpec) -> Result<BenchResult> {
    let q = corpus::query(&spec.query).ok_or_else(|| Error::Unsupported(format!("unknown query `{}`", spec.query)))?;
    let mut m = compile(&q)?;
    if spec.optimize {
        m = optimize(&m);
    }
    let mut times = Vec::new();
    let mut last = None;
    for _ in 0..spec.reps.max(1) {
        let mut src = Tee {
            inner: Generator::new(GenSpec::new(spec.profile, spec.size, spec.seed)),
            nodes: 0,
            bytes: XmlWriter::new(io::sink()),
        };
        let mut out = XmlWriter::new(io::sink());
        let stats = stream_run(&m, &mut src, &mut out)?;
        times.push(stats.elapsed);
        last = Some(BenchResult {
            query: spec.query.clone(),
            nodes: src.nodes,
            input_bytes: src.bytes.bytes_written(),
            time: Duration::ZERO,
            peak: stats.peak_retained,
            out_bytes: out.bytes_written(),
        });
    }
    times.sort();
    let mut r = last.expect("at least one repetition");
    r.time = times[times.len() / 2];
    Ok(r)
}

/// Run every spec in order.
pub fn run_bench(specs: &[BenchSpec]) -> Result<Vec<BenchResult>> {
    specs.iter().map(run_one).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_format() {
        let mut s = BenchSpec::new("q02", Profile::XmarkLite, 2000);
        s.reps = 1;
        let r = run_one(&s).unwrap();
        let line = r.to_string();
        let keys: Vec<&str> = line.split(' ').map(|kv| kv.split('=').next().unwrap()).collect();
        assert_eq!(keys, ["query", "nodes", "ms", "peak", "out_bytes"]);
        assert!(r.nodes >= 2000 && r.out_bytes > 0 && r.input_bytes > r.out_bytes);
    }

    #[test]
    fn stable_modulo_time() {
        let mut s = BenchSpec::new("q01", Profile::XmarkLite, 1500);
        s.reps = 1;
        let (mut a, mut b) = (run_one(&s).unwrap(), run_one(&s).unwrap());
        a.time = Duration::ZERO;
        b.time = Duration::ZERO;
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_query() {
        assert!(run_one(&BenchSpec::new("q99", Profile::XmarkLite, 10)).is_err());
    }
}
