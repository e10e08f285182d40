//! Python bindings for the xqmft compiler and streaming engine.

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use xqmft::compose::Mode;
use xqmft::events::{forest_to_xml, xml_to_forest, XmlReader, XmlWriter};
use xqmft::gen::{GenSpec, Generator, Profile};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// An XML forest held in memory.
#[pyclass(name = "Forest", module = "xqmft_py", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyForest(pub xqmft::Forest);

#[pymethods]
impl PyForest {
    #[staticmethod]
    fn from_xml(xml: &str) -> PyResult<Self> {
        xml_to_forest(xml).map(PyForest).map_err(err)
    }

    fn to_xml(&self) -> String {
        forest_to_xml(&self.0)
    }

    /// Number of nodes.
    fn size(&self) -> usize {
        self.0.node_count()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0.normalize() == other.0.normalize()
    }

    fn __str__(&self) -> String {
        self.to_xml()
    }

    fn __repr__(&self) -> String {
        format!("Forest({:?})", self.to_xml())
    }
}

/// A MinXQuery program.
#[pyclass(name = "Query", module = "xqmft_py", frozen)]
pub struct PyQuery(xqmft::query::Query);

#[pymethods]
impl PyQuery {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        xqmft::query::parse_query(text).map(PyQuery).map_err(err)
    }

    /// A built-in query by id, e.g. `q01` or `person`.
    #[staticmethod]
    fn corpus(id: &str) -> PyResult<Self> {
        xqmft::corpus::query(id).map(PyQuery).ok_or_else(|| err(format!("no built-in query `{id}`")))
    }

    fn size(&self) -> usize {
        xqmft::query::query_size(&self.0)
    }

    fn compile(&self) -> PyResult<PyMft> {
        xqmft::compile::compile(&self.0).map(PyMft).map_err(err)
    }

    /// Evaluate directly, without compiling.
    fn interpret(&self, doc: &PyForest) -> PyResult<PyForest> {
        xqmft::query::interpret(&self.0, &doc.0).map(PyForest).map_err(err)
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }
}

/// A macro forest transducer.
#[pyclass(name = "Mft", module = "xqmft_py", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyMft(pub xqmft::Mft);

#[pymethods]
impl PyMft {
    #[new]
    fn new(rules: &str) -> PyResult<Self> {
        xqmft::mft::parse_mft(rules).map(PyMft).map_err(err)
    }

    #[staticmethod]
    fn person() -> PyResult<Self> {
        xqmft::corpus::m_person().map(PyMft).map_err(err)
    }

    fn to_text(&self) -> String {
        xqmft::mft::print_mft(&self.0)
    }

    /// One of `TT`, `FT`, `MTT`, `MFT`.
    fn classify(&self) -> String {
        xqmft::mft::classify(&self.0).to_string()
    }

    fn size(&self) -> usize {
        xqmft::mft::size(&self.0)
    }

    fn state_count(&self) -> usize {
        self.0.states.len()
    }

    fn param_count(&self) -> usize {
        self.0.param_count()
    }

    fn optimize(&self) -> Self {
        PyMft(xqmft::optimize::optimize(&self.0))
    }

    fn evaluate(&self, doc: &PyForest) -> PyResult<PyForest> {
        xqmft::mft::evaluate(&self.0, &doc.0).map(PyForest).map_err(err)
    }

    /// Stream an XML string through the transducer. Returns the output
    /// and the run statistics.
    fn stream(&self, py: Python<'_>, xml: &str) -> PyResult<(String, BTreeMap<&'static str, f64>)> {
        let m = self.0.clone();
        let xml = xml.to_string();
        py.detach(move || {
            let mut out = Vec::new();
            let stats = {
                let mut w = XmlWriter::new(&mut out);
                let mut src = XmlReader::new(xml.as_bytes());
                xqmft::stream::stream_run(&m, &mut src, &mut w).map_err(err)?
            };
            Ok((String::from_utf8(out).map_err(err)?, stats_map(&stats)))
        })
    }

    /// Stream a generated document and report statistics only.
    #[pyo3(signature = (profile = "xmark-lite", size = 10_000, seed = 0))]
    fn measure(&self, py: Python<'_>, profile: &str, size: usize, seed: u64) -> PyResult<BTreeMap<&'static str, f64>> {
        let p: Profile = profile.parse().map_err(err)?;
        let m = self.0.clone();
        py.detach(move || {
            let stats = xqmft::stream::measure(&m, &mut Generator::new(GenSpec::new(p, size, seed))).map_err(err)?;
            Ok(stats_map(&stats))
        })
    }

    fn __str__(&self) -> String {
        self.to_text()
    }

    fn __repr__(&self) -> String {
        format!("Mft(states={}, class={})", self.0.states.len(), self.classify())
    }
}

fn stats_map(s: &xqmft::stream::StreamStats) -> BTreeMap<&'static str, f64> {
    BTreeMap::from([
        ("peak_retained", s.peak_retained as f64),
        ("peak_suspensions", s.peak_suspensions as f64),
        ("events_in", s.events_in as f64),
        ("events_out", s.events_out as f64),
        ("elapsed_ms", s.elapsed.as_secs_f64() * 1e3),
    ])
}

/// Compose two transducers in pipeline order (`first` runs first).
#[pyfunction]
fn compose(first: &PyMft, second: &PyMft, mode: &str) -> PyResult<(PyMft, BTreeMap<&'static str, usize>)> {
    let mode: Mode = mode.parse().map_err(err)?;
    let (m, rep) = xqmft::compose::compose(&first.0, &second.0, mode).map_err(err)?;
    Ok((PyMft(m), BTreeMap::from([("size", rep.size), ("bound", rep.bound())])))
}

/// A generated document as XML text.
#[pyfunction]
#[pyo3(signature = (profile = "xmark-lite", size = 1000, seed = 0))]
fn generate(profile: &str, size: usize, seed: u64) -> PyResult<String> {
    let p: Profile = profile.parse().map_err(err)?;
    let mut out = Vec::new();
    {
        let mut w = XmlWriter::new(&mut out);
        xqmft::gen::generate_doc(GenSpec::new(p, size, seed), &mut w).map_err(err)?;
        xqmft::events::EventSink::event(&mut w, &xqmft::events::XmlEvent::Eof).map_err(err)?;
    }
    String::from_utf8(out).map_err(err)
}

#[pymodule]
fn xqmft_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyForest>()?;
    m.add_class::<PyQuery>()?;
    m.add_class::<PyMft>()?;
    m.add_function(wrap_pyfunction!(compose, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add("QUERIES", xqmft::corpus::QUERIES.iter().map(|(id, _)| *id).collect::<Vec<_>>())?;
    Ok(())
}
