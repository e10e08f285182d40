#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, VecDeque};

use xqmft::compile::compile;
use xqmft::corpus;
use xqmft::mft::{Mft, Rhs, RhsItem, StateId};
use xqmft::optimize::{optimize, ParamId};

/// Parameters that can reach the output: reverse search in the flow graph
/// whose edges run from an occurrence of `y_j` in argument `k` of a call to
/// `p` towards `(p, k)`, and from bare occurrences to a sink.
pub fn flow_oracle(m: &Mft) -> BTreeSet<ParamId> {
    #[derive(Clone, Copy, PartialEq, Eq, Hash)]
    enum Node {
        Out,
        P(StateId, usize),
    }
    fn walk(e: &Rhs, target: Node, from: StateId, edges: &mut Vec<(Node, Node)>) {
        for it in &e.0 {
            match it {
                RhsItem::Param(j) => edges.push((Node::P(from, *j), target)),
                RhsItem::Node { children, .. } => walk(children, target, from, edges),
                RhsItem::Call { state, args, .. } => {
                    for (k, a) in args.iter().enumerate() {
                        walk(a, Node::P(*state, k + 1), from, edges);
                    }
                }
            }
        }
    }
    let mut edges = Vec::new();
    for r in &m.rules {
        walk(&r.rhs, Node::Out, r.state, &mut edges);
    }
    let mut rev: HashMap<Node, Vec<Node>> = HashMap::new();
    for (a, b) in edges {
        rev.entry(b).or_default().push(a);
    }
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([Node::Out]);
    while let Some(n) = queue.pop_front() {
        for &p in rev.get(&n).into_iter().flatten() {
            if let Node::P(q, j) = p {
                if seen.insert((q, j)) {
                    queue.push_back(p);
                }
            }
        }
    }
    seen
}

pub fn corpus_transducers() -> Vec<(String, Mft)> {
    let mut out = vec![("m_person".to_string(), corpus::m_person().unwrap())];
    let ids = corpus::QUERIES.iter().map(|(id, _)| *id).chain(["person", "nested"]);
    for id in ids {
        let m = compile(&corpus::query(id).unwrap()).unwrap();
        out.push((format!("{id}-opt"), optimize(&m)));
        out.push((id.to_string(), m));
    }
    out
}

