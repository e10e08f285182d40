//! Direct recursive interpreter. Nodes are addressed by their child-index
//! path from a virtual document root whose children are the input forest,
//! so lexicographic order on addresses is document order.

use std::collections::BTreeSet;

use super::{Axis, NodeTest, Predicate, Query, Step, INPUT};
use crate::error::{Error, Result};
use crate::forest::{Forest, NodeKind, Tree};

/// Child-index path; the empty path is the document root.
pub type NodeRef = Vec<usize>;

fn children<'a>(doc: &'a Forest, r: &[usize]) -> &'a [Tree] {
    match node(doc, r) {
        None => &doc.0,
        Some(t) => &t.children.0,
    }
}

fn node<'a>(doc: &'a Forest, r: &[usize]) -> Option<&'a Tree> {
    let (first, rest) = r.split_first()?;
    let mut t = &doc.0[*first];
    for &i in rest {
        t = &t.children.0[i];
    }
    Some(t)
}

fn test_matches(test: &NodeTest, t: &Tree) -> bool {
    match test {
        NodeTest::Name(n) => t.label.kind != NodeKind::Text && &*t.label.name == n,
        NodeTest::Star => t.label.kind != NodeKind::Text,
        NodeTest::Text => t.label.kind == NodeKind::Text,
        NodeTest::Node => true,
    }
}

fn descendants(doc: &Forest, r: &mut NodeRef, out: &mut Vec<NodeRef>) {
    for i in 0..children(doc, r).len() {
        r.push(i);
        out.push(r.clone());
        descendants(doc, r, out);
        r.pop();
    }
}

fn axis_nodes(doc: &Forest, r: &NodeRef, axis: Axis) -> Vec<NodeRef> {
    match axis {
        Axis::Child => (0..children(doc, r).len())
            .map(|i| {
                let mut c = r.clone();
                c.push(i);
                c
            })
            .collect(),
        Axis::Descendant => {
            let mut out = Vec::new();
            descendants(doc, &mut r.clone(), &mut out);
            out
        }
        Axis::FollowingSibling => match r.split_last() {
            None => Vec::new(),
            Some((&i, parent)) => (i + 1..children(doc, parent).len())
                .map(|j| {
                    let mut c = parent.to_vec();
                    c.push(j);
                    c
                })
                .collect(),
        },
    }
}

/// Nodes selected by `steps` from `start`, in document order, without
/// duplicates. Predicates are evaluated directly.
pub fn select_nodes(doc: &Forest, start: &NodeRef, steps: &[Step]) -> Vec<NodeRef> {
    let mut current = vec![start.clone()];
    for step in steps {
        let mut next = BTreeSet::new();
        for r in &current {
            for c in axis_nodes(doc, r, step.axis) {
                let t = node(doc, &c).expect("axis yields real nodes");
                if test_matches(&step.test, t) && step.preds.iter().all(|p| holds(doc, &c, p)) {
                    next.insert(c);
                }
            }
        }
        current = next.into_iter().collect();
    }
    current
}

/// Steps used for a string comparison: a final name or `*` test compares
/// the text children of the selected nodes.
pub(crate) fn comparison_steps(steps: &[Step]) -> Vec<Step> {
    let mut out = steps.to_vec();
    if matches!(steps.last(), Some(s) if matches!(s.test, NodeTest::Name(_) | NodeTest::Star)) {
        out.push(Step::new(Axis::Child, NodeTest::Text));
    }
    out
}

fn holds(doc: &Forest, at: &NodeRef, p: &Predicate) -> bool {
    match p {
        Predicate::Exists(s) => !select_nodes(doc, at, s).is_empty(),
        Predicate::Empty(s) => select_nodes(doc, at, s).is_empty(),
        Predicate::Eq(s, v) | Predicate::Neq(s, v) => {
            let want_eq = matches!(p, Predicate::Eq(..));
            select_nodes(doc, at, &comparison_steps(s)).iter().any(|r| {
                let t = node(doc, r).unwrap();
                t.label.kind == NodeKind::Text && ((t.label.name.trim() == v.trim()) == want_eq)
            })
        }
    }
}

#[derive(Clone)]
enum Value {
    Node(NodeRef),
    Forest(Forest),
}

/// Evaluate `q` on the input forest bound to `$input`. Adjacent text nodes
/// in the result are left unmerged.
pub fn interpret(q: &Query, input: &Forest) -> Result<Forest> {
    let mut env = vec![(INPUT.to_string(), Value::Node(Vec::new()))];
    let mut out = Vec::new();
    eval(q, input, &mut env, &mut out)?;
    Ok(Forest(out))
}

fn lookup<'e>(env: &'e [(String, Value)], v: &str) -> Result<&'e Value> {
    env.iter()
        .rev()
        .find(|(n, _)| n == v)
        .map(|(_, val)| val)
        .ok_or_else(|| Error::Scope(vec![format!("`${v}` is not bound")]))
}

fn copy_node(doc: &Forest, r: &NodeRef, out: &mut Vec<Tree>) {
    match node(doc, r) {
        None => out.extend(doc.0.iter().cloned()),
        Some(t) => out.push(t.clone()),
    }
}

fn start_node(env: &[(String, Value)], v: &str) -> Result<NodeRef> {
    match lookup(env, v)? {
        Value::Node(r) => Ok(r.clone()),
        Value::Forest(_) => Err(Error::Scope(vec![format!("`${v}` is not a node and cannot start a path")])),
    }
}

fn eval(q: &Query, doc: &Forest, env: &mut Vec<(String, Value)>, out: &mut Vec<Tree>) -> Result<()> {
    match q {
        Query::Element { name, children } => {
            let mut kids = Vec::new();
            for c in children {
                eval(c, doc, env, &mut kids)?;
            }
            out.push(Tree::element(name.as_str(), Forest(kids)));
        }
        Query::Str(s) => out.push(Tree::text(s.as_str())),
        Query::Seq(items) => {
            for c in items {
                eval(c, doc, env, out)?;
            }
        }
        Query::Path(p) if p.is_var() => match lookup(env, &p.start)? {
            Value::Node(r) => copy_node(doc, r, out),
            Value::Forest(f) => out.extend(f.0.iter().cloned()),
        },
        Query::Path(p) => {
            let start = start_node(env, &p.start)?;
            for r in select_nodes(doc, &start, &p.steps) {
                copy_node(doc, &r, out);
            }
        }
        Query::For { var, path, body } => {
            let start = start_node(env, &path.start)?;
            let nodes = if path.is_var() { vec![start] } else { select_nodes(doc, &start, &path.steps) };
            for r in nodes {
                env.push((var.clone(), Value::Node(r)));
                let res = eval(body, doc, env, out);
                env.pop();
                res?;
            }
        }
        Query::Let { var, bound, body } => {
            let mut v = Vec::new();
            eval(bound, doc, env, &mut v)?;
            env.push((var.clone(), Value::Forest(Forest(v))));
            let res = eval(body, doc, env, out);
            env.pop();
            res?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::xml_to_forest;
    use crate::query::parse_query;
    use crate::term::print_term;

    fn run(q: &str, xml: &str) -> String {
        let doc = xml_to_forest(xml).unwrap();
        print_term(&interpret(&parse_query(q).unwrap(), &doc).unwrap().normalize())
    }

    #[test]
    fn person_query() {
        let q = r#"<out>{ for $b in $input/person[./p_id/text() = "person0"]
                    return let $r := $b/name/text() return $r }</out>"#;
        let doc1 = "<person><p_id><a/>person0</p_id><name>Jim\n</name><c/><name>Li</name></person>";
        let doc2 = "<person><p_id><a/>perso7</p_id><name>Jim\n</name><c/><p_id>person0</p_id></person>";
        assert_eq!(run(q, doc1), r#"out(#"JimLi")"#);
        assert_eq!(run(q, doc2), r#"out(#"Jim")"#);
    }

    #[test]
    fn following_sibling_and_descendant() {
        let xml = "<r><a/><b/><a><b/></a></r>";
        assert_eq!(run("$input/r/a/following-sibling::*", xml), "b() a(b())");
        assert_eq!(run("$input//b", xml), "b() b()");
        assert_eq!(run("$input/r/*[./b]", xml), "a(b())");
        assert_eq!(run("$input/r/*[empty(./b)]", xml), "a() b()");
    }

    #[test]
    fn selection_is_deduplicated() {
        assert_eq!(run("$input//a//b", "<a><a><b/></a></a>"), "b()");
    }

    #[test]
    fn neq_is_existential() {
        let xml = "<r><x>1</x><x>2</x></r>";
        assert_eq!(run(r#"$input/r[./x != "1"]"#, xml).len() > 0, true);
        assert_eq!(run(r#"$input/r[./x = "3"]"#, xml), "eps");
    }
}
