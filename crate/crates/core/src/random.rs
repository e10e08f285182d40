//! Random forests, transducers and queries for property tests.
//!
//! Generated transducers always terminate: calls on `x0`, and every call in
//! an ε-rule, go to a state with a larger index.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::forest::{Forest, Label, Tree};
use crate::mft::{Guard, Mft, OutLabel, Rhs, RhsItem, StateId, Symbol, TransducerClass, Var};
use crate::query::{Axis, NodeTest, Path, Predicate, Query, Step, INPUT};

pub const LETTERS: [&str; 3] = ["a", "b", "c"];
pub const TEXTS: [&str; 2] = ["t", "u"];

/// A forest with at most `max_nodes` nodes over [`LETTERS`] and, with
/// `texts`, text leaves from [`TEXTS`].
pub fn random_forest(rng: &mut impl Rng, max_nodes: usize, texts: bool) -> Forest {
    let n = rng.gen_range(0..=max_nodes);
    let mut budget = n;
    Forest(trees(rng, &mut budget, texts, 0))
}

fn trees(rng: &mut impl Rng, budget: &mut usize, texts: bool, depth: usize) -> Vec<Tree> {
    let mut out = Vec::new();
    while *budget > 0 && (out.is_empty() || rng.gen_bool(0.6)) {
        *budget -= 1;
        if texts && rng.gen_bool(0.25) {
            out.push(Tree::text(TEXTS.choose(rng).unwrap()));
            continue;
        }
        let label = LETTERS.choose(rng).unwrap();
        let kids = if depth < 6 && rng.gen_bool(0.5) { trees(rng, budget, texts, depth + 1) } else { Vec::new() };
        out.push(Tree::element(label, Forest(kids)));
    }
    out
}

/// Every forest with exactly `n` nodes over `letters` (element leaves and
/// inner nodes only), in a fixed order.
pub fn all_forests(n: usize, letters: &[&str]) -> Vec<Forest> {
    fn go(n: usize, letters: &[&str], memo: &mut Vec<Option<Vec<Forest>>>) -> Vec<Forest> {
        if let Some(v) = &memo[n] {
            return v.clone();
        }
        let mut out = Vec::new();
        if n == 0 {
            out.push(Forest::empty());
        }
        // first tree has k nodes (1 root + k-1 below), the rest n-k
        for k in 1..=n {
            let kids = go(k - 1, letters, memo);
            let rest = go(n - k, letters, memo);
            for l in letters {
                for c in &kids {
                    for r in &rest {
                        let mut v = vec![Tree::element(l, c.clone())];
                        v.extend(r.0.iter().cloned());
                        out.push(Forest(v));
                    }
                }
            }
        }
        memo[n] = Some(out.clone());
        out
    }
    let mut memo = vec![None; n + 1];
    go(n, letters, &mut memo)
}

#[derive(Debug, Clone, Copy)]
pub struct MftShape {
    pub states: usize,
    /// Largest rank; 1 means no parameters.
    pub max_rank: usize,
    /// Right-hand sides read as binary trees (TT, MTT).
    pub tree_shaped: bool,
    /// Allow `%t` in outputs.
    pub current: bool,
    /// Allow text guards and text output.
    pub texts: bool,
}

impl MftShape {
    pub fn of_class(c: TransducerClass) -> Self {
        let (max_rank, tree_shaped) = match c {
            TransducerClass::Tt => (1, true),
            TransducerClass::Ft => (1, false),
            TransducerClass::Mtt => (3, true),
            TransducerClass::Mft => (3, false),
        };
        MftShape { states: 4, max_rank, tree_shaped, current: true, texts: true }
    }
}

struct Ctx {
    state: usize,
    states: usize,
    params: usize,
    /// x1 and x2 may be read (not in ε-rules or stay states).
    descend: bool,
    current: bool,
}

pub fn random_mft(rng: &mut impl Rng, shape: MftShape) -> Mft {
    let mut m = Mft::new();
    let n = shape.states.max(1);
    for i in 0..n {
        let rank = if i == 0 { 1 } else { rng.gen_range(1..=shape.max_rank) };
        m.add_state(format!("q{i}"), rank);
    }
    m.initial = StateId(0);
    for i in 0..n {
        let q = StateId(i);
        let params = m.rank(q) - 1;
        let ctx = |descend, current| Ctx { state: i, states: n, params, descend, current };
        if i > 0 && rng.gen_bool(0.25) {
            let rhs = gen_rhs(rng, &m, &ctx(false, false), shape, 3);
            m.add_stay_rule(q, rhs);
            continue;
        }
        let mut guards = vec![Guard::Symbol(Symbol::element("a")), Guard::Symbol(Symbol::element("b"))];
        if shape.texts {
            guards.push(Guard::Symbol(Symbol::text("t")));
            guards.push(Guard::TextNode);
        }
        for g in guards {
            if rng.gen_bool(0.5) {
                let rhs = gen_rhs(rng, &m, &ctx(true, shape.current), shape, 3);
                m.add_rule(q, g, rhs);
            }
        }
        let rhs = gen_rhs(rng, &m, &ctx(true, shape.current), shape, 3);
        m.add_rule(q, Guard::Default, rhs);
        let rhs = gen_rhs(rng, &m, &ctx(false, false), shape, 3);
        m.add_rule(q, Guard::Epsilon, rhs);
    }
    m.sigma = m.infer_sigma();
    m.sort_rules();
    m
}

fn gen_rhs(rng: &mut impl Rng, m: &Mft, ctx: &Ctx, shape: MftShape, fuel: usize) -> Rhs {
    let len = rng.gen_range(0..=if fuel == 0 { 1 } else { 3 });
    let mut items = Vec::new();
    for k in 0..len {
        let last = k + 1 == len;
        let leaf_ok = last || !shape.tree_shaped;
        let choice = rng.gen_range(0..10);
        if leaf_ok && choice < 3 {
            if let Some(c) = gen_call(rng, m, ctx, shape, fuel) {
                items.push(c);
                continue;
            }
        }
        if leaf_ok && choice < 5 && ctx.params > 0 {
            items.push(RhsItem::Param(rng.gen_range(1..=ctx.params)));
            continue;
        }
        items.push(gen_node(rng, m, ctx, shape, fuel));
    }
    Rhs(items)
}

fn gen_node(rng: &mut impl Rng, m: &Mft, ctx: &Ctx, shape: MftShape, fuel: usize) -> RhsItem {
    let r = rng.gen_range(0..10);
    let label = if ctx.current && r < 3 {
        OutLabel::Current
    } else if shape.texts && r < 4 {
        return Rhs::node(Label::text(*TEXTS.choose(rng).unwrap()), Rhs::empty());
    } else {
        OutLabel::Fixed(Label::element(*LETTERS.choose(rng).unwrap()))
    };
    let children = if fuel == 0 { Rhs::empty() } else { gen_rhs(rng, m, ctx, shape, fuel - 1) };
    RhsItem::Node { label, children }
}

fn gen_call(rng: &mut impl Rng, m: &Mft, ctx: &Ctx, shape: MftShape, fuel: usize) -> Option<RhsItem> {
    let mut vars = Vec::new();
    if ctx.descend {
        vars.extend([Var::X1, Var::X2]);
    }
    if ctx.state + 1 < ctx.states {
        vars.push(Var::X0);
    }
    let input = *vars.choose(rng)?;
    let state = if input == Var::X0 {
        rng.gen_range(ctx.state + 1..ctx.states)
    } else {
        rng.gen_range(0..ctx.states)
    };
    let target = StateId(state);
    let args = (1..m.rank(target))
        .map(|_| match rng.gen_range(0..4) {
            0 => Rhs::empty(),
            1 if ctx.params > 0 => Rhs::one(RhsItem::Param(rng.gen_range(1..=ctx.params))),
            _ if fuel > 0 => gen_rhs(rng, m, ctx, shape, fuel - 1),
            _ => Rhs::empty(),
        })
        .collect();
    Some(Rhs::call(target, input, args))
}

/// Documents of `person` elements with `p_id` and `name` children whose
/// texts come from a small pool, so that predicates hit and miss.
pub fn random_person_doc(rng: &mut impl Rng) -> Forest {
    let ids = ["person0", "perso7", "person1"];
    let names = ["Jim", "Li", "Ann"];
    let mut people = Vec::new();
    for _ in 0..rng.gen_range(0..=3) {
        let mut kids = Vec::new();
        for _ in 0..rng.gen_range(0..=4) {
            let t = match rng.gen_range(0..4) {
                0 | 1 => Tree::element("p_id", Forest(vec![Tree::text(ids.choose(rng).unwrap())])),
                2 => Tree::element("name", Forest(vec![Tree::text(names.choose(rng).unwrap())])),
                _ => Tree::element("c", Forest::empty()),
            };
            kids.push(t);
        }
        let label = if rng.gen_bool(0.8) { "person" } else { "other" };
        people.push(Tree::element(label, Forest(kids)));
    }
    Forest(people)
}

/// A well-scoped program of bounded depth over [`LETTERS`].
pub fn random_query(rng: &mut impl Rng, depth: usize) -> Query {
    let mut vars = vec![INPUT.to_string()];
    let mut fresh = 0;
    gen_query(rng, depth, INPUT, &mut vars, &mut fresh)
}

fn gen_query(rng: &mut impl Rng, depth: usize, for_var: &str, vars: &mut Vec<String>, fresh: &mut usize) -> Query {
    let pick = if depth == 0 { rng.gen_range(0..3) } else { rng.gen_range(0..6) };
    match pick {
        0 => Query::Path(gen_path(rng, for_var)),
        1 => Query::Path(Path::new(vars.choose(rng).unwrap().clone(), Vec::new())),
        2 => {
            if rng.gen_bool(0.5) {
                Query::Str(TEXTS.choose(rng).unwrap().to_string())
            } else {
                Query::Element { name: LETTERS.choose(rng).unwrap().to_string(), children: Vec::new() }
            }
        }
        3 => {
            let n = rng.gen_range(1..=2);
            let children = (0..n).map(|_| gen_query(rng, depth - 1, for_var, vars, fresh)).collect();
            Query::Element { name: LETTERS.choose(rng).unwrap().to_string(), children }
        }
        4 => {
            *fresh += 1;
            let var = format!("v{fresh}");
            let path = gen_path(rng, for_var);
            vars.push(var.clone());
            let body = gen_query(rng, depth - 1, &var.clone(), vars, fresh);
            vars.pop();
            Query::For { var, path, body: Box::new(body) }
        }
        _ => {
            *fresh += 1;
            let var = format!("v{fresh}");
            let bound = gen_query(rng, depth - 1, for_var, vars, fresh);
            vars.push(var.clone());
            let body = gen_query(rng, depth - 1, for_var, vars, fresh);
            vars.pop();
            Query::Let { var, bound: Box::new(bound), body: Box::new(body) }
        }
    }
}

fn gen_steps(rng: &mut impl Rng, max: usize, preds: bool) -> Vec<Step> {
    let n = rng.gen_range(1..=max);
    (0..n)
        .map(|_| {
            let axis = [Axis::Child, Axis::Child, Axis::Descendant, Axis::FollowingSibling].choose(rng).copied().unwrap();
            let test = match rng.gen_range(0..6) {
                0 => NodeTest::Star,
                1 => NodeTest::Text,
                2 => NodeTest::Node,
                _ => NodeTest::Name(LETTERS.choose(rng).unwrap().to_string()),
            };
            let mut s = Step::new(axis, test);
            if preds && rng.gen_bool(0.2) {
                let steps = gen_steps(rng, 2, false);
                let t = TEXTS.choose(rng).unwrap().to_string();
                s.preds.push(match rng.gen_range(0..4) {
                    0 => Predicate::Exists(steps),
                    1 => Predicate::Empty(steps),
                    2 => Predicate::Eq(steps, t),
                    _ => Predicate::Neq(steps, t),
                });
            }
            s
        })
        .collect()
}

fn gen_path(rng: &mut impl Rng, start: &str) -> Path {
    Path::new(start, gen_steps(rng, 3, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mft::{classify, evaluate, validate};
    use crate::query::check_scoping;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn forest_counts() {
        // forests with n nodes over k letters: k^n times the Catalan number
        let counts: Vec<usize> = (0..=4).map(|n| all_forests(n, &["a", "b"]).len()).collect();
        assert_eq!(counts, [1, 2, 8, 40, 224]);
        assert!(all_forests(3, &["a"]).iter().all(|f| f.node_count() == 3));
    }

    #[test]
    fn generated_transducers_are_valid_and_classified() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for c in [TransducerClass::Tt, TransducerClass::Ft, TransducerClass::Mtt, TransducerClass::Mft] {
            for _ in 0..50 {
                let m = random_mft(&mut rng, MftShape::of_class(c));
                assert!(validate(&m).is_empty(), "{:?}\n{m}", validate(&m));
                assert!(classify(&m) <= c, "{c}\n{m}");
                let f = random_forest(&mut rng, 8, true);
                evaluate(&m, &f).unwrap();
            }
        }
    }

    #[test]
    fn generated_queries_are_scoped() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let q = random_query(&mut rng, 3);
            assert!(check_scoping(&q).is_empty(), "{q}");
        }
    }
}
