mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::corpus_transducers;

use xqmft::compile::compile;
use xqmft::corpus;
use xqmft::events::{build_forest, forest_events, VecSource, XmlEvent};
use xqmft::gen::{generate_forest, GenSpec, Generator, Profile};
use xqmft::mft::{classify, copy_transducer, evaluate, Mft, Rhs, RhsItem, TransducerClass, Var};
use xqmft::optimize::optimize;
use xqmft::random::{random_forest, random_mft, random_person_doc, MftShape};
use xqmft::stream::{measure, stream_run, StreamEngine};
use xqmft::Forest;

fn streamed(m: &Mft, f: &Forest) -> Forest {
    let mut out = Vec::new();
    stream_run(m, &mut VecSource::new(forest_events(f)), &mut out).unwrap();
    assert_eq!(out.last(), Some(&XmlEvent::Eof));
    build_forest(&mut VecSource::new(out)).unwrap()
}

#[test]
fn corpus_streams_like_evaluate() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (id, m) in corpus_transducers() {
        for seed in 0..50 {
            let doc = if id.contains("person") {
                random_person_doc(&mut rng)
            } else if id.starts_with("nested") {
                random_forest(&mut rng, 12, false)
            } else {
                generate_forest(GenSpec::new(Profile::XmarkLite, rng.gen_range(1..400), seed)).unwrap()
            };
            let want = evaluate(&m, &doc).unwrap().normalize();
            assert_eq!(streamed(&m, &doc).normalize(), want, "{id} seed {seed}");
        }
    }
}

#[test]
fn deep_documents_stream() {
    for id in ["fourstar", "deepdup", "q13"] {
        let m = optimize(&compile(&corpus::query(id).unwrap()).unwrap());
        let doc = generate_forest(GenSpec::new(Profile::DeepChain { depth: 60 }, 3000, 2)).unwrap();
        assert_eq!(streamed(&m, &doc).normalize(), evaluate(&m, &doc).unwrap().normalize(), "{id}");
    }
}

/// Every rule reads `x1` and `x2` at most once each, `x1` first. A call on
/// `x0` reads what the called state reads.
fn reads_in_order(m: &Mft) -> bool {
    fn order(e: &Rhs, reads: &[Vec<Var>], out: &mut Vec<Var>) {
        for it in &e.0 {
            match it {
                RhsItem::Call { state, input, args } => {
                    args.iter().for_each(|a| order(a, reads, out));
                    match input {
                        Var::X0 => out.extend(&reads[state.0]),
                        v => out.push(*v),
                    }
                }
                RhsItem::Node { children, .. } => order(children, reads, out),
                RhsItem::Param(_) => {}
            }
        }
    }
    let mut reads = vec![Vec::new(); m.states.len()];
    loop {
        let mut next = vec![Vec::new(); m.states.len()];
        for r in &m.rules {
            let mut vs = Vec::new();
            order(&r.rhs, &reads, &mut vs);
            for v in [Var::X1, Var::X2] {
                if vs.contains(&v) && !next[r.state.0].contains(&v) {
                    next[r.state.0].push(v);
                }
            }
        }
        next.iter_mut().for_each(|v| v.sort());
        if next == reads {
            break;
        }
        reads = next;
    }
    m.rules.iter().all(|r| {
        let mut vs = Vec::new();
        order(&r.rhs, &reads, &mut vs);
        matches!(vs.as_slice(), [] | [_] | [Var::X1, Var::X2])
    })
}

#[test]
fn streamable_transducers_do_not_grow_with_width() {
    let mut checked = Vec::new();
    let mut all = corpus_transducers();
    all.push(("copy".to_string(), copy_transducer()));
    for (id, m) in all {
        if classify(&m) > TransducerClass::Ft || !reads_in_order(&m) {
            continue;
        }
        let peak = |n| measure(&m, &mut Generator::new(GenSpec::new(Profile::XmarkLite, n, 5))).unwrap().peak_retained;
        let (a, b) = (peak(1_000), peak(10_000));
        assert!(b as f64 <= 1.1 * a as f64, "{id}: {a} -> {b}");
        checked.push(id);
    }
    assert_eq!(checked, ["q02-opt", "copy"]);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn random_transducers_stream_like_evaluate(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let class = [TransducerClass::Tt, TransducerClass::Ft, TransducerClass::Mtt, TransducerClass::Mft][rng.gen_range(0..4)];
        let mut shape = MftShape::of_class(class);
        shape.states = rng.gen_range(1..=6);
        let m = random_mft(&mut rng, shape);
        let f = random_forest(&mut rng, 8, true);
        prop_assert_eq!(streamed(&m, &f).normalize(), evaluate(&m, &f).unwrap().normalize());
    }

    #[test]
    fn stepping_matches_run(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_mft(&mut rng, MftShape::of_class(TransducerClass::Mft));
        let events = forest_events(&random_forest(&mut rng, 8, true));
        let mut e = StreamEngine::new(&m);
        let mut folded = Vec::new();
        for ev in &events {
            folded.extend(e.step(ev.clone()).unwrap());
        }
        prop_assert!(e.finish().is_ok());
        let mut direct = Vec::new();
        stream_run(&m, &mut VecSource::new(events), &mut direct).unwrap();
        prop_assert_eq!(folded, direct);
    }
}
