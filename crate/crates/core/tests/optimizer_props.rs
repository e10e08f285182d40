mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{corpus_transducers, flow_oracle};

use xqmft::gen::{generate_forest, GenSpec, Profile};
use xqmft::mft::{evaluate, validate, Mft, TransducerClass};
use xqmft::optimize::{
    constant_params, necessary_params, optimize, remove_stay_moves, remove_unreachable, remove_unused_params,
};
use xqmft::random::{random_forest, random_mft, MftShape};
use xqmft::Forest;

#[test]
fn unused_set_matches_flow_oracle_on_corpus() {
    for (id, m) in corpus_transducers() {
        assert_eq!(necessary_params(&m), flow_oracle(&m), "{id}");
    }
}

type Rewrite = fn(&Mft) -> Mft;

const REWRITES: [(&str, Rewrite); 5] = [
    ("unreachable", remove_unreachable),
    ("unused", remove_unused_params),
    ("constant", constant_params),
    ("stay", remove_stay_moves),
    ("optimize", optimize),
];

fn assert_preserved(m: &Mft, docs: &[Forest], ctx: &str) {
    for (name, rw) in REWRITES {
        let r = rw(m);
        assert!(validate(&r).is_empty(), "{ctx} {name}: {:?}\n{r}", validate(&r));
        assert!(r.param_count() <= m.param_count(), "{ctx} {name}");
        for d in docs {
            let want = evaluate(m, d).unwrap().normalize();
            let got = evaluate(&r, d).unwrap().normalize();
            assert_eq!(got, want, "{ctx} {name} on {d:?}\n{m}\n=>\n{r}");
        }
    }
}

#[test]
fn rewrites_preserve_corpus_semantics() {
    let docs: Vec<Forest> =
        (0..50).map(|s| generate_forest(GenSpec::new(Profile::XmarkLite, 150, s)).unwrap()).collect();
    for (id, m) in corpus_transducers() {
        let docs: Vec<Forest> = if id.starts_with("m_person") || id.starts_with("person") {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            (0..50).map(|_| xqmft::random::random_person_doc(&mut rng)).collect()
        } else {
            docs.clone()
        };
        assert_preserved(&m, &docs, &id);
    }
}

fn random_instance(seed: u64) -> (Mft, Forest) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let class = [TransducerClass::Mft, TransducerClass::Mft, TransducerClass::Mtt, TransducerClass::Ft]
        [rng.gen_range(0..4)];
    let mut shape = MftShape::of_class(class);
    shape.states = rng.gen_range(2..=6);
    let m = random_mft(&mut rng, shape);
    let f = random_forest(&mut rng, 7, true);
    (m, f)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn rewrites_preserve_random_semantics(seed in any::<u64>()) {
        let (m, f) = random_instance(seed);
        assert_preserved(&m, &[f], &format!("seed {seed}"));
    }

    #[test]
    fn unused_set_matches_flow_oracle(seed in any::<u64>()) {
        let (m, _) = random_instance(seed);
        prop_assert_eq!(necessary_params(&m), flow_oracle(&m));
    }

    #[test]
    fn optimize_is_idempotent(seed in any::<u64>()) {
        let (m, _) = random_instance(seed);
        let once = optimize(&m);
        prop_assert!(once.param_count() <= m.param_count());
        prop_assert_eq!(optimize(&once), once);
    }
}
