use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use xqmft::compose::{compose, Mode};
use xqmft::mft::{evaluate, validate, Mft, TransducerClass};
use xqmft::random::{random_forest, random_mft, MftShape};
use xqmft::Forest;

const PAIRS: u64 = 50;
const DOCS: usize = 4;

fn operand(rng: &mut ChaCha8Rng, class: TransducerClass) -> Mft {
    let mut shape = MftShape::of_class(class);
    shape.states = rng.gen_range(1..=4);
    if class == TransducerClass::Mtt {
        shape.max_rank = 2;
    }
    random_mft(rng, shape)
}

fn classes(mode: Mode) -> (TransducerClass, TransducerClass) {
    use TransducerClass::*;
    match mode {
        Mode::TtTt => (Tt, Tt),
        Mode::MttTt => (Mtt, Tt),
        Mode::TtMtt => (Tt, Mtt),
        Mode::MttFt => (Mtt, Ft),
        Mode::TtFt => (Tt, Ft),
        Mode::FtTt => (Ft, Tt),
        Mode::FtFt => (Ft, Ft),
    }
}

fn check_mode(mode: Mode) {
    let (c1, c2) = classes(mode);
    for seed in 0..PAIRS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed * 31 + mode as u64);
        let m1 = operand(&mut rng, c1);
        let m2 = operand(&mut rng, c2);
        let (m, rep) = compose(&m1, &m2, mode).unwrap_or_else(|e| panic!("{mode} seed {seed}: {e}\n{m1}\n{m2}"));
        assert!(validate(&m).is_empty(), "{mode} seed {seed}: {:?}", validate(&m));
        assert_eq!(rep.class, xqmft::mft::classify(&m));
        for _ in 0..DOCS {
            let f: Forest = random_forest(&mut rng, 6, true);
            let mid = evaluate(&m1, &f).unwrap();
            let want = evaluate(&m2, &mid).unwrap().normalize();
            let got = evaluate(&m, &f).unwrap().normalize();
            assert_eq!(got, want, "{mode} seed {seed} on {f:?}\nM1:\n{m1}\nM2:\n{m2}\nM:\n{m}");
        }
    }
}

#[test]
fn tt_tt() {
    check_mode(Mode::TtTt);
}

#[test]
fn mtt_tt() {
    check_mode(Mode::MttTt);
}

#[test]
fn tt_mtt() {
    check_mode(Mode::TtMtt);
}

#[test]
fn mtt_ft() {
    check_mode(Mode::MttFt);
}

#[test]
fn tt_ft() {
    check_mode(Mode::TtFt);
}

#[test]
fn ft_tt() {
    check_mode(Mode::FtTt);
}

#[test]
fn ft_ft() {
    check_mode(Mode::FtFt);
}
