//! compiled programs agree with the interpreter on random inputs.

use hec_core::corpus;
use hec_core::driver::{compile, Artifacts, Options};
use hec_core::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

fn random_inputs(a: &Artifacts, rng: &mut ChaCha8Rng) -> BTreeMap<String, Tensor> {
    a.source
        .program
        .inputs()
        .map(|i| {
            let n: usize = i.shape.iter().product();
            (i.name.clone(), Tensor::new(i.shape.clone(), (0..n).map(|_| rng.gen_range(-6..=6)).collect()))
        })
        .collect()
}

fn check_program(name: &str, src: &str, opts: &Options, trials: usize) {
    let a = compile(src, opts).unwrap_or_else(|e| panic!("{name}: {e}"));
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..trials {
        let inputs = random_inputs(&a, &mut rng);
        let (got, _) = a.run(&inputs).unwrap_or_else(|e| panic!("{name}: {e}\n{}", a.loopnest));
        assert_eq!(got, a.reference(&inputs).unwrap(), "{name}\n{}", a.loopnest);
    }
}

#[test]
fn corpus_matches_interpreter_optimized() {
    for (name, src) in corpus::all_reduced() {
        check_program(name, &src, &Options::slots(256), 20);
    }
}

#[test]
fn corpus_matches_interpreter_unoptimized() {
    for (name, src) in corpus::all_reduced() {
        let o = Options { opt: false, ..Options::slots(256) };
        check_program(name, &src, &o, 20);
    }
}

#[test]
fn corpus_matches_interpreter_with_few_slots() {
    for (name, src) in corpus::all_reduced() {
        check_program(name, &src, &Options::slots(16), 20);
    }
}

#[test]
fn outputs_survive_doubled_slots() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (name, src) in corpus::all_reduced() {
        let a = compile(&src, &Options::slots(64)).unwrap();
        for _ in 0..5 {
            let inputs = random_inputs(&a, &mut rng);
            let (x, _) = a.run_with(&inputs, 64).unwrap();
            let (y, _) = a.run_with(&inputs, 128).unwrap();
            assert_eq!(x, y, "{name}");
        }
    }
}

#[test]
fn traces_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (name, src) in corpus::all_reduced() {
        let a = compile(&src, &Options::slots(64)).unwrap();
        let b = compile(&src, &Options::slots(64)).unwrap();
        let inputs = random_inputs(&a, &mut rng);
        assert_eq!(a.run(&inputs).unwrap().1, b.run(&inputs).unwrap().1, "{name}");
    }
}
