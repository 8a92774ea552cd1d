//! brute-force slot-level checks of derivations and circuit identities.

use hec_core::circ::{eval_program, CircExpr, CircLet, CircObj, Circuit, CircuitProgram, OffsetExpr, Registry, ValueMap, VarKind};
use hec_core::index_free::ContentDim;
use hec_core::lang::BinOp::{self, Add, Mul, Sub};
use hec_core::materialize::{derive_slots, MaterializedVector, VecDim};
use hec_core::sched::Preprocess;
use hec_core::Tensor;
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use std::collections::BTreeMap;

const S: usize = 8;
const E: usize = 3;
const ZERO: i64 = -1;

// ---- derivations ----

fn apply(source: &[i64], len: usize, rot: i64, mask: Option<&[(usize, usize, usize)]>, dims: &[usize]) -> Vec<i64> {
    (0..len)
        .map(|i| {
            let v = source[((i as i64 - rot).rem_euclid(len as i64)) as usize % source.len()];
            let inside = mask.is_none_or(|m| {
                let p = hec_core::tensor::unlinear(dims, i % dims.iter().product::<usize>());
                p.iter().zip(m).all(|(&x, &(_, lo, hi))| x >= lo && x <= hi)
            });
            if inside { v } else { ZERO }
        })
        .collect()
}

fn slot_map(n: usize) -> impl Strategy<Value = Vec<i64>> {
    // distinct elements with holes
    (Just((0..n as i64).collect::<Vec<_>>()).prop_shuffle(), proptest::collection::vec(any::<bool>(), n))
        .prop_map(|(v, holes)| v.into_iter().zip(holes).map(|(x, h)| if h { ZERO } else { x }).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn derivations_reproduce_their_targets(source in slot_map(8), target in slot_map(8)) {
        let dims = [2usize, 4];
        if let Some(d) = derive_slots(&target, &dims, &source) {
            prop_assert_eq!(apply(&source, 8, d.rot, d.mask.as_deref(), &dims), target);
        }
    }

    #[test]
    fn rotated_and_boxed_sources_are_derivable(source in slot_map(8), rot in -7i64..8, lo0 in 0usize..2, lo1 in 0usize..4, w1 in 0usize..4) {
        let dims = [2usize, 4];
        let mask = [(2, lo0, 1), (4, lo1, (lo1 + w1).min(3))];
        let target = apply(&source, 8, rot, Some(&mask), &dims);
        let d = derive_slots(&target, &dims, &source);
        prop_assert!(d.is_some() || target.iter().all(|&v| v == ZERO));
        if let Some(d) = d {
            prop_assert_eq!(apply(&source, 8, d.rot, d.mask.as_deref(), &dims), target);
        }
    }
}

// ---- circuit identities ----

fn vector(name: &str) -> CircObj {
    CircObj::Vector(MaterializedVector {
        array: name.to_string(),
        preprocess: Preprocess::Identity,
        offsets: vec![0],
        dims: vec![VecDim { extent: S, oob_l: 0, oob_r: 0, content: vec![ContentDim { dim: 0, stride: 1 }] }],
    })
}

/// `x`, `y`, `z` ciphertexts, `p` a plaintext and `w` a ciphertext varying
/// over the reduced dim `d`.
fn registry() -> Registry {
    let mut r = Registry::default();
    for (k, n) in ["x", "y", "z"].iter().enumerate() {
        r.insert(VarKind::Ct, n.to_string(), ValueMap::constant(vector(&format!("v{k}"))));
    }
    r.insert(VarKind::Pt, "p".into(), ValueMap::constant(vector("v3")));
    r.insert(VarKind::Ct, "w".into(), ValueMap::from_fn(vec!["d".into()], vec![E], |c| vector(&format!("v{}", 4 + c[0]))));
    r
}

fn eval(e: &CircExpr, inputs: &BTreeMap<String, Tensor>) -> Vec<i64> {
    let mut circuit = Circuit::new();
    let root = circuit.insert_tree(e);
    let p = CircuitProgram { circuit, lets: vec![CircLet { name: "out".into(), dims: vec![], root, native: false }] };
    eval_program(&p, &registry(), inputs, S).unwrap()["out"][&vec![]].clone()
}

fn inputs() -> impl Strategy<Value = BTreeMap<String, Tensor>> {
    proptest::collection::vec(proptest::collection::vec(-50i64..50, S), 4 + E)
        .prop_map(|vs| vs.into_iter().enumerate().map(|(k, v)| (format!("v{k}"), Tensor::new(vec![S], v))).collect())
}

fn ct(n: &str) -> CircExpr {
    CircExpr::Ct(n.into())
}

fn op(o: BinOp, a: CircExpr, b: CircExpr) -> CircExpr {
    CircExpr::op(o, a, b)
}

fn rot(o: i64, a: CircExpr) -> CircExpr {
    CircExpr::rot(OffsetExpr::Int(o), a)
}

fn sum(a: CircExpr) -> CircExpr {
    CircExpr::ReduceDim("d".into(), E, Add, Box::new(a))
}

fn lit(v: i64) -> CircExpr {
    CircExpr::Lit(v)
}

fn binop() -> impl Strategy<Value = BinOp> {
    prop_oneof![Just(Add), Just(Sub), Just(Mul)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn neutral_and_absorbing_literals(i in inputs()) {
        let x = ct("x");
        prop_assert_eq!(eval(&op(Add, x.clone(), lit(0)), &i), eval(&x, &i));
        prop_assert_eq!(eval(&op(Sub, x.clone(), lit(0)), &i), eval(&x, &i));
        prop_assert_eq!(eval(&op(Mul, x.clone(), lit(1)), &i), eval(&x, &i));
        prop_assert_eq!(eval(&op(Mul, x.clone(), lit(0)), &i), vec![0; S]);
        prop_assert_eq!(eval(&op(Sub, x.clone(), x), &i), vec![0; S]);
    }

    #[test]
    fn literals_fold(a in -20i64..20, b in -20i64..20, o in binop(), i in inputs()) {
        prop_assert_eq!(eval(&op(o, lit(a), lit(b)), &i), vec![o.apply(a, b); S]);
    }

    #[test]
    fn commutativity(o in prop_oneof![Just(Add), Just(Mul)], i in inputs()) {
        prop_assert_eq!(eval(&op(o, ct("x"), ct("p")), &i), eval(&op(o, ct("p"), ct("x")), &i));
    }

    #[test]
    fn associativity(o in prop_oneof![Just(Add), Just(Mul)], i in inputs()) {
        let l = op(o, op(o, ct("x"), ct("y")), CircExpr::Pt("p".into()));
        let r = op(o, ct("x"), op(o, ct("y"), CircExpr::Pt("p".into())));
        prop_assert_eq!(eval(&l, &i), eval(&r, &i));
    }

    #[test]
    fn distributivity(o in prop_oneof![Just(Add), Just(Sub)], i in inputs()) {
        let l = op(Mul, ct("x"), op(o, ct("y"), ct("z")));
        let r = op(o, op(Mul, ct("x"), ct("y")), op(Mul, ct("x"), ct("z")));
        prop_assert_eq!(eval(&l, &i), eval(&r, &i));
    }

    #[test]
    fn rotation_distributes_over_operations(k in -9i64..10, o in binop(), i in inputs()) {
        let l = op(o, rot(k, ct("x")), rot(k, ct("y")));
        prop_assert_eq!(eval(&l, &i), eval(&rot(k, op(o, ct("x"), ct("y"))), &i));
    }

    #[test]
    fn rotations_compose(a in -9i64..10, b in -9i64..10, i in inputs()) {
        prop_assert_eq!(eval(&rot(a, rot(b, ct("x"))), &i), eval(&rot(a + b, ct("x")), &i));
        let split = CircExpr::rot(OffsetExpr::op(Add, OffsetExpr::Int(a), OffsetExpr::Int(b)), ct("x"));
        prop_assert_eq!(eval(&split, &i), eval(&rot(a, rot(b, ct("x"))), &i));
    }

    #[test]
    fn trivial_rotations(k in -9i64..10, v in -9i64..10, i in inputs()) {
        prop_assert_eq!(eval(&rot(0, ct("x")), &i), eval(&ct("x"), &i));
        prop_assert_eq!(eval(&rot(k, lit(v)), &i), vec![v; S]);
    }

    #[test]
    fn independent_rotation_leaves_reduction(k in -9i64..10, i in inputs()) {
        prop_assert_eq!(eval(&sum(rot(k, ct("w"))), &i), eval(&rot(k, sum(ct("w"))), &i));
    }

    #[test]
    fn independent_factor_leaves_reduction(i in inputs()) {
        prop_assert_eq!(eval(&sum(op(Mul, ct("x"), ct("w"))), &i), eval(&op(Mul, ct("x"), sum(ct("w"))), &i));
    }
}

/// with the offset depending on the reduced dim, no fixed rotation outside
/// the reduction matches; the side condition is needed.
#[test]
fn dependent_rotation_cannot_leave_reduction() {
    let dependent = sum(CircExpr::rot(OffsetExpr::Dim("d".into()), ct("w")));
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let mut refuted = 0;
    for _ in 0..1000 {
        let i = inputs().new_tree(&mut runner).unwrap().current();
        let l = eval(&dependent, &i);
        if (0..S as i64).all(|k| eval(&rot(k, sum(ct("w"))), &i) != l) {
            refuted += 1;
        }
    }
    assert!(refuted > 900, "{refuted}");
}

/// a factor varying with the reduced dim cannot be pulled out.
#[test]
fn dependent_factor_cannot_leave_reduction() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let mut refuted = 0;
    for _ in 0..1000 {
        let i = inputs().new_tree(&mut runner).unwrap().current();
        let l = eval(&sum(op(Mul, ct("w"), ct("w"))), &i);
        refuted += (l != eval(&op(Mul, ct("w"), sum(ct("w"))), &i).to_vec()) as usize;
    }
    assert!(refuted > 900, "{refuted}");
}
