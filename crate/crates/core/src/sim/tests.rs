use super::*;
use crate::corpus;
use crate::driver::{compile, Options};
use crate::error::Error;
use crate::index_free::ContentDim;
use crate::lang::BinOp::Add;
use crate::lnest::{ARef, Con, IType, LExpr, LoopNest, Ref, Stmt, ValType};
use crate::materialize::{MaterializedVector, VecDim};
use crate::sched::{parse_schedule, Preprocess};
use crate::tensor::Tensor;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

fn packed(name: &str, n: usize) -> Con {
    Con::Vector(MaterializedVector {
        array: name.to_string(),
        preprocess: Preprocess::Identity,
        offsets: vec![0],
        dims: vec![VecDim { extent: n, oob_l: 0, oob_r: 0, content: vec![ContentDim { dim: 0, stride: 1 }] }],
    })
}

fn val(name: &str, ty: ValType, con: Con) -> Stmt {
    Stmt::Val { name: name.into(), ty, con }
}

fn out_var() -> Stmt {
    Stmt::Var { name: "out".into(), ty: ValType::C, extents: vec![], init: 0 }
}

fn set_out(id: usize) -> Stmt {
    Stmt::Assign { target: ARef::scalar("out"), value: LExpr::Ref(Ref::Instr(id)) }
}

fn nest(body: Vec<Stmt>) -> LoopNest {
    LoopNest { body, output: "out".into(), output_extents: vec![] }
}

fn x4() -> BTreeMap<String, Tensor> {
    [("x".to_string(), Tensor::new(vec![4], vec![1, 2, 3, 4]))].into()
}

#[test]
fn rotation_shifts_cyclically() {
    let rot = Stmt::Rot { id: 1, it: IType::CC, amount: LExpr::Lit(2), a: Ref::Arr(ARef::scalar("v")), inplace: false };
    let p = nest(vec![val("v", ValType::C, packed("x", 4)), out_var(), rot, set_out(1)]);
    let r = simulate(&p, &x4(), 4).unwrap();
    assert_eq!(r.vectors[&vec![]], vec![3, 4, 1, 2]);
    assert_eq!(r.trace.rotations_cc, 1);
    assert_eq!(r.trace.input_vectors, 1);
    assert_eq!(r.trace.output_vectors, 1);
}

#[test]
fn blocks_replicate_across_slots() {
    let p = nest(vec![val("v", ValType::C, packed("x", 4)), out_var(), Stmt::Assign { target: ARef::scalar("out"), value: LExpr::Ref(Ref::Arr(ARef::scalar("v"))) }]);
    assert_eq!(simulate(&p, &x4(), 8).unwrap().vectors[&vec![]], vec![1, 2, 3, 4, 1, 2, 3, 4]);
    assert!(matches!(simulate(&p, &x4(), 2), Err(Error::Sim(_))));
    assert!(matches!(simulate(&p, &x4(), 3), Err(Error::Sim(_))));
}

#[test]
fn masks_cover_their_intervals() {
    let mul = Stmt::Instr { id: 1, op: crate::lang::BinOp::Mul, it: IType::CP, a: Ref::Arr(ARef::scalar("v")), b: Ref::Arr(ARef::scalar("m")), inplace: false };
    let p = nest(vec![
        val("v", ValType::C, Con::Const(1)),
        val("m", ValType::N, Con::Mask(vec![(4, 0, 2)])),
        Stmt::Encode(ARef::scalar("m")),
        out_var(),
        mul,
        set_out(1),
    ]);
    let r = simulate(&p, &BTreeMap::new(), 8).unwrap();
    assert_eq!(r.vectors[&vec![]], vec![1, 1, 1, 0, 1, 1, 1, 0]);
    assert_eq!((r.trace.mul_cp, r.trace.encodes, r.trace.mult_depth), (1, 1, 1));
}

#[test]
fn native_operands_are_rejected_by_cipher_instructions() {
    let add = Stmt::Instr { id: 1, op: Add, it: IType::CP, a: Ref::Arr(ARef::scalar("v")), b: Ref::Arr(ARef::scalar("m")), inplace: false };
    let p = nest(vec![val("v", ValType::C, Con::Const(1)), val("m", ValType::N, Con::Const(2)), out_var(), add, set_out(1)]);
    assert!(matches!(simulate(&p, &BTreeMap::new(), 4), Err(Error::Sim(_))));
}

#[test]
fn zero_inputs_give_zero_outputs() {
    for (name, src) in corpus::all_reduced() {
        let a = compile(&src, &Options::slots(64)).unwrap();
        let inputs: BTreeMap<String, Tensor> = a.source.program.inputs().map(|i| (i.name.clone(), Tensor::zeros(&i.shape))).collect();
        let (t, _) = a.run(&inputs).unwrap();
        assert_eq!(t, a.reference(&inputs).unwrap(), "{name}");
        // only programs without constants are all-zero
        if !src.contains("1 -") {
            assert!(t.data.iter().all(|&v| v == 0), "{name}");
        }
    }
}

fn diagonal() -> crate::driver::Artifacts {
    let l = "roll(1,0) {i1_1:1:4:1} [(0,4,1)]";
    let s = parse_schedule(&format!("0 = {l}\n1 = {l}\n2 = {l}\n3 = {l}")).unwrap();
    compile(&corpus::distance_fig(4), &Options { schedule: Some(s), ..Options::slots(4) }).unwrap()
}

#[test]
fn script_follows_the_loop_nest() {
    let text = emit_script(&diagonal().loopnest, &Binding::identity()).unwrap();
    assert!(text.contains("for i1_1 in range(4):"), "{text}");
    assert_eq!(text.matches("rotate(").count(), 1, "{text}");
    let first_he = text.find(" = sub(").unwrap();
    assert!(text.find(" = encode(").unwrap() < first_he, "{text}");
    assert!(text.contains("encrypt(encode(make_vector(inputs, "), "{text}");
}

#[test]
fn script_uses_bound_names() {
    let mut b = Binding::identity();
    b.0.insert("rotate".into(), "ev.rotate_rows".into());
    b.0.insert("add_inplace".into(), "ev.add_inplace".into());
    let text = emit_script(&diagonal().loopnest, &b).unwrap();
    assert!(text.contains("ev.rotate_rows(v_x_1, (-1 * i1_1))"), "{text}");
    b.0.remove("mul");
    assert!(matches!(emit_script(&diagonal().loopnest, &b), Err(Error::Config(_))));
}

#[test]
fn empty_script_is_header_and_footer() {
    let text = emit_script(&LoopNest::default(), &Binding::default()).unwrap();
    assert!(text.starts_with("# generated"));
    assert!(text.trim_end().ends_with("return None"));
}

#[test]
fn bindings_parse_key_value_lines() {
    let b = Binding::parse("# seal\nadd = evaluator.add\n\nrotate=evaluator.rotate_rows\n").unwrap();
    assert_eq!(b.0["add"], "evaluator.add");
    assert_eq!(b.0["rotate"], "evaluator.rotate_rows");
    assert!(Binding::parse("add evaluator.add").is_err());
}
