use super::ir::{CircObj, CircuitProgram, Node, NodeId, Registry};
use crate::error::{Error, Result};
use crate::tensor::{unlinear, Tensor};
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

/// slot vectors of every let, per coordinate of its dims.
pub type LetValues = BTreeMap<String, BTreeMap<Vec<usize>, Vec<i64>>>;

/// replicate a block of `b` slots across `slots`.
pub(crate) fn replicate(block: &[i64], slots: usize) -> Result<Vec<i64>> {
    if block.is_empty() || !slots.is_multiple_of(block.len()) {
        return Err(Error::Sim(format!("block of {} slots does not divide {slots}", block.len())));
    }
    Ok((0..slots).map(|i| block[i % block.len()]).collect())
}

/// slot values of a registry object.
pub fn object_slots(o: &CircObj, inputs: &BTreeMap<String, Tensor>, lets: &LetValues, slots: usize) -> Result<Vec<i64>> {
    match o {
        CircObj::Const(c) => Ok(vec![*c; slots]),
        CircObj::Mask(m) => {
            let dims: Vec<usize> = m.iter().map(|d| d.0).collect();
            let block: usize = dims.iter().product();
            let b: Vec<i64> = (0..block)
                .map(|i| unlinear(&dims, i).iter().zip(m).all(|(&p, &(_, lo, hi))| p >= lo && p <= hi) as i64)
                .collect();
            replicate(&b, slots)
        }
        CircObj::Vector(v) => {
            let t = inputs.get(&v.array).ok_or_else(|| Error::Input(format!("missing input '{}'", v.array)))?;
            replicate(&v.pack(t), slots)
        }
        CircObj::LetRef(n, c) => lets
            .get(n)
            .and_then(|m| m.get(c))
            .cloned()
            .ok_or_else(|| Error::Sim(format!("let '{n}' at {c:?} not computed"))),
    }
}

pub(crate) fn rotate(x: &[i64], r: i64) -> Vec<i64> {
    let s = x.len() as i64;
    (0..s).map(|i| x[(i - r).rem_euclid(s) as usize]).collect()
}

/// dim bindings of one coordinate.
type Coord = Vec<(String, usize)>;

struct Ev<'a> {
    prog: &'a CircuitProgram,
    reg: &'a Registry,
    inputs: &'a BTreeMap<String, Tensor>,
    lets: &'a LetValues,
    slots: usize,
    memo: BTreeMap<(NodeId, Coord), Vec<i64>>,
}

impl Ev<'_> {
    fn node(&mut self, n: NodeId, env: &mut Vec<(String, usize)>) -> Result<Vec<i64>> {
        let key = (n, env.clone());
        if let Some(v) = self.memo.get(&key) {
            return Ok(v.clone());
        }
        let lookup = |env: &[(String, usize)], d: &str| env.iter().rev().find(|(k, _)| k == d).map(|(_, v)| *v as i64);
        let v = match self.prog.circuit.node(n).clone() {
            Node::Lit(c) => vec![c; self.slots],
            Node::Pt(name) | Node::Ct(name) => {
                let m = self
                    .reg
                    .pt
                    .get(&name)
                    .or_else(|| self.reg.ct.get(&name))
                    .ok_or_else(|| Error::Sim(format!("unregistered variable '{name}'")))?;
                let o = m.lookup(&|d| lookup(env, d).unwrap_or(0)).clone();
                object_slots(&o, self.inputs, self.lets, self.slots)?
            }
            Node::Op(op, a, b) => {
                let x = self.node(a, env)?;
                let y = self.node(b, env)?;
                x.iter().zip(&y).map(|(&p, &q)| op.apply(p, q)).collect()
            }
            Node::Rot(o, a) => {
                let x = self.node(a, env)?;
                let reg = self.reg;
                let r = o.eval(&|d| lookup(env, d).unwrap_or(0), &|v| *reg.offsets[v].lookup(&|d| lookup(env, d).unwrap_or(0)));
                rotate(&x, r)
            }
            Node::ReduceDim(d, e, op, a) => {
                let mut acc: Option<Vec<i64>> = None;
                for k in 0..e {
                    env.push((d.clone(), k));
                    let x = self.node(a, env);
                    env.pop();
                    let x = x?;
                    acc = Some(match acc {
                        None => x,
                        Some(acc) => acc.iter().zip(&x).map(|(&p, &q)| op.apply(p, q)).collect(),
                    });
                }
                acc.unwrap_or_else(|| vec![op.identity(); self.slots])
            }
        };
        self.memo.insert(key, v.clone());
        Ok(v)
    }
}

/// evaluate every let of a circuit directly over the registry; the oracle
/// for lowering and simulation.
pub fn eval_program(prog: &CircuitProgram, reg: &Registry, inputs: &BTreeMap<String, Tensor>, slots: usize) -> Result<LetValues> {
    let mut lets = LetValues::new();
    for l in &prog.lets {
        let extents: Vec<usize> = l.dims.iter().map(|d| d.1).collect();
        let mut vals = BTreeMap::new();
        let mut ev = Ev { prog, reg, inputs, lets: &lets, slots, memo: BTreeMap::new() };
        for c in crate::tensor::positions(&extents) {
            let mut env: Vec<(String, usize)> = l.dims.iter().map(|d| d.0.clone()).zip(c.iter().copied()).collect();
            vals.insert(c, ev.node(l.root, &mut env)?);
        }
        lets.insert(l.name.clone(), vals);
    }
    Ok(lets)
}
