//! slot-vector machine executing loop nests with operation counting.

use crate::circ::{object_slots, rotate, CircObj, LetValues};
use crate::error::{Error, Result};
use crate::lang::BinOp;
use crate::lnest::{ARef, Con, IType, Index, LExpr, LoopNest, Ref, Stmt, ValType};
use crate::tensor::Tensor;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

/// executed operations by kind, with vector and depth accounting.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OpTrace {
    pub rotations_cc: u64,
    pub rotations_pp: u64,
    pub add_cc: u64,
    pub add_cp: u64,
    pub add_pp: u64,
    pub sub_cc: u64,
    pub sub_cp: u64,
    pub sub_pp: u64,
    pub mul_cc: u64,
    pub mul_cp: u64,
    pub mul_pp: u64,
    pub native_ops: u64,
    pub encodes: u64,
    pub input_vectors: u64,
    pub output_vectors: u64,
    pub mult_depth: u64,
}

impl OpTrace {
    /// every counter by name, in declaration order.
    pub fn fields(&self) -> Vec<(&'static str, u64)> {
        Vec::from([
            ("rotations_cc", self.rotations_cc),
            ("rotations_pp", self.rotations_pp),
            ("add_cc", self.add_cc),
            ("add_cp", self.add_cp),
            ("add_pp", self.add_pp),
            ("sub_cc", self.sub_cc),
            ("sub_cp", self.sub_cp),
            ("sub_pp", self.sub_pp),
            ("mul_cc", self.mul_cc),
            ("mul_cp", self.mul_cp),
            ("mul_pp", self.mul_pp),
            ("native_ops", self.native_ops),
            ("encodes", self.encodes),
            ("input_vectors", self.input_vectors),
            ("output_vectors", self.output_vectors),
            ("mult_depth", self.mult_depth),
        ])
    }

    /// homomorphic additions with a ciphertext operand.
    pub fn adds(&self) -> u64 {
        self.add_cc + self.add_cp
    }

    fn count(&mut self, op: BinOp, it: IType) {
        let c = match (op, it) {
            (_, IType::N) => &mut self.native_ops,
            (BinOp::Add, IType::CC) => &mut self.add_cc,
            (BinOp::Add, IType::CP) => &mut self.add_cp,
            (BinOp::Add, IType::PP) => &mut self.add_pp,
            (BinOp::Sub, IType::CC) => &mut self.sub_cc,
            (BinOp::Sub, IType::CP) => &mut self.sub_cp,
            (BinOp::Sub, IType::PP) => &mut self.sub_pp,
            (BinOp::Mul, IType::CC) => &mut self.mul_cc,
            (BinOp::Mul, IType::CP) => &mut self.mul_cp,
            (BinOp::Mul, IType::PP) => &mut self.mul_pp,
        };
        *c += 1;
    }
}

#[derive(Clone, Debug)]
struct Value {
    data: Vec<i64>,
    ty: ValType,
    depth: u32,
}

#[derive(Clone, Debug)]
enum Cell {
    /// declared but not yet written; reads as the declared identity.
    Empty(i64),
    Int(i64),
    Vec(Value),
}

struct Array {
    extents: Vec<usize>,
    cells: Vec<Cell>,
}

/// result vectors per output coordinate and the operation trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimOutput {
    pub vectors: BTreeMap<Vec<usize>, Vec<i64>>,
    pub trace: OpTrace,
}

struct Vm<'a> {
    inputs: &'a BTreeMap<String, Tensor>,
    slots: usize,
    arrays: BTreeMap<String, Array>,
    instrs: BTreeMap<usize, Value>,
    env: BTreeMap<String, i64>,
    trace: OpTrace,
}

enum Opnd {
    Empty(i64),
    Val(Value),
}

impl Vm<'_> {
    fn cell_index(&self, a: &ARef) -> Result<usize> {
        let arr = self.arrays.get(&a.name).ok_or_else(|| Error::Sim(format!("undeclared array '{}'", a.name)))?;
        if arr.extents.len() != a.idx.len() {
            return Err(Error::Sim(format!("'{a}' indexes {} dims of {}", a.idx.len(), arr.extents.len())));
        }
        let mut o = 0;
        for (i, &e) in a.idx.iter().zip(&arr.extents) {
            let v = match i {
                Index::Lit(v) => *v,
                Index::Dim(d) => *self.env.get(d).ok_or_else(|| Error::Sim(format!("unbound loop variable '{d}'")))? as usize,
            };
            if v >= e {
                return Err(Error::Sim(format!("index {v} out of range in '{a}'")));
            }
            o = o * e + v;
        }
        Ok(o)
    }

    fn cell(&self, a: &ARef) -> Result<&Cell> {
        let k = self.cell_index(a)?;
        Ok(&self.arrays[&a.name].cells[k])
    }

    fn read(&self, r: &Ref) -> Result<Opnd> {
        match r {
            Ref::Instr(id) => self.instrs.get(id).cloned().map(Opnd::Val).ok_or_else(|| Error::Sim(format!("instr{id} used before definition"))),
            Ref::Arr(a) => match self.cell(a)? {
                Cell::Empty(k) => Ok(Opnd::Empty(*k)),
                Cell::Vec(v) => Ok(Opnd::Val(v.clone())),
                Cell::Int(_) => Err(Error::Sim(format!("'{a}' holds an integer, not a vector"))),
            },
        }
    }

    fn int(&self, e: &LExpr) -> Result<i64> {
        Ok(match e {
            LExpr::Lit(v) => *v,
            LExpr::Dim(d) => *self.env.get(d).ok_or_else(|| Error::Sim(format!("unbound loop variable '{d}'")))?,
            LExpr::Op(op, a, b) => op.apply(self.int(a)?, self.int(b)?),
            LExpr::Ref(Ref::Arr(a)) => match self.cell(a)? {
                Cell::Int(v) => *v,
                _ => return Err(Error::Sim(format!("'{a}' does not hold an integer"))),
            },
            LExpr::Ref(r) => return Err(Error::Sim(format!("'{r}' used as an integer"))),
        })
    }

    fn check(it: IType, tys: &[ValType]) -> Result<()> {
        let ok = match it {
            IType::N => tys.iter().all(|&t| t != ValType::C),
            _ => tys.iter().all(|&t| t != ValType::N),
        };
        let expect = match tys {
            [a, b] => IType::of(*a, *b),
            [a] => IType::of(*a, *a),
            _ => it,
        };
        if !ok || (it != IType::N && expect != it) {
            return Err(Error::Sim(format!("operands {tys:?} do not fit a {it} instruction")));
        }
        Ok(())
    }

    fn instr(&mut self, op: BinOp, it: IType, a: &Ref, b: &Ref) -> Result<Value> {
        let (x, y) = match (self.read(a)?, self.read(b)?) {
            // an accumulator's first update is a move
            (Opnd::Empty(k), Opnd::Val(v)) | (Opnd::Val(v), Opnd::Empty(k)) if k == op.identity() && op != BinOp::Sub => return Ok(v),
            (Opnd::Val(x), Opnd::Val(y)) => (x, y),
            _ => return Err(Error::Sim(format!("read of an unwritten accumulator in {}({it}, {a}, {b})", op.name()))),
        };
        Self::check(it, &[x.ty, y.ty])?;
        self.trace.count(op, it);
        let ty = if it == IType::N { ValType::N } else { it.result() };
        let depth = x.depth.max(y.depth) + (op == BinOp::Mul && ty == ValType::C) as u32;
        let data = x.data.iter().zip(&y.data).map(|(&p, &q)| op.apply(p, q)).collect();
        Ok(Value { data, ty, depth })
    }

    fn con(&mut self, con: &Con, ty: ValType) -> Result<Value> {
        let obj = match con {
            Con::Const(v) => CircObj::Const(*v),
            Con::Mask(m) => CircObj::Mask(m.clone()),
            Con::Vector(v) => {
                self.trace.input_vectors += 1;
                CircObj::Vector(v.clone())
            }
        };
        let data = object_slots(&obj, self.inputs, &LetValues::new(), self.slots)?;
        Ok(Value { data, ty, depth: 0 })
    }

    fn run(&mut self, body: &[Stmt]) -> Result<()> {
        for s in body {
            match s {
                Stmt::Val { name, ty, con } => {
                    let v = self.con(con, *ty)?;
                    self.arrays.insert(name.clone(), Array { extents: Vec::new(), cells: vec![Cell::Vec(v)] });
                }
                Stmt::Var { name, extents, init, .. } => {
                    let n: usize = extents.iter().product();
                    self.arrays.insert(name.clone(), Array { extents: extents.clone(), cells: vec![Cell::Empty(*init); n] });
                }
                Stmt::Instr { id, op, it, a, b, .. } => {
                    let v = self.instr(*op, *it, a, b)?;
                    self.instrs.insert(*id, v);
                }
                Stmt::Rot { id, it, amount, a, .. } => {
                    let Opnd::Val(x) = self.read(a)? else {
                        return Err(Error::Sim(format!("rotation of unwritten '{a}'")));
                    };
                    Self::check(*it, &[x.ty])?;
                    let r = self.int(amount)?;
                    let v = if r.rem_euclid(self.slots as i64) == 0 {
                        x
                    } else {
                        match it {
                            IType::N => self.trace.native_ops += 1,
                            IType::PP => self.trace.rotations_pp += 1,
                            _ => self.trace.rotations_cc += 1,
                        }
                        Value { data: rotate(&x.data, r), ..x }
                    };
                    self.instrs.insert(*id, v);
                }
                Stmt::Assign { target, value } => {
                    let cell = match value {
                        LExpr::Ref(Ref::Instr(id)) => Cell::Vec(self.instrs.get(id).cloned().ok_or_else(|| Error::Sim(format!("instr{id} used before definition")))?),
                        LExpr::Ref(Ref::Arr(a)) => self.cell(a)?.clone(),
                        e => Cell::Int(self.int(e)?),
                    };
                    let k = self.cell_index(target)?;
                    self.arrays.get_mut(&target.name).expect("checked").cells[k] = cell;
                }
                Stmt::Encode(a) => {
                    let k = self.cell_index(a)?;
                    match &mut self.arrays.get_mut(&a.name).expect("checked").cells[k] {
                        Cell::Vec(v) if v.ty == ValType::N => v.ty = ValType::P,
                        _ => return Err(Error::Sim(format!("encode of '{a}', which is not a native vector"))),
                    }
                    self.trace.encodes += 1;
                }
                Stmt::For { dim, extent, body } => {
                    for k in 0..*extent {
                        self.env.insert(dim.clone(), k as i64);
                        self.run(body)?;
                    }
                    self.env.remove(dim);
                }
            }
        }
        Ok(())
    }
}

/// execute `p` over `slots`-slot vectors; inputs are packed per their
/// vector constructors and rotations are cyclic over all slots.
pub fn simulate(p: &LoopNest, inputs: &BTreeMap<String, Tensor>, slots: usize) -> Result<SimOutput> {
    if !slots.is_power_of_two() {
        return Err(Error::Sim(format!("{slots} slots is not a power of two")));
    }
    let mut vm = Vm { inputs, slots, arrays: BTreeMap::new(), instrs: BTreeMap::new(), env: BTreeMap::new(), trace: OpTrace::default() };
    vm.run(&p.body)?;
    let out = vm.arrays.get(&p.output).ok_or_else(|| Error::Sim(format!("output '{}' never declared", p.output)))?;
    let mut vectors = BTreeMap::new();
    let mut depth = 0;
    for (k, c) in crate::tensor::positions(&out.extents).enumerate() {
        match &out.cells[k] {
            Cell::Vec(v) => {
                depth = depth.max(v.depth);
                vectors.insert(c, v.data.clone());
            }
            _ => return Err(Error::Sim(format!("output vector {c:?} never written"))),
        }
    }
    vm.trace.output_vectors = vectors.len() as u64;
    vm.trace.mult_depth = depth as u64;
    Ok(SimOutput { vectors, trace: vm.trace })
}
