use super::{ARef, Con, IType, Index, LExpr, LoopNest, Ref, Stmt, ValType};
use crate::circ::{CircObj, CircuitProgram, Node, NodeId, OffsetExpr, Registry, VarKind};
use crate::error::{Error, Result};
use crate::lang::BinOp;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::mem::take;

struct Lw<'a> {
    reg: &'a Registry,
    circuit: &'a crate::circ::Circuit,
    vals: BTreeMap<Con, String>,
    counters: BTreeMap<String, usize>,
    encoded: BTreeSet<String>,
    arrays: BTreeSet<String>,
    let_types: BTreeMap<String, ValType>,
    next_id: usize,
    next_reduce: usize,
    native: bool,
    /// statements of the current let, by prelude section.
    vals_buf: Vec<Stmt>,
    enc_buf: Vec<Stmt>,
    fill_buf: Vec<Stmt>,
    cur: Vec<Stmt>,
    memo: Vec<BTreeMap<NodeId, (Ref, ValType)>>,
}

impl Lw<'_> {
    fn fresh(&mut self, prefix: &str) -> String {
        let k = self.counters.entry(String::from(prefix)).or_insert(0);
        *k += 1;
        format!("{prefix}{k}")
    }

    /// name of the value built by `con`, declared on first use.
    fn val(&mut self, con: Con, ty: ValType) -> String {
        if let Some(n) = self.vals.get(&con) {
            return n.clone();
        }
        let name = match &con {
            Con::Const(v) if *v < 0 => format!("const_neg{}", v.unsigned_abs()),
            Con::Const(v) => format!("const_{v}"),
            Con::Mask(_) => self.fresh("mask_"),
            Con::Vector(v) => self.fresh(&format!("v_{}_", v.array)),
        };
        self.vals_buf.push(Stmt::Val { name: name.clone(), ty, con: con.clone() });
        self.vals.insert(con, name.clone());
        name
    }

    /// a native value, encoded first when used under encryption.
    fn use_native(&mut self, name: String) -> (Ref, ValType) {
        let r = Ref::Arr(ARef::scalar(&name));
        if self.native {
            return (r, ValType::N);
        }
        if self.encoded.insert(name.clone()) {
            self.enc_buf.push(Stmt::Encode(ARef::scalar(&name)));
        }
        (r, ValType::P)
    }

    fn obj(&mut self, o: &CircObj, kind: VarKind) -> Result<(Ref, ValType)> {
        Ok(match o {
            CircObj::Const(v) => {
                let n = self.val(Con::Const(*v), ValType::N);
                self.use_native(n)
            }
            CircObj::Mask(m) => {
                let n = self.val(Con::Mask(m.clone()), ValType::N);
                self.use_native(n)
            }
            CircObj::Vector(v) if kind == VarKind::Ct => {
                let n = self.val(Con::Vector(v.clone()), ValType::C);
                (Ref::Arr(ARef::scalar(&n)), ValType::C)
            }
            CircObj::Vector(v) => {
                let n = self.val(Con::Vector(v.clone()), ValType::N);
                self.use_native(n)
            }
            CircObj::LetRef(n, c) => {
                let t = *self.let_types.get(n).ok_or_else(|| Error::Lower(format!("let '{n}' used before definition")))?;
                let t = if t == ValType::N && !self.native { ValType::P } else { t };
                (Ref::Arr(ARef { name: n.clone(), idx: c.iter().map(|&x| Index::Lit(x)).collect() }), t)
            }
        })
    }

    fn var(&mut self, name: &str, kind: VarKind) -> Result<(Ref, ValType)> {
        let m = self.reg.var(kind, name).ok_or_else(|| Error::Lower(format!("unregistered variable '{name}'")))?;
        if m.is_uniform() {
            return self.obj(&m.values[0], kind);
        }
        let refs = m.values.iter().map(|o| self.obj(o, kind)).collect::<Result<Vec<_>>>()?;
        let ty = refs.iter().map(|r| r.1).max().unwrap_or(ValType::N);
        let array = if self.native { format!("n_{name}") } else { String::from(name) };
        if self.arrays.insert(array.clone()) {
            self.fill_buf.push(Stmt::Var { name: array.clone(), ty, extents: m.extents.clone(), init: 0 });
            for (c, (r, _)) in m.coords().zip(refs) {
                let target = ARef { name: array.clone(), idx: c.into_iter().map(Index::Lit).collect() };
                self.fill_buf.push(Stmt::Assign { target, value: LExpr::Ref(r) });
            }
        }
        Ok((Ref::Arr(ARef { name: array, idx: m.params.iter().map(|p| Index::Dim(p.clone())).collect() }), ty))
    }

    fn offset(&mut self, o: &OffsetExpr) -> Result<LExpr> {
        let mut vars = BTreeSet::new();
        o.vars(&mut vars);
        let mut reads = BTreeMap::new();
        for v in vars {
            let m = self.reg.offsets.get(&v).ok_or_else(|| Error::Lower(format!("unregistered offset '{v}'")))?;
            let e = if m.is_uniform() {
                LExpr::Lit(m.values[0])
            } else {
                if self.arrays.insert(v.clone()) {
                    self.fill_buf.push(Stmt::Var { name: v.clone(), ty: ValType::N, extents: m.extents.clone(), init: 0 });
                    for c in m.coords() {
                        let value = LExpr::Lit(*m.at(&c));
                        self.fill_buf.push(Stmt::Assign { target: ARef { name: v.clone(), idx: c.into_iter().map(Index::Lit).collect() }, value });
                    }
                }
                LExpr::Ref(Ref::Arr(ARef { name: v.clone(), idx: m.params.iter().map(|p| Index::Dim(p.clone())).collect() }))
            };
            reads.insert(v, e);
        }
        Ok(LExpr::from_offset(o, &|v| reads[v].clone()))
    }

    fn itype(&self, a: ValType, b: ValType) -> IType {
        if self.native {
            IType::N
        } else {
            IType::of(a, b)
        }
    }

    fn instr(&mut self, op: BinOp, a: (Ref, ValType), b: (Ref, ValType)) -> (Ref, ValType) {
        self.next_id += 1;
        let it = self.itype(a.1, b.1);
        self.cur.push(Stmt::Instr { id: self.next_id, op, it, a: a.0, b: b.0, inplace: false });
        (Ref::Instr(self.next_id), it.result())
    }

    fn node(&mut self, n: NodeId) -> Result<(Ref, ValType)> {
        if let Some(r) = self.memo.iter().rev().find_map(|m| m.get(&n)) {
            return Ok(r.clone());
        }
        let r = match self.circuit.node(n).clone() {
            Node::Lit(v) => self.obj(&CircObj::Const(v), VarKind::Pt)?,
            Node::Pt(v) => self.var(&v, VarKind::Pt)?,
            Node::Ct(v) => self.var(&v, VarKind::Ct)?,
            Node::Op(op, a, b) => {
                let (a, b) = (self.node(a)?, self.node(b)?);
                self.instr(op, a, b)
            }
            Node::Rot(o, a) => {
                let a = self.node(a)?;
                if o.normalize().is_zero() {
                    a
                } else {
                    let amount = self.offset(&o)?;
                    self.next_id += 1;
                    let it = self.itype(a.1, a.1);
                    self.cur.push(Stmt::Rot { id: self.next_id, it, amount, a: a.0, inplace: false });
                    (Ref::Instr(self.next_id), it.result())
                }
            }
            Node::ReduceDim(d, e, op, a) => self.reduce(&d, e, op, a)?,
        };
        self.memo.last_mut().expect("memo scope").insert(n, r.clone());
        Ok(r)
    }

    /// sums accumulate in the loop; products store every iteration and
    /// combine them in a balanced tree after it.
    fn reduce(&mut self, d: &str, e: usize, op: BinOp, body: NodeId) -> Result<(Ref, ValType)> {
        self.next_reduce += 1;
        let name = format!("__reduce_{}", self.next_reduce);
        let outer = take(&mut self.cur);
        self.memo.push(BTreeMap::new());
        let b = self.node(body);
        self.memo.pop();
        let (rb, tb) = match b {
            Ok(b) => b,
            Err(err) => {
                self.cur = outer;
                return Err(err);
            }
        };
        let tree = op == BinOp::Mul;
        let acc = Ref::Arr(ARef::scalar(&name));
        if tree {
            let target = ARef { name: name.clone(), idx: Vec::from([Index::Dim(String::from(d))]) };
            self.cur.push(Stmt::Assign { target, value: LExpr::Ref(rb) });
        } else {
            let (r, _) = self.instr(op, (acc.clone(), tb), (rb, tb));
            self.cur.push(Stmt::Assign { target: ARef::scalar(&name), value: LExpr::Ref(r) });
        }
        let inner = core::mem::replace(&mut self.cur, outer);
        let extents = if tree { Vec::from([e]) } else { Vec::new() };
        self.cur.push(Stmt::Var { name: name.clone(), ty: tb, extents, init: op.identity() });
        self.cur.push(Stmt::For { dim: String::from(d), extent: e, body: inner });
        if !tree {
            return Ok((acc, tb));
        }
        let mut level: Vec<(Ref, ValType)> =
            (0..e).map(|k| (Ref::Arr(ARef { name: name.clone(), idx: Vec::from([Index::Lit(k)]) }), tb)).collect();
        while level.len() > 1 {
            let mut next = Vec::new();
            let mut it = level.into_iter();
            while let Some(x) = it.next() {
                match it.next() {
                    Some(y) => next.push(self.instr(op, x, y)),
                    None => next.push(x),
                }
            }
            level = next;
        }
        Ok(level.pop().expect("nonempty reduction"))
    }
}

/// lower a circuit program to a loop nest: per let, a prelude declaring
/// vectors, encodes and registry arrays, then one loop per let dim.
pub fn lower(p: &CircuitProgram, reg: &Registry) -> Result<LoopNest> {
    let mut lw = Lw {
        reg,
        circuit: &p.circuit,
        vals: BTreeMap::new(),
        counters: BTreeMap::new(),
        encoded: BTreeSet::new(),
        arrays: BTreeSet::new(),
        let_types: BTreeMap::new(),
        next_id: 0,
        next_reduce: 0,
        native: false,
        vals_buf: Vec::new(),
        enc_buf: Vec::new(),
        fill_buf: Vec::new(),
        cur: Vec::new(),
        memo: Vec::new(),
    };
    // native lets read under encryption get encoded right after they run
    let mut he_reads = BTreeSet::new();
    for l in p.lets.iter().filter(|l| !l.native) {
        for n in p.circuit.topo(l.root) {
            if let Node::Pt(v) | Node::Ct(v) = p.circuit.node(n) {
                for m in [reg.pt.get(v), reg.ct.get(v)].into_iter().flatten() {
                    for o in &m.values {
                        if let CircObj::LetRef(name, _) = o {
                            he_reads.insert(name.clone());
                        }
                    }
                }
            }
        }
    }
    let mut body = Vec::new();
    for l in &p.lets {
        lw.native = l.native;
        lw.memo = Vec::from([BTreeMap::new()]);
        let (r, t) = lw.node(l.root)?;
        let ty = if l.native { ValType::N } else { t.max(ValType::P) };
        let idx: Vec<Index> = l.dims.iter().map(|(d, _)| Index::Dim(d.clone())).collect();
        lw.cur.push(Stmt::Assign { target: ARef { name: l.name.clone(), idx: idx.clone() }, value: LExpr::Ref(r) });
        let mut nest = take(&mut lw.cur);
        for (d, e) in l.dims.iter().rev() {
            nest = Vec::from([Stmt::For { dim: d.clone(), extent: *e, body: nest }]);
        }
        body.append(&mut lw.vals_buf);
        body.append(&mut lw.enc_buf);
        body.append(&mut lw.fill_buf);
        let extents: Vec<usize> = l.dims.iter().map(|d| d.1).collect();
        body.push(Stmt::Var { name: l.name.clone(), ty, extents, init: 0 });
        body.append(&mut nest);
        if l.native && he_reads.contains(&l.name) {
            let mut enc = Vec::from([Stmt::Encode(ARef { name: l.name.clone(), idx })]);
            for (d, e) in l.dims.iter().rev() {
                enc = Vec::from([Stmt::For { dim: d.clone(), extent: *e, body: enc }]);
            }
            body.append(&mut enc);
        }
        lw.let_types.insert(l.name.clone(), ty);
    }
    let last = p.lets.last().ok_or_else(|| Error::Lower(String::from("empty circuit program")))?;
    Ok(LoopNest { body, output: last.name.clone(), output_extents: last.dims.iter().map(|d| d.1).collect() })
}
