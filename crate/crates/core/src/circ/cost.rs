use super::ir::{CircObj, CircuitProgram, Node, NodeId, OffsetExpr, Registry};
use crate::error::{Error, Result};
use crate::lang::BinOp;
use crate::util::ceil_log2;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use core::fmt;

/// value type of a circuit expression; plaintext joins below ciphertext.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VType {
    P,
    C,
}

impl VType {
    pub fn join(self, o: VType) -> VType {
        self.max(o)
    }
}

/// weights of the cost function.
#[derive(Clone, Debug, PartialEq)]
pub struct CostWeights {
    pub add_cc: f64,
    pub add_cp: f64,
    pub add_pp: f64,
    pub sub_cc: f64,
    pub sub_cp: f64,
    pub sub_pp: f64,
    pub mul_cc: f64,
    pub mul_cp: f64,
    pub mul_pp: f64,
    pub rot_c: f64,
    pub rot_p: f64,
    /// per distinct ciphertext input vector.
    pub input_ct: f64,
    /// per distinct plaintext input vector.
    pub input_pt: f64,
    /// per level of multiplicative depth.
    pub depth: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            add_cc: 1.0,
            add_cp: 1.0,
            add_pp: 0.1,
            sub_cc: 1.0,
            sub_cp: 1.0,
            sub_pp: 0.1,
            mul_cc: 2.0,
            mul_cp: 2.0,
            mul_pp: 0.1,
            rot_c: 1.0,
            rot_p: 0.1,
            input_ct: 2.0,
            input_pt: 0.5,
            depth: 1.0,
        }
    }
}

impl CostWeights {
    fn slot(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "add_cc" => &mut self.add_cc,
            "add_cp" => &mut self.add_cp,
            "add_pp" => &mut self.add_pp,
            "sub_cc" => &mut self.sub_cc,
            "sub_cp" => &mut self.sub_cp,
            "sub_pp" => &mut self.sub_pp,
            "mul_cc" => &mut self.mul_cc,
            "mul_cp" => &mut self.mul_cp,
            "mul_pp" => &mut self.mul_pp,
            "rot_c" => &mut self.rot_c,
            "rot_p" => &mut self.rot_p,
            "input_ct" => &mut self.input_ct,
            "input_pt" => &mut self.input_pt,
            "depth" => &mut self.depth,
            _ => return None,
        })
    }

    pub fn set(&mut self, key: &str, v: f64) -> Result<()> {
        match self.slot(key) {
            Some(s) => {
                *s = v;
                Ok(())
            }
            None => Err(Error::Config(format!("unknown weight '{key}'"))),
        }
    }

    /// parse `key = value` lines over the defaults; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut w = CostWeights::default();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config(format!("expected key = value: {line}")))?;
            let v: f64 = v.trim().parse().map_err(|_| Error::Config(format!("bad number in '{line}'")))?;
            w.set(k.trim(), v)?;
        }
        Ok(w)
    }

    pub fn op(&self, op: BinOp, a: VType, b: VType) -> f64 {
        use VType::*;
        let both = (a, b);
        match op {
            BinOp::Add => match both {
                (C, C) => self.add_cc,
                (P, P) => self.add_pp,
                _ => self.add_cp,
            },
            BinOp::Sub => match both {
                (C, C) => self.sub_cc,
                (P, P) => self.sub_pp,
                _ => self.sub_cp,
            },
            BinOp::Mul => match both {
                (C, C) => self.mul_cc,
                (P, P) => self.mul_pp,
                _ => self.mul_cp,
            },
        }
    }

    pub fn rot(&self, t: VType) -> f64 {
        if t == VType::C {
            self.rot_c
        } else {
            self.rot_p
        }
    }
}

/// weighted operation counts keyed like `mul_cp` or `rot_c`.
pub type OpCounts = BTreeMap<String, f64>;

/// cost of a circuit program with its breakdown.
#[derive(Clone, Debug, PartialEq)]
pub struct CostValue {
    pub total: f64,
    pub ops: OpCounts,
    pub input_ct: usize,
    pub input_pt: usize,
    pub depth: u32,
}

impl fmt::Display for CostValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cost {:.2}:", self.total)?;
        for (k, v) in &self.ops {
            write!(f, " {k}={v}")?;
        }
        write!(f, " input_ct={} input_pt={} depth={}", self.input_ct, self.input_pt, self.depth)
    }
}

fn type_key(op: BinOp, a: VType, b: VType) -> String {
    let t = match (a, b) {
        (VType::C, VType::C) => "cc",
        (VType::P, VType::P) => "pp",
        _ => "cp",
    };
    format!("{}_{t}", op.name())
}

struct Walk<'a> {
    prog: &'a CircuitProgram,
    reg: &'a Registry,
    w: &'a CostWeights,
    types: BTreeMap<NodeId, VType>,
    depths: BTreeMap<NodeId, u32>,
    let_depth: BTreeMap<String, u32>,
    seen: BTreeSet<(NodeId, u64)>,
    ops: OpCounts,
    total: f64,
}

impl Walk<'_> {
    fn ty(&mut self, n: NodeId) -> VType {
        if let Some(&t) = self.types.get(&n) {
            return t;
        }
        let t = match self.prog.circuit.node(n) {
            Node::Ct(_) => VType::C,
            Node::Pt(_) | Node::Lit(_) => VType::P,
            Node::Op(_, a, b) => {
                let (a, b) = (*a, *b);
                self.ty(a).join(self.ty(b))
            }
            Node::Rot(_, a) | Node::ReduceDim(_, _, _, a) => {
                let a = *a;
                self.ty(a)
            }
        };
        self.types.insert(n, t);
        t
    }

    fn depth(&mut self, n: NodeId) -> u32 {
        if let Some(&d) = self.depths.get(&n) {
            return d;
        }
        let d = match self.prog.circuit.node(n).clone() {
            Node::Lit(_) | Node::Pt(_) => 0,
            Node::Ct(v) => {
                let mut d = 0;
                if let Some(m) = self.reg.ct.get(&v) {
                    for o in &m.values {
                        if let CircObj::LetRef(l, _) = o {
                            d = d.max(self.let_depth.get(l).copied().unwrap_or(0));
                        }
                    }
                }
                d
            }
            Node::Op(op, a, b) => {
                let d = self.depth(a).max(self.depth(b));
                if op == BinOp::Mul && self.ty(n) == VType::C {
                    d + 1
                } else {
                    d
                }
            }
            Node::Rot(_, a) => self.depth(a),
            Node::ReduceDim(_, e, op, a) => {
                let d = self.depth(a);
                if op == BinOp::Mul && self.ty(n) == VType::C {
                    d + ceil_log2(e)
                } else {
                    d
                }
            }
        };
        self.depths.insert(n, d);
        d
    }

    fn charge(&mut self, key: String, amount: f64, weight: f64) {
        *self.ops.entry(key).or_insert(0.0) += amount;
        self.total += amount * weight;
    }

    fn walk(&mut self, n: NodeId, m: u64) {
        if !self.seen.insert((n, m)) {
            return;
        }
        match self.prog.circuit.node(n).clone() {
            Node::Lit(_) | Node::Pt(_) | Node::Ct(_) => {}
            Node::Op(op, a, b) => {
                let (ta, tb) = (self.ty(a), self.ty(b));
                self.charge(type_key(op, ta, tb), m as f64, self.w.op(op, ta, tb));
                self.walk(a, m);
                self.walk(b, m);
            }
            Node::Rot(o, a) => {
                if o != OffsetExpr::Int(0) {
                    let t = self.ty(a);
                    let key = if t == VType::C { "rot_c" } else { "rot_p" };
                    self.charge(String::from(key), m as f64, self.w.rot(t));
                }
                self.walk(a, m);
            }
            Node::ReduceDim(_, e, op, a) => {
                let t = self.ty(a);
                self.charge(type_key(op, t, t), (m * (e as u64 - 1)) as f64, self.w.op(op, t, t));
                self.walk(a, m * e as u64);
            }
        }
    }
}

/// cost of a circuit program: weighted operations at their multiplicities,
/// distinct input vectors and multiplicative depth.
pub fn cost(p: &CircuitProgram, reg: &Registry, w: &CostWeights) -> CostValue {
    let mut wk = Walk {
        prog: p,
        reg,
        w,
        types: BTreeMap::new(),
        depths: BTreeMap::new(),
        let_depth: BTreeMap::new(),
        seen: BTreeSet::new(),
        ops: OpCounts::new(),
        total: 0.0,
    };
    let mut depth = 0;
    let mut ct_vars = BTreeSet::new();
    let mut pt_vars = BTreeSet::new();
    for l in &p.lets {
        let m: u64 = l.dims.iter().map(|d| d.1 as u64).product();
        wk.seen.clear();
        wk.walk(l.root, m);
        let d = wk.depth(l.root);
        wk.let_depth.insert(l.name.clone(), d);
        depth = depth.max(d);
        for n in p.circuit.topo(l.root) {
            match p.circuit.node(n) {
                Node::Ct(v) => {
                    ct_vars.insert(v.clone());
                }
                Node::Pt(v) => {
                    pt_vars.insert(v.clone());
                }
                _ => {}
            }
        }
    }
    let distinct = |vars: &BTreeSet<String>, maps: &BTreeMap<String, super::ValueMap<CircObj>>| {
        let mut s = BTreeSet::new();
        for v in vars {
            if let Some(m) = maps.get(v) {
                for o in &m.values {
                    if let CircObj::Vector(x) = o {
                        s.insert(x.clone());
                    }
                }
            }
        }
        s.len()
    };
    let input_ct = distinct(&ct_vars, &reg.ct);
    let input_pt = distinct(&pt_vars, &reg.pt);
    let total = wk.total + input_ct as f64 * w.input_ct + input_pt as f64 * w.input_pt + depth as f64 * w.depth;
    CostValue { total, ops: wk.ops, input_ct, input_pt, depth }
}
