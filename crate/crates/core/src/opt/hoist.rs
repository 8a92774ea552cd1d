//! moving plaintext-only subcircuits into native lets.

use crate::circ::{CircLet, CircObj, Circuit, CircuitProgram, Node, NodeId, Registry, VType, ValueMap, VarKind};
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

fn ty(c: &Circuit, n: NodeId, memo: &mut BTreeMap<NodeId, VType>) -> VType {
    if let Some(&t) = memo.get(&n) {
        return t;
    }
    let t = match c.node(n) {
        Node::Ct(_) => VType::C,
        Node::Pt(_) | Node::Lit(_) => VType::P,
        Node::Op(_, a, b) => {
            let (a, b) = (*a, *b);
            ty(c, a, memo).join(ty(c, b, memo))
        }
        Node::Rot(_, a) | Node::ReduceDim(_, _, _, a) => {
            let a = *a;
            ty(c, a, memo)
        }
    };
    memo.insert(n, t);
    t
}

fn free(c: &Circuit, reg: &Registry, n: NodeId, memo: &mut BTreeMap<NodeId, BTreeSet<String>>) -> BTreeSet<String> {
    if let Some(s) = memo.get(&n) {
        return s.clone();
    }
    let s = match c.node(n).clone() {
        Node::Lit(_) => BTreeSet::new(),
        Node::Pt(v) | Node::Ct(v) => {
            let m = reg.pt.get(&v).or_else(|| reg.ct.get(&v));
            m.map(|m| m.params.iter().cloned().collect()).unwrap_or_default()
        }
        Node::Op(_, a, b) => {
            let mut s = free(c, reg, a, memo);
            s.extend(free(c, reg, b, memo));
            s
        }
        Node::Rot(o, a) => {
            let mut s = free(c, reg, a, memo);
            o.dims(&mut s);
            let mut vars = BTreeSet::new();
            o.vars(&mut vars);
            for v in vars {
                if let Some(m) = reg.offsets.get(&v) {
                    s.extend(m.params.iter().cloned());
                }
            }
            s
        }
        Node::ReduceDim(d, _, _, a) => {
            let mut s = free(c, reg, a, memo);
            s.remove(&d);
            s
        }
    };
    memo.insert(n, s.clone());
    s
}

struct Hoister<'a> {
    reg: &'a Registry,
    circuit: Circuit,
    out_reg: Registry,
    types: BTreeMap<NodeId, VType>,
    frees: BTreeMap<NodeId, BTreeSet<String>>,
    done: BTreeMap<NodeId, NodeId>,
    /// hoisted lets waiting to be placed before the current let.
    pending: Vec<CircLet>,
    count: usize,
}

impl Hoister<'_> {
    fn visit(&mut self, n: NodeId, scope: &mut Vec<(String, usize)>) -> NodeId {
        if let Some(&m) = self.done.get(&n) {
            return m;
        }
        let node = self.circuit.node(n).clone();
        let t = ty(&self.circuit, n, &mut self.types);
        let out = if t == VType::P && !node.children().is_empty() {
            self.hoist(n, scope)
        } else {
            match node {
                Node::Op(o, a, b) => {
                    let (a, b) = (self.visit(a, scope), self.visit(b, scope));
                    self.circuit.op(o, a, b)
                }
                Node::Rot(o, a) => {
                    let a = self.visit(a, scope);
                    self.circuit.rot(o, a)
                }
                Node::ReduceDim(d, e, o, a) => {
                    scope.push((d.clone(), e));
                    let a = self.visit(a, scope);
                    scope.pop();
                    self.circuit.add(Node::ReduceDim(d, e, o, a))
                }
                _ => n,
            }
        };
        self.done.insert(n, out);
        out
    }

    fn hoist(&mut self, n: NodeId, scope: &[(String, usize)]) -> NodeId {
        let f = free(&self.circuit, self.reg, n, &mut self.frees);
        let dims: Vec<(String, usize)> = scope.iter().filter(|(d, _)| f.contains(d)).cloned().collect();
        self.count += 1;
        let name = format!("__partial{}", self.count);
        let var = format!("hp{}", self.count);
        let (params, extents): (Vec<String>, Vec<usize>) = dims.iter().cloned().unzip();
        let m = ValueMap::from_fn(params, extents, |c| CircObj::LetRef(name.clone(), c.to_vec()));
        self.out_reg.insert(VarKind::Pt, var.clone(), m);
        self.pending.push(CircLet { name, dims, root: n, native: true });
        self.circuit.add(Node::Pt(var))
    }
}

/// replace each maximal plaintext-only subcircuit of a server let by a
/// plaintext variable bound to a fresh native let computing it; lets that
/// are plaintext throughout become native themselves.
pub fn hoist_plaintexts(p: &CircuitProgram, reg: &Registry) -> (CircuitProgram, Registry) {
    let mut h = Hoister {
        reg,
        circuit: p.circuit.clone(),
        out_reg: reg.clone(),
        types: BTreeMap::new(),
        frees: BTreeMap::new(),
        done: BTreeMap::new(),
        pending: Vec::new(),
        count: 0,
    };
    let mut lets = Vec::new();
    for l in &p.lets {
        let mut l = l.clone();
        if !l.native && ty(&h.circuit, l.root, &mut h.types) == VType::P {
            l.native = true;
        }
        if !l.native {
            let mut scope = l.dims.clone();
            l.root = h.visit(l.root, &mut scope);
            lets.append(&mut h.pending);
        }
        lets.push(l);
    }
    (CircuitProgram { circuit: h.circuit, lets }, h.out_reg)
}

/// binary operations with two plaintext operands outside native lets.
pub fn plain_pairs(p: &CircuitProgram) -> Vec<(String, NodeId)> {
    let mut types = BTreeMap::new();
    let mut out = Vec::new();
    for l in p.lets.iter().filter(|l| !l.native) {
        for n in p.circuit.topo(l.root) {
            if let Node::Op(_, a, b) = p.circuit.node(n) {
                let (a, b) = (*a, *b);
                if ty(&p.circuit, a, &mut types) == VType::P && ty(&p.circuit, b, &mut types) == VType::P {
                    out.push((l.name.clone(), n));
                }
            }
        }
    }
    out
}
