//! equality saturation over circuit nodes with a greedy cost-guided extractor.

use crate::circ::{CostWeights, Node, OffsetExpr, Registry, VType};
use crate::lang::BinOp;
use crate::util::ceil_log2;
use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

/// e-class id; e-nodes reuse [`Node`] with class ids as children.
pub(crate) type Id = usize;

/// right-hand side of a rewrite, built from existing classes.
#[derive(Clone, Debug)]
pub(crate) enum Term {
    Class(Id),
    Lit(i64),
    Op(BinOp, Box<Term>, Box<Term>),
    Rot(OffsetExpr, Box<Term>),
    Red(String, usize, BinOp, Box<Term>),
}

fn op(o: BinOp, a: Term, b: Term) -> Term {
    Term::Op(o, Box::new(a), Box::new(b))
}

fn rot(o: OffsetExpr, a: Term) -> Term {
    Term::Rot(o, Box::new(a))
}

fn red(d: &str, e: usize, o: BinOp, a: Term) -> Term {
    Term::Red(String::from(d), e, o, Box::new(a))
}

/// chosen node of a class with its tree cost, type and depth.
#[derive(Clone, Debug)]
pub(crate) struct Best {
    pub score: f64,
    pub cost: f64,
    pub ty: VType,
    pub depth: u32,
    pub node: Node,
}

pub(crate) struct EGraph<'a> {
    reg: &'a Registry,
    parent: Vec<Id>,
    classes: BTreeMap<Id, Vec<Node>>,
    memo: BTreeMap<Node, Id>,
    lit: BTreeMap<Id, i64>,
    /// dims a class may depend on; `None` is not yet known.
    free: BTreeMap<Id, Option<BTreeSet<String>>>,
}

impl<'a> EGraph<'a> {
    pub fn new(reg: &'a Registry) -> Self {
        EGraph { reg, parent: Vec::new(), classes: BTreeMap::new(), memo: BTreeMap::new(), lit: BTreeMap::new(), free: BTreeMap::new() }
    }

    pub fn find(&self, mut a: Id) -> Id {
        while self.parent[a] != a {
            a = self.parent[a];
        }
        a
    }

    /// number of e-nodes.
    pub fn size(&self) -> usize {
        self.memo.len()
    }

    pub fn nodes(&self, c: Id) -> &[Node] {
        &self.classes[&self.find(c)]
    }

    fn lit_of(&self, c: Id) -> Option<i64> {
        self.lit.get(&self.find(c)).copied()
    }

    fn canon(&self, n: &Node) -> Node {
        match n {
            Node::Op(o, a, b) => Node::Op(*o, self.find(*a), self.find(*b)),
            Node::Rot(o, a) => Node::Rot(o.clone(), self.find(*a)),
            Node::ReduceDim(d, e, o, a) => Node::ReduceDim(d.clone(), *e, *o, self.find(*a)),
            leaf => leaf.clone(),
        }
    }

    pub fn add(&mut self, n: Node) -> Id {
        let n = self.canon(&n);
        if let Some(&id) = self.memo.get(&n) {
            return self.find(id);
        }
        let id = self.parent.len();
        self.parent.push(id);
        if let Node::Lit(v) = n {
            self.lit.insert(id, v);
        }
        self.classes.insert(id, Vec::from([n.clone()]));
        self.memo.insert(n, id);
        id
    }

    pub fn add_term(&mut self, t: &Term) -> Id {
        match t {
            Term::Class(c) => self.find(*c),
            Term::Lit(v) => self.add(Node::Lit(*v)),
            Term::Op(o, a, b) => {
                let (a, b) = (self.add_term(a), self.add_term(b));
                self.add(Node::Op(*o, a, b))
            }
            Term::Rot(o, a) => {
                let a = self.add_term(a);
                self.add(Node::Rot(o.clone(), a))
            }
            Term::Red(d, e, o, a) => {
                let a = self.add_term(a);
                self.add(Node::ReduceDim(d.clone(), *e, *o, a))
            }
        }
    }

    /// merge two classes; true when they were distinct.
    pub fn union(&mut self, a: Id, b: Id) -> bool {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        let (keep, gone) = (a.min(b), a.max(b));
        self.parent[gone] = keep;
        let moved = self.classes.remove(&gone).unwrap_or_default();
        self.classes.entry(keep).or_default().extend(moved);
        if let Some(v) = self.lit.remove(&gone) {
            debug_assert!(self.lit.get(&keep).is_none_or(|&k| k == v), "merged distinct literals");
            self.lit.insert(keep, v);
        }
        self.free.remove(&gone);
        true
    }

    /// restore congruence: equal canonical nodes share one class.
    pub fn rebuild(&mut self) {
        loop {
            let mut memo: BTreeMap<Node, Id> = BTreeMap::new();
            let mut merges = Vec::new();
            let ids: Vec<Id> = self.classes.keys().copied().collect();
            for id in ids {
                let mut nodes: Vec<Node> = self.classes[&id].iter().map(|n| self.canon(n)).collect();
                nodes.sort();
                nodes.dedup();
                for n in &nodes {
                    match memo.get(n) {
                        Some(&o) if o != id => merges.push((o, id)),
                        Some(_) => {}
                        None => {
                            memo.insert(n.clone(), id);
                        }
                    }
                }
                self.classes.insert(id, nodes);
            }
            self.memo = memo;
            if merges.is_empty() {
                break;
            }
            for (a, b) in merges {
                self.union(a, b);
            }
        }
    }

    /// dims an offset depends on, including registry params of offset variables.
    pub fn offset_dims(&self, o: &OffsetExpr) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        o.dims(&mut s);
        let mut vars = BTreeSet::new();
        o.vars(&mut vars);
        for v in vars {
            if let Some(m) = self.reg.offsets.get(&v) {
                s.extend(m.params.iter().cloned());
            }
        }
        s
    }

    fn node_free(&self, n: &Node) -> Option<BTreeSet<String>> {
        let child = |c: &Id| self.free.get(&self.find(*c)).cloned().flatten();
        Some(match n {
            Node::Lit(_) => BTreeSet::new(),
            Node::Pt(v) | Node::Ct(v) => {
                let m = self.reg.pt.get(v).or_else(|| self.reg.ct.get(v));
                m.map(|m| m.params.iter().cloned().collect()).unwrap_or_default()
            }
            Node::Op(_, a, b) => {
                let mut s = child(a)?;
                s.extend(child(b)?);
                s
            }
            Node::Rot(o, a) => {
                let mut s = child(a)?;
                s.extend(self.offset_dims(o));
                s
            }
            Node::ReduceDim(d, _, _, a) => {
                let mut s = child(a)?;
                s.remove(d);
                s
            }
        })
    }

    /// greatest fixpoint of free dims; a class depends on at most the dims
    /// of any of its nodes.
    pub fn analyze(&mut self) {
        self.free = self.classes.keys().map(|&c| (c, None)).collect();
        loop {
            let mut changed = false;
            for (&c, nodes) in &self.classes {
                let mut acc: Option<BTreeSet<String>> = None;
                for n in nodes {
                    if let Some(s) = self.node_free(n) {
                        acc = Some(match acc {
                            None => s,
                            Some(a) => a.intersection(&s).cloned().collect(),
                        });
                    }
                }
                if acc.is_some() && self.free[&c] != acc {
                    self.free.insert(c, acc);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }

    fn depends(&self, c: Id, d: &str) -> bool {
        self.free.get(&self.find(c)).cloned().flatten().is_none_or(|s| s.contains(d))
    }

    /// all rewrite instances in the current graph, as (class, equal term).
    pub fn matches(&self) -> Vec<(Id, Term)> {
        use BinOp::*;
        use Term::Class as C;
        let mut out = Vec::new();
        for (&c, nodes) in &self.classes {
            for n in nodes {
                match n {
                    Node::Op(o, a, b) => {
                        let (a, b, o) = (*a, *b, *o);
                        let (la, lb) = (self.lit_of(a), self.lit_of(b));
                        if let (Some(x), Some(y)) = (la, lb) {
                            out.push((c, Term::Lit(o.apply(x, y))));
                        }
                        match o {
                            Add => {
                                if lb == Some(0) {
                                    out.push((c, C(a)));
                                }
                            }
                            Sub => {
                                if lb == Some(0) {
                                    out.push((c, C(a)));
                                }
                                if a == b {
                                    out.push((c, Term::Lit(0)));
                                }
                            }
                            Mul => {
                                if lb == Some(1) {
                                    out.push((c, C(a)));
                                }
                                if la == Some(0) || lb == Some(0) {
                                    out.push((c, Term::Lit(0)));
                                }
                            }
                        }
                        if o.commutative() {
                            out.push((c, op(o, C(b), C(a))));
                            for m in self.nodes(a) {
                                if let Node::Op(o2, x, y) = m {
                                    if *o2 == o {
                                        out.push((c, op(o, C(*x), op(o, C(*y), C(b)))));
                                    }
                                }
                            }
                            for m in self.nodes(b) {
                                if let Node::Op(o2, x, y) = m {
                                    if *o2 == o {
                                        out.push((c, op(o, op(o, C(a), C(*x)), C(*y))));
                                    }
                                }
                            }
                        }
                        if o == Mul {
                            for m in self.nodes(b) {
                                if let Node::Op(inner @ (Add | Sub), x, y) = m {
                                    out.push((c, op(*inner, op(Mul, C(a), C(*x)), op(Mul, C(a), C(*y)))));
                                }
                            }
                        } else {
                            for m in self.nodes(a) {
                                for m2 in self.nodes(b) {
                                    if let (Node::Op(Mul, x, y), Node::Op(Mul, x2, y2)) = (m, m2) {
                                        if self.find(*x) == self.find(*x2) {
                                            out.push((c, op(Mul, C(*x), op(o, C(*y), C(*y2)))));
                                        }
                                    }
                                }
                            }
                        }
                        for m in self.nodes(a) {
                            for m2 in self.nodes(b) {
                                if let (Node::Rot(p, x), Node::Rot(q, y)) = (m, m2) {
                                    if p == q {
                                        out.push((c, rot(p.clone(), op(o, C(*x), C(*y)))));
                                    }
                                }
                            }
                        }
                    }
                    Node::Rot(o, a) => {
                        let a = *a;
                        if o.is_zero() || self.lit_of(a).is_some() {
                            out.push((c, C(a)));
                        }
                        if let OffsetExpr::Op(Add, o1, o2) = o {
                            out.push((c, rot((**o1).clone(), rot((**o2).clone(), C(a)))));
                        }
                        for m in self.nodes(a) {
                            match m {
                                Node::Rot(o2, x) => {
                                    let s = OffsetExpr::op(Add, o.clone(), o2.clone()).normalize();
                                    out.push((c, rot(s, C(*x))));
                                }
                                Node::Op(o2, x, y) => {
                                    out.push((c, op(*o2, rot(o.clone(), C(*x)), rot(o.clone(), C(*y)))));
                                }
                                Node::ReduceDim(d, e, o2, x) if !self.offset_dims(o).contains(d) => {
                                    out.push((c, red(d, *e, *o2, rot(o.clone(), C(*x)))));
                                }
                                _ => {}
                            }
                        }
                    }
                    Node::ReduceDim(d, e, ro, a) => {
                        for m in self.nodes(*a) {
                            match m {
                                Node::Rot(o, x) if !self.offset_dims(o).contains(d) => {
                                    out.push((c, rot(o.clone(), red(d, *e, *ro, C(*x)))));
                                }
                                Node::Op(Mul, x, y) if *ro == Add => {
                                    if !self.depends(*x, d) {
                                        out.push((c, op(Mul, C(*x), red(d, *e, Add, C(*y)))));
                                    }
                                    if !self.depends(*y, d) {
                                        out.push((c, op(Mul, red(d, *e, Add, C(*x)), C(*y))));
                                    }
                                }
                                _ => {}
                            }
                        }
                    }
                    _ => {}
                }
            }
        }
        out
    }

    /// cheapest node per class by tree cost plus weighted depth.
    pub fn extract(&self, w: &CostWeights) -> BTreeMap<Id, Best> {
        let mut best: BTreeMap<Id, Best> = BTreeMap::new();
        loop {
            let mut changed = false;
            for (&c, nodes) in &self.classes {
                for n in nodes {
                    let Some(b) = self.node_cost(n, &best, w) else { continue };
                    let better = match best.get(&c) {
                        None => true,
                        Some(cur) => b.score < cur.score || (b.score == cur.score && b.ty < cur.ty),
                    };
                    if better {
                        best.insert(c, b);
                        changed = true;
                    }
                }
            }
            if !changed {
                return best;
            }
        }
    }

    fn node_cost(&self, n: &Node, best: &BTreeMap<Id, Best>, w: &CostWeights) -> Option<Best> {
        let get = |c: &Id| best.get(&self.find(*c));
        let (cost, ty, depth) = match n {
            Node::Lit(_) | Node::Pt(_) => (0.0, VType::P, 0),
            Node::Ct(_) => (0.0, VType::C, 0),
            Node::Op(o, a, b) => {
                let (x, y) = (get(a)?, get(b)?);
                let ty = x.ty.join(y.ty);
                let d = x.depth.max(y.depth) + (*o == BinOp::Mul && ty == VType::C) as u32;
                (x.cost + y.cost + w.op(*o, x.ty, y.ty), ty, d)
            }
            Node::Rot(o, a) => {
                let x = get(a)?;
                let r = if o.is_zero() { 0.0 } else { w.rot(x.ty) };
                (x.cost + r, x.ty, x.depth)
            }
            Node::ReduceDim(_, e, o, a) => {
                let x = get(a)?;
                let d = x.depth + if *o == BinOp::Mul && x.ty == VType::C { ceil_log2(*e) } else { 0 };
                (*e as f64 * x.cost + (*e as f64 - 1.0) * w.op(*o, x.ty, x.ty), x.ty, d)
            }
        };
        Some(Best { score: cost + w.depth * depth as f64, cost, ty, depth, node: n.clone() })
    }
}
