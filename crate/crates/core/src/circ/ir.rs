use crate::lang::BinOp;
use crate::materialize::MaterializedVector;
use crate::tensor::unlinear;
use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// rotation amount: dimension variables, integers, arithmetic and offset variables.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OffsetExpr {
    Int(i64),
    Dim(String),
    Op(BinOp, Box<OffsetExpr>, Box<OffsetExpr>),
    Var(String),
}

impl OffsetExpr {
    pub fn op(op: BinOp, a: OffsetExpr, b: OffsetExpr) -> Self {
        OffsetExpr::Op(op, Box::new(a), Box::new(b))
    }

    /// `c0 + sum(coef * dim)` with zero terms dropped.
    pub fn affine(c0: i64, terms: &[(String, i64)]) -> Self {
        let mut e: Option<OffsetExpr> = None;
        for (d, c) in terms.iter().filter(|(_, c)| *c != 0) {
            let t = if *c == 1 {
                OffsetExpr::Dim(d.clone())
            } else {
                OffsetExpr::op(BinOp::Mul, OffsetExpr::Int(*c), OffsetExpr::Dim(d.clone()))
            };
            e = Some(match e {
                None => t,
                Some(prev) => OffsetExpr::op(BinOp::Add, prev, t),
            });
        }
        match e {
            None => OffsetExpr::Int(c0),
            Some(e) if c0 == 0 => e,
            Some(e) => OffsetExpr::op(BinOp::Add, OffsetExpr::Int(c0), e),
        }
    }

    pub fn eval(&self, dims: &dyn Fn(&str) -> i64, vars: &dyn Fn(&str) -> i64) -> i64 {
        match self {
            OffsetExpr::Int(v) => *v,
            OffsetExpr::Dim(d) => dims(d),
            OffsetExpr::Op(op, a, b) => op.apply(a.eval(dims, vars), b.eval(dims, vars)),
            OffsetExpr::Var(v) => vars(v),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, OffsetExpr::Int(0))
    }

    /// dimension names referenced directly.
    pub fn dims(&self, out: &mut BTreeSet<String>) {
        match self {
            OffsetExpr::Dim(d) => {
                out.insert(d.clone());
            }
            OffsetExpr::Op(_, a, b) => {
                a.dims(out);
                b.dims(out);
            }
            _ => {}
        }
    }

    pub fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            OffsetExpr::Var(v) => {
                out.insert(v.clone());
            }
            OffsetExpr::Op(_, a, b) => {
                a.vars(out);
                b.vars(out);
            }
            _ => {}
        }
    }

    pub fn map_names(&self, dim: &dyn Fn(&str) -> String, var: &dyn Fn(&str) -> String) -> OffsetExpr {
        match self {
            OffsetExpr::Int(v) => OffsetExpr::Int(*v),
            OffsetExpr::Dim(d) => OffsetExpr::Dim(dim(d)),
            OffsetExpr::Var(v) => OffsetExpr::Var(var(v)),
            OffsetExpr::Op(op, a, b) => OffsetExpr::op(*op, a.map_names(dim, var), b.map_names(dim, var)),
        }
    }

    /// constant and coefficients when the expression is linear in its atoms.
    fn linear(&self) -> Option<(i64, BTreeMap<OffsetExpr, i64>)> {
        match self {
            OffsetExpr::Int(v) => Some((*v, BTreeMap::new())),
            OffsetExpr::Dim(_) | OffsetExpr::Var(_) => Some((0, BTreeMap::from([(self.clone(), 1)]))),
            OffsetExpr::Op(op, a, b) => {
                let (ca, ta) = a.linear()?;
                let (cb, tb) = b.linear()?;
                match op {
                    BinOp::Add | BinOp::Sub => {
                        let s = if *op == BinOp::Add { 1 } else { -1 };
                        let mut t = ta;
                        for (k, v) in tb {
                            *t.entry(k).or_insert(0) += s * v;
                        }
                        Some((ca + s * cb, t))
                    }
                    BinOp::Mul => {
                        let (k, c, t) = match (ta.is_empty(), tb.is_empty()) {
                            (true, _) => (ca, cb, tb),
                            (_, true) => (cb, ca, ta),
                            _ => return None,
                        };
                        Some((k * c, t.into_iter().map(|(x, v)| (x, k * v)).collect()))
                    }
                }
            }
        }
    }

    /// canonical affine form, so equal linear offsets compare equal.
    pub fn normalize(&self) -> OffsetExpr {
        let Some((c0, terms)) = self.linear() else {
            return self.simplify();
        };
        let mut e: Option<OffsetExpr> = None;
        for (x, c) in terms.into_iter().filter(|(_, c)| *c != 0) {
            let t = if c == 1 { x } else { OffsetExpr::op(BinOp::Mul, OffsetExpr::Int(c), x) };
            e = Some(match e {
                None => t,
                Some(prev) => OffsetExpr::op(BinOp::Add, prev, t),
            });
        }
        match e {
            None => OffsetExpr::Int(c0),
            Some(e) if c0 == 0 => e,
            Some(e) => OffsetExpr::op(BinOp::Add, OffsetExpr::Int(c0), e),
        }
    }

    /// fold integer-only subterms.
    pub fn simplify(&self) -> OffsetExpr {
        match self {
            OffsetExpr::Op(op, a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                match (&a, &b) {
                    (OffsetExpr::Int(x), OffsetExpr::Int(y)) => OffsetExpr::Int(op.apply(*x, *y)),
                    (OffsetExpr::Int(0), _) if *op == BinOp::Add => b,
                    (_, OffsetExpr::Int(0)) if *op != BinOp::Mul => a,
                    _ => OffsetExpr::op(*op, a, b),
                }
            }
            e => e.clone(),
        }
    }
}

impl fmt::Display for OffsetExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OffsetExpr::Int(v) => write!(f, "{v}"),
            OffsetExpr::Dim(d) => write!(f, "{d}"),
            OffsetExpr::Var(v) => write!(f, "{v}"),
            OffsetExpr::Op(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}

/// tree form of a circuit expression, used for small fragments and tests.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CircExpr {
    Pt(String),
    Ct(String),
    Lit(i64),
    Op(BinOp, Box<CircExpr>, Box<CircExpr>),
    Rot(OffsetExpr, Box<CircExpr>),
    ReduceDim(String, usize, BinOp, Box<CircExpr>),
}

impl CircExpr {
    pub fn op(op: BinOp, a: CircExpr, b: CircExpr) -> Self {
        CircExpr::Op(op, Box::new(a), Box::new(b))
    }

    pub fn rot(o: OffsetExpr, a: CircExpr) -> Self {
        CircExpr::Rot(o, Box::new(a))
    }
}

pub type NodeId = usize;

/// hash-consed circuit node; children are node ids.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Pt(String),
    Ct(String),
    Lit(i64),
    Op(BinOp, NodeId, NodeId),
    Rot(OffsetExpr, NodeId),
    ReduceDim(String, usize, BinOp, NodeId),
}

impl Node {
    pub fn children(&self) -> Vec<NodeId> {
        match self {
            Node::Op(_, a, b) => Vec::from([*a, *b]),
            Node::Rot(_, a) | Node::ReduceDim(_, _, _, a) => Vec::from([*a]),
            _ => Vec::new(),
        }
    }
}

/// arena of structurally unique nodes, so shared subterms form a dag.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Circuit {
    nodes: Vec<Node>,
    index: BTreeMap<Node, NodeId>,
}

impl Circuit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, n: Node) -> NodeId {
        if let Some(&id) = self.index.get(&n) {
            return id;
        }
        let id = self.nodes.len();
        self.nodes.push(n.clone());
        self.index.insert(n, id);
        id
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn op(&mut self, op: BinOp, a: NodeId, b: NodeId) -> NodeId {
        self.add(Node::Op(op, a, b))
    }

    pub fn rot(&mut self, o: OffsetExpr, a: NodeId) -> NodeId {
        self.add(Node::Rot(o, a))
    }

    pub fn insert_tree(&mut self, e: &CircExpr) -> NodeId {
        let n = match e {
            CircExpr::Pt(v) => Node::Pt(v.clone()),
            CircExpr::Ct(v) => Node::Ct(v.clone()),
            CircExpr::Lit(v) => Node::Lit(*v),
            CircExpr::Op(op, a, b) => {
                let (a, b) = (self.insert_tree(a), self.insert_tree(b));
                Node::Op(*op, a, b)
            }
            CircExpr::Rot(o, a) => Node::Rot(o.clone(), self.insert_tree(a)),
            CircExpr::ReduceDim(d, e, op, a) => Node::ReduceDim(d.clone(), *e, *op, self.insert_tree(a)),
        };
        self.add(n)
    }

    /// tree form of a node; exponential for deep sharing, meant for small terms.
    pub fn to_tree(&self, id: NodeId) -> CircExpr {
        match &self.nodes[id] {
            Node::Pt(v) => CircExpr::Pt(v.clone()),
            Node::Ct(v) => CircExpr::Ct(v.clone()),
            Node::Lit(v) => CircExpr::Lit(*v),
            Node::Op(op, a, b) => CircExpr::op(*op, self.to_tree(*a), self.to_tree(*b)),
            Node::Rot(o, a) => CircExpr::rot(o.clone(), self.to_tree(*a)),
            Node::ReduceDim(d, e, op, a) => CircExpr::ReduceDim(d.clone(), *e, *op, Box::new(self.to_tree(*a))),
        }
    }

    /// nodes reachable from `root` in dependency order.
    pub fn topo(&self, root: NodeId) -> Vec<NodeId> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let mut stack = Vec::from([(root, false)]);
        while let Some((n, done)) = stack.pop() {
            if done {
                out.push(n);
                continue;
            }
            if !seen.insert(n) {
                continue;
            }
            stack.push((n, true));
            for c in self.nodes[n].children().into_iter().rev() {
                if !seen.contains(&c) {
                    stack.push((c, false));
                }
            }
        }
        out
    }
}

/// `let name{d1:e1, ..} = root`; native lets run without encryption.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CircLet {
    pub name: String,
    pub dims: Vec<(String, usize)>,
    pub root: NodeId,
    pub native: bool,
}

/// ordered lets sharing one node arena; the last let is `out`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CircuitProgram {
    pub circuit: Circuit,
    pub lets: Vec<CircLet>,
}

impl CircuitProgram {
    pub fn get_let(&self, name: &str) -> Option<&CircLet> {
        self.lets.iter().find(|l| l.name == name)
    }
}

/// value of a plaintext or ciphertext variable at one coordinate.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CircObj {
    Const(i64),
    /// per vectorized dim (extent, lo, hi), inclusive interval of ones.
    Mask(Vec<(usize, usize, usize)>),
    Vector(MaterializedVector),
    /// a coordinate of a let-bound array.
    LetRef(String, Vec<usize>),
}

impl fmt::Display for CircObj {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CircObj::Const(v) => write!(f, "const({v})"),
            CircObj::Mask(m) => {
                write!(f, "mask([")?;
                for (k, (e, lo, hi)) in m.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "({e}, {lo}, {hi})")?;
                }
                write!(f, "])")
            }
            CircObj::Vector(v) => write!(f, "vector({v})"),
            CircObj::LetRef(n, c) => {
                write!(f, "{n}")?;
                for x in c {
                    write!(f, "[{x}]")?;
                }
                Ok(())
            }
        }
    }
}

/// dense map from coordinates over named dims to values.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ValueMap<T> {
    pub params: Vec<String>,
    pub extents: Vec<usize>,
    /// row-major over `extents`.
    pub values: Vec<T>,
}

impl<T: Clone + PartialEq> ValueMap<T> {
    pub fn constant(v: T) -> Self {
        ValueMap { params: Vec::new(), extents: Vec::new(), values: Vec::from([v]) }
    }

    pub fn from_fn(params: Vec<String>, extents: Vec<usize>, mut f: impl FnMut(&[usize]) -> T) -> Self {
        let n: usize = extents.iter().product();
        let values = (0..n).map(|o| f(&unlinear(&extents, o))).collect();
        ValueMap { params, extents, values }
    }

    pub fn index_of(&self, coord: &[usize]) -> usize {
        coord.iter().zip(&self.extents).fold(0, |o, (&c, &e)| o * e + c)
    }

    /// value at the coordinate given by a dim lookup.
    pub fn lookup(&self, dims: &dyn Fn(&str) -> i64) -> &T {
        let coord: Vec<usize> = self.params.iter().map(|p| dims(p) as usize).collect();
        &self.values[self.index_of(&coord)]
    }

    pub fn at(&self, coord: &[usize]) -> &T {
        &self.values[self.index_of(coord)]
    }

    /// true when every coordinate maps to the same value.
    pub fn is_uniform(&self) -> bool {
        self.values.windows(2).all(|w| w[0] == w[1])
    }

    pub fn coords(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        let n: usize = self.extents.iter().product();
        (0..n).map(move |o| unlinear(&self.extents, o))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarKind {
    Pt,
    Ct,
}

/// resolves offset, plaintext and ciphertext variables per coordinate.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Registry {
    pub offsets: BTreeMap<String, ValueMap<i64>>,
    pub pt: BTreeMap<String, ValueMap<CircObj>>,
    pub ct: BTreeMap<String, ValueMap<CircObj>>,
}

impl Registry {
    pub fn var(&self, kind: VarKind, name: &str) -> Option<&ValueMap<CircObj>> {
        match kind {
            VarKind::Pt => self.pt.get(name),
            VarKind::Ct => self.ct.get(name),
        }
    }

    pub fn insert(&mut self, kind: VarKind, name: String, m: ValueMap<CircObj>) {
        match kind {
            VarKind::Pt => self.pt.insert(name, m),
            VarKind::Ct => self.ct.insert(name, m),
        };
    }

    /// distinct input vectors of each kind.
    pub fn input_vectors(&self) -> (usize, usize) {
        let count = |m: &BTreeMap<String, ValueMap<CircObj>>| {
            let mut s = BTreeSet::new();
            for vm in m.values() {
                for v in &vm.values {
                    if let CircObj::Vector(x) = v {
                        s.insert(x.clone());
                    }
                }
            }
            s.len()
        };
        (count(&self.ct), count(&self.pt))
    }
}

fn fmt_node(c: &Circuit, id: NodeId, names: &BTreeMap<NodeId, String>, top: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if !top {
        if let Some(n) = names.get(&id) {
            return write!(f, "{n}");
        }
    }
    match c.node(id) {
        Node::Pt(v) | Node::Ct(v) => write!(f, "{v}"),
        Node::Lit(v) => write!(f, "{v}"),
        Node::Op(op, a, b) => {
            write!(f, "(")?;
            fmt_node(c, *a, names, false, f)?;
            write!(f, " {} ", op.symbol())?;
            fmt_node(c, *b, names, false, f)?;
            write!(f, ")")
        }
        Node::Rot(o, a) => {
            write!(f, "rot({o}, ")?;
            fmt_node(c, *a, names, false, f)?;
            write!(f, ")")
        }
        Node::ReduceDim(d, e, op, a) => {
            let kw = if *op == BinOp::Mul { "product" } else { "sum" };
            write!(f, "{kw}_vec{{{d}:{e}}}(")?;
            fmt_node(c, *a, names, false, f)?;
            write!(f, ")")
        }
    }
}

impl fmt::Display for CircuitProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.lets {
            // shared non-leaf nodes get their own line
            let order = self.circuit.topo(l.root);
            let mut uses: BTreeMap<NodeId, usize> = BTreeMap::new();
            for &n in &order {
                for ch in self.circuit.node(n).children() {
                    *uses.entry(ch).or_insert(0) += 1;
                }
            }
            let mut names = BTreeMap::new();
            for &n in &order {
                let leaf = self.circuit.node(n).children().is_empty();
                if !leaf && n != l.root && uses.get(&n).copied().unwrap_or(0) > 1 {
                    names.insert(n, alloc::format!("t{n}"));
                }
            }
            let kw = if l.native { "let native" } else { "let" };
            write!(f, "{kw} {}{{", l.name)?;
            for (k, (d, e)) in l.dims.iter().enumerate() {
                if k > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{d}:{e}")?;
            }
            writeln!(f, "}} =")?;
            for &n in &order {
                if let Some(name) = names.get(&n) {
                    write!(f, "  {name} = ")?;
                    fmt_node(&self.circuit, n, &names, true, f)?;
                    writeln!(f)?;
                }
            }
            write!(f, "  ")?;
            fmt_node(&self.circuit, l.root, &names, true, f)?;
            writeln!(f)?;
        }
        Ok(())
    }
}

impl fmt::Display for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn table<T: fmt::Display + Clone + PartialEq>(f: &mut fmt::Formatter<'_>, name: &str, m: &ValueMap<T>) -> fmt::Result {
            writeln!(f, "{name}:")?;
            for c in m.coords() {
                write!(f, "  {{")?;
                for (k, (p, x)) in m.params.iter().zip(&c).enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{p} -> {x}")?;
                }
                writeln!(f, "}} -> {}", m.at(&c))?;
            }
            Ok(())
        }
        for (n, m) in &self.offsets {
            table(f, n, m)?;
        }
        for (n, m) in &self.ct {
            table(f, n, m)?;
        }
        for (n, m) in &self.pt {
            table(f, n, m)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_consing_shares() {
        let mut c = Circuit::new();
        let x = c.add(Node::Ct("x".into()));
        let y = c.add(Node::Ct("x".into()));
        assert_eq!(x, y);
        let a = c.op(BinOp::Add, x, x);
        let b = c.op(BinOp::Add, x, x);
        assert_eq!(a, b);
        assert_eq!(c.topo(a), alloc::vec![x, a]);
    }

    #[test]
    fn affine_offsets() {
        let o = OffsetExpr::affine(0, &[("i".into(), -128), ("j".into(), -1)]);
        assert_eq!(alloc::format!("{o}"), "((-128 * i) + (-1 * j))");
        let v = o.eval(&|d| if d == "i" { 1 } else { 2 }, &|_| 0);
        assert_eq!(v, -130);
        assert_eq!(OffsetExpr::affine(3, &[]), OffsetExpr::Int(3));
    }

    #[test]
    fn normalized_offsets_compare_equal() {
        let i = || OffsetExpr::Dim("i".into());
        let a = OffsetExpr::op(BinOp::Add, OffsetExpr::op(BinOp::Mul, OffsetExpr::Int(-1), i()), OffsetExpr::Int(3));
        let b = OffsetExpr::op(BinOp::Sub, OffsetExpr::Int(3), i());
        assert_eq!(a.normalize(), b.normalize());
        assert_eq!(alloc::format!("{}", a.normalize()), "(3 + (-1 * i))");
        let z = OffsetExpr::op(BinOp::Sub, i(), i());
        assert_eq!(z.normalize(), OffsetExpr::Int(0));
    }

    #[test]
    fn value_map_lookup() {
        let m = ValueMap::from_fn(alloc::vec!["a".into(), "b".into()], alloc::vec![2, 3], |c| c[0] * 10 + c[1]);
        assert_eq!(*m.at(&[1, 2]), 12);
        assert_eq!(*m.lookup(&|d| if d == "a" { 1 } else { 0 }), 10);
        assert!(!m.is_uniform());
    }
}
