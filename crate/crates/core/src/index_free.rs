//! index-free form: for-loops and indexing are replaced by indexing sites
//! that carry array traversals.

use crate::error::{Error, Result};
use crate::lang::{BinOp, Expr, ShapedProgram, Stmt};
use crate::tensor::{positions, Tensor};
use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// one array dimension a traversal dimension moves along, with its step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContentDim {
    pub dim: usize,
    pub stride: i64,
}

/// a traversal dimension; empty content means the traversal repeats along it.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TraversalDim {
    pub extent: usize,
    pub content: Vec<ContentDim>,
}

/// n-dimensional view of an indexed array.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArrayTraversal {
    pub array: String,
    pub offsets: Vec<i64>,
    pub dims: Vec<TraversalDim>,
}

impl ArrayTraversal {
    pub fn extents(&self) -> Vec<usize> {
        self.dims.iter().map(|d| d.extent).collect()
    }

    /// array index read at traversal position `pos` (possibly out of bounds).
    pub fn index_at(&self, pos: &[usize]) -> Vec<i64> {
        let mut idx = self.offsets.clone();
        for (td, &p) in self.dims.iter().zip(pos) {
            for c in &td.content {
                idx[c.dim] += c.stride * p as i64;
            }
        }
        idx
    }
}

pub(crate) fn fmt_content(f: &mut fmt::Formatter<'_>, content: &[ContentDim]) -> fmt::Result {
    write!(f, "{{")?;
    for (k, c) in content.iter().enumerate() {
        if k > 0 {
            write!(f, ",")?;
        }
        write!(f, "{}::{}", c.dim, c.stride)?;
    }
    write!(f, "}}")
}

impl fmt::Display for ArrayTraversal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:(", self.array)?;
        for (k, o) in self.offsets.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{o}")?;
        }
        write!(f, ")[")?;
        for (k, d) in self.dims.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{{{},", d.extent)?;
            fmt_content(f, &d.content)?;
            write!(f, "}}")?;
        }
        write!(f, "]")
    }
}

pub type SiteId = usize;

/// expression of the index-free program.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum IfExpr {
    Lit(i64),
    Site(SiteId, ArrayTraversal),
    Op(BinOp, Box<IfExpr>, Box<IfExpr>),
    /// operator, reduced dimension, its extent, body.
    Reduce(BinOp, usize, usize, Box<IfExpr>),
}

impl IfExpr {
    /// shape of the value, none for broadcasting literal expressions.
    pub fn shape(&self) -> Option<Vec<usize>> {
        match self {
            IfExpr::Lit(_) => None,
            IfExpr::Site(_, t) => Some(t.extents()),
            IfExpr::Op(_, a, b) => a.shape().or_else(|| b.shape()),
            IfExpr::Reduce(_, n, _, e) => e.shape().map(|mut s| {
                s.remove(*n);
                s
            }),
        }
    }

    /// visit every site in left-to-right order.
    pub fn for_each_site<'a>(&'a self, f: &mut impl FnMut(SiteId, &'a ArrayTraversal)) {
        match self {
            IfExpr::Lit(_) => {}
            IfExpr::Site(id, t) => f(*id, t),
            IfExpr::Op(_, a, b) => {
                a.for_each_site(f);
                b.for_each_site(f);
            }
            IfExpr::Reduce(_, _, _, e) => e.for_each_site(f),
        }
    }
}

impl fmt::Display for IfExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IfExpr::Lit(v) => write!(f, "{v}"),
            IfExpr::Site(id, _) => write!(f, "s{id}"),
            IfExpr::Op(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            IfExpr::Reduce(op, n, _, e) => {
                let kw = if *op == BinOp::Mul { "product" } else { "sum" };
                write!(f, "{kw}({n}, {e})")
            }
        }
    }
}

/// the whole program in index-free form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexFreeProgram {
    pub shaped: ShapedProgram,
    pub lets: Vec<(String, IfExpr)>,
    pub output: IfExpr,
    pub num_sites: usize,
}

impl IndexFreeProgram {
    /// every site with its traversal, ordered by id.
    pub fn sites(&self) -> Vec<(SiteId, &ArrayTraversal)> {
        let mut out = Vec::new();
        for (_, e) in &self.lets {
            e.for_each_site(&mut |id, t| out.push((id, t)));
        }
        self.output.for_each_site(&mut |id, t| out.push((id, t)));
        out.sort_by_key(|(id, _)| *id);
        out
    }

    pub fn array_shape(&self, name: &str) -> &[usize] {
        &self.shaped.arrays[name].shape
    }

    pub fn is_input(&self, name: &str) -> bool {
        self.shaped.is_input(name)
    }
}

impl fmt::Display for IndexFreeProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (id, t) in self.sites() {
            writeln!(f, "s{id} = {t}")?;
        }
        for (n, e) in &self.lets {
            writeln!(f, "let {n} = {e}")?;
        }
        writeln!(f, "out = {}", self.output)
    }
}

struct Conv<'a> {
    sp: &'a ShapedProgram,
    fors: Vec<(String, usize)>,
    next: SiteId,
}

impl Conv<'_> {
    fn conv(&mut self, e: &Expr) -> Result<IfExpr> {
        match e {
            Expr::Lit(v) => Ok(IfExpr::Lit(*v)),
            Expr::Index(a, idx) => {
                let shape = &self.sp.arrays[a].shape;
                let k = idx.len();
                let mut dims = Vec::new();
                for (p, (v, n)) in self.fors.iter().enumerate() {
                    let shadowed = self.fors[p + 1..].iter().any(|(w, _)| w == v);
                    let mut content = Vec::new();
                    if !shadowed {
                        for (d, i) in idx.iter().enumerate() {
                            let c = i.coeff(v);
                            if c != 0 {
                                content.push(ContentDim { dim: d, stride: c });
                            }
                        }
                    }
                    dims.push(TraversalDim { extent: *n, content });
                }
                for (d, &ext) in shape.iter().enumerate().skip(k) {
                    dims.push(TraversalDim { extent: ext, content: Vec::from([ContentDim { dim: d, stride: 1 }]) });
                }
                let mut offsets: Vec<i64> = idx.iter().map(|i| i.constant).collect();
                offsets.resize(shape.len(), 0);
                let id = self.next;
                self.next += 1;
                Ok(IfExpr::Site(id, ArrayTraversal { array: a.clone(), offsets, dims }))
            }
            Expr::Op(op, a, b) => Ok(IfExpr::Op(*op, Box::new(self.conv(a)?), Box::new(self.conv(b)?))),
            Expr::Reduce(op, n, body) => {
                let mut scope = self.fors.clone();
                let (shape, _) = crate::lang::infer_shape(body, &self.sp.arrays, &mut scope)?;
                let shape = shape.ok_or_else(|| Error::Check(String::from("cannot reduce a broadcast literal")))?;
                let extent = shape[*n];
                let c = self.conv(body)?;
                Ok(IfExpr::Reduce(*op, self.fors.len() + n, extent, Box::new(c)))
            }
            Expr::For(v, n, body) => {
                self.fors.push((v.clone(), *n));
                let r = self.conv(body);
                self.fors.pop();
                r
            }
        }
    }
}

/// eliminate for-loops and indexing.
pub fn to_index_free(sp: &ShapedProgram) -> Result<IndexFreeProgram> {
    let mut c = Conv { sp, fors: Vec::new(), next: 0 };
    let mut lets = Vec::new();
    for s in &sp.program.stmts {
        if let Stmt::Let(n, e) = s {
            lets.push((n.clone(), c.conv(e)?));
        }
    }
    let output = c.conv(&sp.program.output)?;
    Ok(IndexFreeProgram { shaped: sp.clone(), lets, output, num_sites: c.next })
}

/// a maximal group of sites joined by element-wise operations without an
/// intervening reduction; its members must share one layout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    pub sites: Vec<SiteId>,
    /// number of reduction results combined in the region.
    pub reduce_leaves: usize,
    pub shape: Option<Vec<usize>>,
}

fn collect_regions(e: &IfExpr, out: &mut Vec<Region>) {
    let mut r = Region { sites: Vec::new(), reduce_leaves: 0, shape: e.shape() };
    let mut nested = Vec::new();
    fn walk<'a>(e: &'a IfExpr, r: &mut Region, nested: &mut Vec<&'a IfExpr>) {
        match e {
            IfExpr::Lit(_) => {}
            IfExpr::Site(id, _) => r.sites.push(*id),
            IfExpr::Op(_, a, b) => {
                walk(a, r, nested);
                walk(b, r, nested);
            }
            IfExpr::Reduce(_, _, _, c) => {
                r.reduce_leaves += 1;
                nested.push(c);
            }
        }
    }
    walk(e, &mut r, &mut nested);
    out.push(r);
    for c in nested {
        collect_regions(c, out);
    }
}

/// all regions of a program: let bodies, the output, and reduction bodies.
pub fn regions(p: &IndexFreeProgram) -> Vec<Region> {
    let mut out = Vec::new();
    for (_, e) in &p.lets {
        collect_regions(e, &mut out);
    }
    collect_regions(&p.output, &mut out);
    out
}

fn eval_at(e: &IfExpr, pos: &[usize], arrays: &BTreeMap<String, Tensor>) -> i64 {
    match e {
        IfExpr::Lit(v) => *v,
        IfExpr::Site(_, t) => arrays[&t.array].get(&t.index_at(pos)),
        IfExpr::Op(op, a, b) => op.apply(eval_at(a, pos, arrays), eval_at(b, pos, arrays)),
        IfExpr::Reduce(op, n, ext, c) => {
            let wild = c.shape().is_none();
            let mut acc = op.identity();
            let mut p = pos.to_vec();
            if !wild {
                p.insert(*n, 0);
            }
            for k in 0..*ext {
                if !wild {
                    p[*n] = k;
                }
                acc = op.apply(acc, eval_at(c, &p, arrays));
            }
            acc
        }
    }
}

fn eval_expr(e: &IfExpr, shape: &[usize], arrays: &BTreeMap<String, Tensor>) -> Tensor {
    let data = positions(shape).map(|p| eval_at(e, &p, arrays)).collect();
    Tensor::new(shape.to_vec(), data)
}

/// reference semantics of the index-free form, used to validate conversion.
pub fn eval(p: &IndexFreeProgram, inputs: &BTreeMap<String, Tensor>) -> Result<Tensor> {
    let mut arrays = BTreeMap::new();
    for d in p.shaped.program.inputs() {
        let t = inputs.get(&d.name).ok_or_else(|| Error::Input(format!("missing input '{}'", d.name)))?;
        arrays.insert(d.name.clone(), t.clone());
    }
    for (n, e) in &p.lets {
        let shape = p.shaped.arrays[n].shape.clone();
        let t = eval_expr(e, &shape, &arrays);
        arrays.insert(n.clone(), t);
    }
    Ok(eval_expr(&p.output, &p.shaped.output_shape, &arrays))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::lang::{check, parse};
    use alloc::string::ToString;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ifp(src: &str) -> IndexFreeProgram {
        to_index_free(&check(parse(src).unwrap()).unwrap()).unwrap()
    }

    #[test]
    fn distance_traversals() {
        let p = ifp(&corpus::distance_fig(4));
        let s: Vec<String> = p.sites().iter().map(|(_, t)| t.to_string()).collect();
        assert_eq!(s[0], "x:(0)[{4,{}},{4,{0::1}}]");
        assert_eq!(s[1], "a:(0,0)[{4,{0::1}},{4,{1::1}}]");
        assert_eq!(s.len(), 4);
        assert!(matches!(p.output, IfExpr::Reduce(BinOp::Add, 1, 4, _)));
    }

    #[test]
    fn conv_traversal() {
        let p = ifp(&corpus::conv_siso(32));
        let img = p.sites().into_iter().find(|(_, t)| t.array == "img").unwrap().1.clone();
        let ext: Vec<usize> = img.dims.iter().map(|d| d.extent).collect();
        assert_eq!(ext, vec![30, 30, 3, 3]);
        assert_eq!(img.dims[0].content, vec![ContentDim { dim: 0, stride: 1 }]);
        assert_eq!(img.dims[2].content, vec![ContentDim { dim: 0, stride: 1 }]);
        assert_eq!(img.dims[1].content, vec![ContentDim { dim: 1, stride: 1 }]);
        assert_eq!(img.dims[3].content, vec![ContentDim { dim: 1, stride: 1 }]);
    }

    #[test]
    fn constant_index() {
        let p = ifp("input a: [4] from client\na[2]");
        let (_, t) = p.sites()[0];
        assert_eq!(t.offsets, vec![2]);
        assert!(t.dims.is_empty());
    }

    #[test]
    fn residual_dims_and_repeated_var() {
        let p = ifp("input a: [3,3] from client\nfor i: 3 { a[i][i] * sum(a[i]) }");
        let sites = p.sites();
        assert_eq!(sites[0].1.dims[0].content.len(), 2);
        assert_eq!(sites[1].1.dims.len(), 2);
    }

    #[test]
    fn shadowed_loop_var() {
        let p = ifp("input a: [3,3] from client\nfor i: 3 { for i: 3 { a[i][1] } }");
        let (_, t) = p.sites()[0];
        assert!(t.dims[0].content.is_empty());
        assert_eq!(t.dims[1].content, vec![ContentDim { dim: 0, stride: 1 }]);
    }

    #[test]
    fn dims_match_enclosing_fors() {
        let p = ifp(&corpus::conv_simo(8, 2));
        for (_, t) in p.sites() {
            assert_eq!(t.dims.len(), 5);
        }
    }

    #[test]
    fn regions_of_distance() {
        let p = ifp(&corpus::distance_fig(4));
        let r = regions(&p);
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].reduce_leaves, 1);
        assert_eq!(r[1].sites, vec![0, 1, 2, 3]);
    }

    #[test]
    fn semantics_preserved_on_corpus() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (name, src) in corpus::all_reduced() {
            let sp = check(parse(&src).unwrap()).unwrap();
            let p = to_index_free(&sp).unwrap();
            for _ in 0..5 {
                let ins: BTreeMap<String, Tensor> = sp
                    .program
                    .inputs()
                    .map(|d| {
                        let n = d.shape.iter().product();
                        (d.name.clone(), Tensor::new(d.shape.clone(), (0..n).map(|_| rng.gen_range(-3..4)).collect()))
                    })
                    .collect();
                let want = crate::lang::interpret(&sp, &ins).unwrap();
                assert_eq!(eval(&p, &ins).unwrap(), want, "{name}");
            }
        }
    }
}
