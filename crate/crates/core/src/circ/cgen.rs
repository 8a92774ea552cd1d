use super::ir::{CircExpr, CircLet, CircObj, Circuit, CircuitProgram, Node, NodeId, OffsetExpr, Registry, ValueMap, VarKind};
use super::outlayout::{coercion, reduce_layout, unify, OutVecDim, OutputLayout};
use crate::error::{invalid, Error, Result};
use crate::index_free::{ArrayTraversal, IfExpr, IndexFreeProgram, SiteId};
use crate::lang::BinOp;
use crate::materialize::{clean_and_fill, materialize_expr, materialize_input, Frag, LetSource};
use crate::sched::{initial_layout, ExplodedDim, Layout, Preprocess, Schedule};
use crate::util::log2_exact;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

/// materialized input sites keyed by traversal, layout and party.
pub type MatCache = BTreeMap<String, Frag>;

/// a generated circuit with everything later stages need.
#[derive(Clone, Debug, PartialEq)]
pub struct Compiled {
    pub program: CircuitProgram,
    pub registry: Registry,
    pub out_layout: OutputLayout,
    pub out_shape: Vec<usize>,
    /// the layout every site was materialized with.
    pub schedule: Schedule,
    pub slots: usize,
    /// shapes of inputs and lets.
    pub shapes: BTreeMap<String, Vec<usize>>,
    pub let_layouts: BTreeMap<String, OutputLayout>,
}

#[derive(Clone, Debug)]
struct LetInfo {
    shape: Vec<usize>,
    ol: OutputLayout,
    pads: Vec<Option<i64>>,
    cipher: bool,
    /// the value of a literal-only array.
    value: Option<i64>,
}

/// a generated value: its node, layout, padding values and type.
#[derive(Clone, Debug)]
struct Val {
    node: NodeId,
    ol: OutputLayout,
    pads: Vec<Option<i64>>,
    cipher: bool,
}

/// padding of a partially built region expression.
#[derive(Clone, Debug)]
enum Pads {
    Lit(i64),
    Dims(Vec<Option<i64>>),
}

/// value of a node built only from literals.
fn literal(c: &Circuit, n: NodeId) -> Option<i64> {
    match c.node(n) {
        Node::Lit(v) => Some(*v),
        Node::Op(op, a, b) => Some(op.apply(literal(c, *a)?, literal(c, *b)?)),
        _ => None,
    }
}

fn fold(op: BinOp, x: i64, n: usize) -> i64 {
    match op {
        BinOp::Mul => x.wrapping_pow(n as u32),
        _ => x.wrapping_mul(n as i64),
    }
}

struct Cg<'a> {
    p: &'a IndexFreeProgram,
    sched: &'a Schedule,
    slots: usize,
    cache: &'a mut MatCache,
    circ: Circuit,
    reg: Registry,
    interned: BTreeMap<(VarKind, ValueMap<CircObj>), String>,
    interned_off: BTreeMap<ValueMap<i64>, String>,
    counters: BTreeMap<&'static str, usize>,
    lets: Vec<CircLet>,
    infos: BTreeMap<String, LetInfo>,
    used: Schedule,
    fills: BTreeMap<String, String>,
}

impl Cg<'_> {
    fn fresh(&mut self, prefix: &'static str) -> String {
        let c = self.counters.entry(prefix).or_insert(0);
        *c += 1;
        format!("{prefix}{c}")
    }

    fn intern_var(&mut self, kind: VarKind, m: ValueMap<CircObj>) -> String {
        if let Some(n) = self.interned.get(&(kind, m.clone())) {
            return n.clone();
        }
        let name = self.fresh(if kind == VarKind::Ct { "ct" } else { "pt" });
        self.reg.insert(kind, name.clone(), m.clone());
        self.interned.insert((kind, m), name.clone());
        name
    }

    fn intern_off(&mut self, m: ValueMap<i64>) -> String {
        if let Some(n) = self.interned_off.get(&m) {
            return n.clone();
        }
        let name = self.fresh("o");
        self.reg.offsets.insert(name.clone(), m.clone());
        self.interned_off.insert(m, name.clone());
        name
    }

    fn var_node(&mut self, kind: VarKind, m: ValueMap<CircObj>) -> NodeId {
        let n = self.intern_var(kind, m);
        self.circ.add(if kind == VarKind::Ct { Node::Ct(n) } else { Node::Pt(n) })
    }

    fn instantiate(&mut self, frag: &Frag) -> NodeId {
        let mut ren = BTreeMap::new();
        for (hole, kind, m) in &frag.vars {
            let n = self.intern_var(*kind, m.clone());
            ren.insert(hole.clone(), n);
        }
        for (hole, m) in &frag.offsets {
            let n = self.intern_off(m.clone());
            ren.insert(hole.clone(), n);
        }
        fn go(e: &CircExpr, ren: &BTreeMap<String, String>) -> CircExpr {
            let r = |v: &str| ren.get(v).cloned().unwrap_or_else(|| String::from(v));
            match e {
                CircExpr::Pt(v) => CircExpr::Pt(r(v)),
                CircExpr::Ct(v) => CircExpr::Ct(r(v)),
                CircExpr::Lit(v) => CircExpr::Lit(*v),
                CircExpr::Op(op, a, b) => CircExpr::op(*op, go(a, ren), go(b, ren)),
                CircExpr::Rot(o, a) => CircExpr::rot(o.map_names(&|d| String::from(d), &r), go(a, ren)),
                CircExpr::ReduceDim(d, n, op, a) => CircExpr::ReduceDim(d.clone(), *n, *op, alloc::boxed::Box::new(go(a, ren))),
            }
        }
        let e = go(&frag.expr, &ren);
        self.circ.insert_tree(&e)
    }

    /// rename free dimension variables of a subcircuit.
    fn rename(&mut self, node: NodeId, map: &BTreeMap<String, String>, memo: &mut BTreeMap<NodeId, NodeId>) -> NodeId {
        if let Some(&n) = memo.get(&node) {
            return n;
        }
        let rn = |p: &Vec<String>| -> Vec<String> { p.iter().map(|x| map.get(x).cloned().unwrap_or_else(|| x.clone())).collect() };
        let out = match self.circ.node(node).clone() {
            Node::Lit(_) => node,
            Node::Pt(v) | Node::Ct(v) => {
                let kind = if matches!(self.circ.node(node), Node::Ct(_)) { VarKind::Ct } else { VarKind::Pt };
                let m = self.reg.var(kind, &v).expect("registered var").clone();
                if m.params.iter().any(|x| map.contains_key(x)) {
                    let m2 = ValueMap { params: rn(&m.params), ..m };
                    self.var_node(kind, m2)
                } else {
                    node
                }
            }
            Node::Op(op, a, b) => {
                let a = self.rename(a, map, memo);
                let b = self.rename(b, map, memo);
                self.circ.op(op, a, b)
            }
            Node::Rot(o, a) => {
                let a = self.rename(a, map, memo);
                let mut vars = BTreeMap::new();
                let mut names = alloc::collections::BTreeSet::new();
                o.vars(&mut names);
                for v in names {
                    let m = self.reg.offsets[&v].clone();
                    if m.params.iter().any(|x| map.contains_key(x)) {
                        let m2 = ValueMap { params: rn(&m.params), ..m };
                        vars.insert(v, self.intern_off(m2));
                    }
                }
                let o = o.map_names(&|d| map.get(d).cloned().unwrap_or_else(|| String::from(d)), &|v| {
                    vars.get(v).cloned().unwrap_or_else(|| String::from(v))
                });
                self.circ.rot(o, a)
            }
            Node::ReduceDim(d, e, op, a) => {
                let a = self.rename(a, map, memo);
                self.circ.add(Node::ReduceDim(d, e, op, a))
            }
        };
        memo.insert(node, out);
        out
    }

    fn site(&mut self, id: SiteId, t: &ArrayTraversal, l: &Layout) -> Result<Val> {
        let shape = self.p.array_shape(&t.array).to_vec();
        let ol = OutputLayout::from_layout(l);
        let pads = vec![Some(0); l.vectorized.len()];
        if self.p.is_input(&t.array) {
            let cipher = self.p.shaped.arrays[&t.array].cipher;
            let key = format!("{t}|{l}|{cipher}");
            let frag = match self.cache.get(&key) {
                Some(f) => f.clone(),
                None => {
                    let f = materialize_input(&shape, cipher, t, l);
                    self.cache.insert(key, f.clone());
                    f
                }
            };
            let node = self.instantiate(&frag);
            let cipher = frag.vars.iter().any(|(_, k, _)| *k == VarKind::Ct);
            return Ok(Val { node, ol, pads, cipher });
        }
        let info = self.infos.get(&t.array).cloned().ok_or_else(|| Error::Invalid(format!("let '{}' used before definition", t.array)))?;
        if let Some(v) = info.value {
            // every element and every padding slot holds the literal
            let node = self.circ.add(Node::Lit(v));
            return Ok(Val { node, ol, pads: vec![Some(v); l.vectorized.len()], cipher: false });
        }
        let src = LetSource { name: &t.array, shape: &info.shape, ol: &info.ol, pads: &info.pads, cipher: info.cipher };
        let frag = match materialize_expr(id, &src, t, l, None) {
            Ok(f) => f,
            Err(Error::NonDerivable { .. }) if info.ol.vectorized().iter().any(|d| matches!(d, OutVecDim::Reduced(_))) => {
                let cf = self.fill(&t.array, &info)?;
                materialize_expr(id, &src, t, l, Some(&cf))?
            }
            Err(e) => return Err(e),
        };
        let node = self.instantiate(&frag);
        let cipher = frag.vars.iter().any(|(_, k, _)| *k == VarKind::Ct);
        Ok(Val { node, ol, pads, cipher })
    }

    /// the clean-and-fill copy of a let whose reduced dims are replicated.
    fn fill(&mut self, name: &str, info: &LetInfo) -> Result<String> {
        if let Some(n) = self.fills.get(name) {
            return Ok(n.clone());
        }
        let cf = format!("__cf{}", self.fills.len() + 1);
        let dims = info.ol.dims();
        let params: Vec<String> = dims.iter().map(|d| d.0.clone()).collect();
        let extents: Vec<usize> = dims.iter().map(|d| d.1).collect();
        let src = ValueMap::from_fn(params, extents, |c| CircObj::LetRef(String::from(name), c.to_vec()));
        let kind = if info.cipher { VarKind::Ct } else { VarKind::Pt };
        let vd = info.ol.vectorized();
        let mask: Vec<(usize, usize, usize)> = vd
            .iter()
            .map(|d| match d {
                OutVecDim::Reduced(e) => (*e, 0, 0),
                d => (d.extent(), 0, d.extent() - 1),
            })
            .collect();
        let x = self.var_node(kind, src);
        let m = self.var_node(VarKind::Pt, ValueMap::constant(CircObj::Mask(mask)));
        let mut node = self.circ.op(BinOp::Mul, x, m);
        for (k, d) in vd.iter().enumerate() {
            if let OutVecDim::Reduced(e) = d {
                let width: usize = vd[k + 1..].iter().map(OutVecDim::extent).product();
                for r in clean_and_fill(*e, width)? {
                    let rot = self.circ.rot(OffsetExpr::Int(r), node);
                    node = self.circ.op(BinOp::Add, node, rot);
                }
            }
        }
        self.lets.push(CircLet { name: cf.clone(), dims, root: node, native: false });
        self.fills.insert(String::from(name), cf.clone());
        Ok(cf)
    }

    fn reduce(&mut self, op: BinOp, n: usize, ext: usize, child: &IfExpr) -> Result<Val> {
        let v = self.region(child)?;
        if v.ol == OutputLayout::Wildcard {
            let node = match op {
                BinOp::Mul => {
                    // balanced product of identical terms shares nodes
                    let mut terms = vec![v.node; ext];
                    while terms.len() > 1 {
                        let mut next = Vec::new();
                        for pair in terms.chunks(2) {
                            next.push(if pair.len() == 2 { self.circ.op(BinOp::Mul, pair[0], pair[1]) } else { pair[0] });
                        }
                        terms = next;
                    }
                    terms[0]
                }
                _ => {
                    let e = self.circ.add(Node::Lit(ext as i64));
                    self.circ.op(BinOp::Mul, e, v.node)
                }
            };
            return Ok(Val { node, ..v });
        }
        let (ol, gone, reduced) = reduce_layout(n, &v.ol)?;
        let mut node = v.node;
        let mut pads = v.pads.clone();
        for (name, e) in gone {
            node = self.circ.add(Node::ReduceDim(name, e, op, node));
            for p in pads.iter_mut() {
                *p = p.map(|x| fold(op, x, e));
            }
        }
        let vd = v.ol.vectorized().to_vec();
        for &k in &reduced {
            let OutVecDim::Vec(d) = vd[k] else { unreachable!() };
            let width: usize = vd[k + 1..].iter().map(OutVecDim::extent).product();
            if d.valid < d.extent && pads[k] != Some(op.identity()) {
                // padding must hold the identity before it is folded in
                let full: Vec<(usize, usize, usize)> = vd.iter().map(|x| (x.extent(), 0, x.extent() - 1)).collect();
                let mut keep = full.clone();
                keep[k] = (d.extent, 0, d.valid - 1);
                let km = self.var_node(VarKind::Pt, ValueMap::constant(CircObj::Mask(keep)));
                node = self.circ.op(BinOp::Mul, node, km);
                if op == BinOp::Mul {
                    let mut pad = full;
                    pad[k] = (d.extent, d.valid, d.extent - 1);
                    let pm = self.var_node(VarKind::Pt, ValueMap::constant(CircObj::Mask(pad)));
                    node = self.circ.op(BinOp::Add, node, pm);
                }
                let id = op.identity();
                for (j, p) in pads.iter_mut().enumerate() {
                    if j == k {
                        *p = Some(id);
                    } else if *p != Some(id) {
                        *p = None;
                    }
                }
            }
            let steps = log2_exact(d.extent).expect("power-of-two extent");
            for t in 1..=steps {
                let s = (width * (d.extent >> t)) as i64;
                let r = self.circ.rot(OffsetExpr::Int(-s), node);
                node = self.circ.op(op, node, r);
            }
            for (j, p) in pads.iter_mut().enumerate() {
                *p = if j == k { None } else { p.map(|x| fold(op, x, d.extent)) };
            }
        }
        Ok(Val { node, ol, pads, cipher: v.cipher })
    }

    fn region(&mut self, e: &IfExpr) -> Result<Val> {
        let mut sites: Vec<(SiteId, &ArrayTraversal)> = Vec::new();
        let mut reduces: Vec<&IfExpr> = Vec::new();
        fn walk<'a>(e: &'a IfExpr, s: &mut Vec<(SiteId, &'a ArrayTraversal)>, r: &mut Vec<&'a IfExpr>) {
            match e {
                IfExpr::Lit(_) => {}
                IfExpr::Site(id, t) => s.push((*id, t)),
                IfExpr::Op(_, a, b) => {
                    walk(a, s, r);
                    walk(b, s, r);
                }
                IfExpr::Reduce(..) => r.push(e),
            }
        }
        walk(e, &mut sites, &mut reduces);
        let mut red_vals = Vec::new();
        for r in &reduces {
            let IfExpr::Reduce(op, n, ext, c) = r else { unreachable!() };
            red_vals.push(self.reduce(*op, *n, *ext, c)?);
        }
        let mut region = OutputLayout::Wildcard;
        for v in &red_vals {
            region = unify(&region, &v.ol).ok_or_else(|| Error::Invalid(format!("reduction layouts {} and {} differ", region, v.ol)))?;
        }
        let mut site_vals = Vec::new();
        if !sites.is_empty() {
            let given: Vec<&Layout> = sites.iter().filter_map(|(id, _)| self.sched.get(id)).collect();
            let layout = if region != OutputLayout::Wildcard {
                let l = region.to_layout()?;
                if let Some(g) = given.iter().find(|g| !OutputLayout::from_layout(g).same_shape(&OutputLayout::from_layout(&l))) {
                    return invalid(format!("site layout {g} conflicts with inferred layout {l}"));
                }
                l
            } else if let Some(g) = given.first() {
                let first = OutputLayout::from_layout(g);
                if given.iter().any(|x| !OutputLayout::from_layout(x).same_shape(&first)) {
                    return invalid("sites combined element-wise need equal layouts");
                }
                (*g).clone()
            } else {
                initial_layout(&format!("s{}_", sites[0].0), &sites[0].1.extents())
            };
            if layout.block_size() > self.slots {
                return invalid(format!("vector block {} exceeds {} slots", layout.block_size(), self.slots));
            }
            let lo = OutputLayout::from_layout(&layout);
            region = unify(&region, &lo).ok_or_else(|| Error::Invalid(String::from("site layout does not unify")))?;
            for &(id, t) in &sites {
                self.used.insert(id, layout.clone());
                site_vals.push(self.site(id, t, &layout)?);
            }
        }
        // align every leaf to the region layout and its dim names
        let mut leaves: Vec<Val> = Vec::new();
        let mut si = site_vals.into_iter();
        let mut ri = red_vals.into_iter();
        fn order(e: &IfExpr, out: &mut Vec<bool>) {
            match e {
                IfExpr::Lit(_) => {}
                IfExpr::Site(..) => out.push(true),
                IfExpr::Op(_, a, b) => {
                    order(a, out);
                    order(b, out);
                }
                IfExpr::Reduce(..) => out.push(false),
            }
        }
        let mut kinds = Vec::new();
        order(e, &mut kinds);
        for is_site in kinds {
            let mut v = if is_site { si.next() } else { ri.next() }.expect("leaf count");
            if v.ol != OutputLayout::Wildcard {
                let k = coercion(&v.ol, &region).ok_or_else(|| Error::Invalid(String::from("leaf layout does not coerce")))?;
                let map = v.ol.drop_leading(k).rename_map(&region);
                if !map.is_empty() {
                    let mut memo = BTreeMap::new();
                    v.node = self.rename(v.node, &map, &mut memo);
                }
                v.pads = v.pads[k..].to_vec();
                v.ol = region.clone();
            }
            leaves.push(v);
        }
        let mut it = leaves.into_iter();
        let (node, pads, cipher) = self.build(e, &mut it);
        let pads = match pads {
            Pads::Dims(p) => p,
            Pads::Lit(_) => Vec::new(),
        };
        Ok(Val { node, ol: region, pads, cipher })
    }

    fn build(&mut self, e: &IfExpr, leaves: &mut impl Iterator<Item = Val>) -> (NodeId, Pads, bool) {
        match e {
            IfExpr::Lit(v) => (self.circ.add(Node::Lit(*v)), Pads::Lit(*v), false),
            IfExpr::Site(..) | IfExpr::Reduce(..) => {
                let v = leaves.next().expect("leaf");
                let pads = if v.ol == OutputLayout::Wildcard { Pads::Dims(Vec::new()) } else { Pads::Dims(v.pads) };
                (v.node, pads, v.cipher)
            }
            IfExpr::Op(op, a, b) => {
                let (na, pa, ca) = self.build(a, leaves);
                let (nb, pb, cb) = self.build(b, leaves);
                let pads = match (pa, pb) {
                    (Pads::Lit(x), Pads::Lit(y)) => Pads::Lit(op.apply(x, y)),
                    (Pads::Lit(x), Pads::Dims(d)) => Pads::Dims(d.iter().map(|p| p.map(|y| op.apply(x, y))).collect()),
                    (Pads::Dims(d), Pads::Lit(y)) => Pads::Dims(d.iter().map(|p| p.map(|x| op.apply(x, y))).collect()),
                    (Pads::Dims(d1), Pads::Dims(d2)) if d1.is_empty() => Pads::Dims(d2),
                    (Pads::Dims(d1), Pads::Dims(d2)) if d2.is_empty() => Pads::Dims(d1),
                    (Pads::Dims(d1), Pads::Dims(d2)) => Pads::Dims(
                        d1.iter()
                            .zip(&d2)
                            .map(|(x, y)| match (x, y) {
                                (Some(x), Some(y)) => Some(op.apply(*x, *y)),
                                _ => None,
                            })
                            .collect(),
                    ),
                };
                (self.circ.op(*op, na, nb), pads, ca || cb)
            }
        }
    }

    fn bind(&mut self, name: &str, shape: Vec<usize>, body: &IfExpr) -> Result<OutputLayout> {
        let mut v = self.region(body)?;
        let mut value = None;
        if v.ol == OutputLayout::Wildcard {
            // a broadcast literal, one vector per element
            value = Some(literal(&self.circ, v.node).expect("literal-only region"));
            let exploded = shape.iter().enumerate().map(|(k, &n)| ExplodedDim { name: format!("{name}_{k}"), dim: k, extent: n, stride: 1 }).collect();
            v.ol = OutputLayout::Concrete { preprocess: Preprocess::Identity, exploded, vectorized: Vec::new() };
        }
        if v.ol.block() > self.slots {
            return invalid(format!("vector block {} exceeds {} slots", v.ol.block(), self.slots));
        }
        self.lets.push(CircLet { name: String::from(name), dims: v.ol.dims(), root: v.node, native: false });
        self.infos.insert(String::from(name), LetInfo { shape, ol: v.ol.clone(), pads: v.pads, cipher: v.cipher, value });
        Ok(v.ol)
    }
}

/// generate the circuit of a program under a schedule.
pub fn cgen(p: &IndexFreeProgram, s: &Schedule, slots: usize) -> Result<Compiled> {
    cgen_cached(p, s, slots, &mut MatCache::new())
}

/// [`cgen`] reusing materialized input sites across calls.
pub fn cgen_cached(p: &IndexFreeProgram, s: &Schedule, slots: usize, cache: &mut MatCache) -> Result<Compiled> {
    let mut cg = Cg {
        p,
        sched: s,
        slots,
        cache,
        circ: Circuit::new(),
        reg: Registry::default(),
        interned: BTreeMap::new(),
        interned_off: BTreeMap::new(),
        counters: BTreeMap::new(),
        lets: Vec::new(),
        infos: BTreeMap::new(),
        used: Schedule::new(),
        fills: BTreeMap::new(),
    };
    let mut let_layouts = BTreeMap::new();
    for (name, e) in &p.lets {
        let ol = cg.bind(name, p.array_shape(name).to_vec(), e)?;
        let_layouts.insert(name.clone(), ol);
    }
    let out_shape = p.shaped.output_shape.clone();
    let out_layout = cg.bind("out", out_shape.clone(), &p.output)?;
    let mut shapes = BTreeMap::new();
    for (n, a) in &p.shaped.arrays {
        shapes.insert(n.clone(), a.shape.clone());
    }
    shapes.insert(String::from("out"), out_shape.clone());
    Ok(Compiled {
        program: CircuitProgram { circuit: cg.circ, lets: cg.lets },
        registry: cg.reg,
        out_layout,
        out_shape,
        schedule: cg.used,
        slots,
        shapes,
        let_layouts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circ::eval_program;
    use crate::corpus;
    use crate::index_free::to_index_free;
    use crate::lang::{check, interpret, parse};
    use crate::sched::{initial_schedule, parse_schedule};
    use crate::sim::decode_output;
    use crate::tensor::Tensor;
    use alloc::string::ToString;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ifp(src: &str) -> IndexFreeProgram {
        to_index_free(&check(parse(src).unwrap()).unwrap()).unwrap()
    }

    fn random_inputs(p: &IndexFreeProgram, rng: &mut ChaCha8Rng) -> BTreeMap<String, Tensor> {
        p.shaped
            .program
            .inputs()
            .map(|d| {
                let n: usize = d.shape.iter().product();
                (d.name.clone(), Tensor::new(d.shape.clone(), (0..n).map(|_| rng.gen_range(-5..=5)).collect()))
            })
            .collect()
    }

    /// generate, evaluate directly and decode, against the interpreter.
    fn check_schedule(p: &IndexFreeProgram, s: &Schedule, slots: usize) -> Compiled {
        let c = cgen(p, s, slots).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let inputs = random_inputs(p, &mut rng);
            let want = interpret(&p.shaped, &inputs).unwrap();
            let vals = eval_program(&c.program, &c.registry, &inputs, slots).unwrap();
            let got = decode_output(&vals["out"], &c.out_layout, &c.out_shape).unwrap();
            assert_eq!(got, want, "schedule:\n{}\ncircuit:\n{}", crate::sched::print_schedule(s), c.program);
        }
        c
    }

    #[test]
    fn initial_schedules_are_valid() {
        for (_, src) in corpus::all_reduced() {
            let p = ifp(&src);
            check_schedule(&p, &initial_schedule(&p), 16);
        }
    }

    #[test]
    fn distance_row_wise_and_diagonal() {
        let p = ifp(&corpus::distance_fig(4));
        let row = parse_schedule("0 = {i1_0:0:4:1} [(1,4,1)]\n1 = {i1_0:0:4:1} [(1,4,1)]\n2 = {i1_0:0:4:1} [(1,4,1)]\n3 = {i1_0:0:4:1} [(1,4,1)]").unwrap();
        let c = check_schedule(&p, &row, 16);
        assert_eq!(c.out_layout.to_string(), "{i1_0:0:4:1} [RR(4)]");
        let diag = parse_schedule(
            "0 = roll(1,0) {i1_1:1:4:1} [(0,4,1)]\n1 = roll(1,0) {i1_1:1:4:1} [(0,4,1)]\n2 = roll(1,0) {i1_1:1:4:1} [(0,4,1)]\n3 = roll(1,0) {i1_1:1:4:1} [(0,4,1)]",
        )
        .unwrap();
        let c = check_schedule(&p, &diag, 16);
        assert_eq!(c.out_layout.to_string(), "{} [(0,4,1)]");
        let text = c.program.to_string();
        assert!(text.contains("sum_vec{i1_1:4}"), "{text}");
        assert!(text.contains("rot((-1 * i1_1)"), "{text}");
    }

    #[test]
    fn literal_only_arrays_broadcast() {
        for src in [
            "input a: [4] from client\nfor i: 4 { (0 + 0) }",
            "input a: [2] from client\nfor i: 2 { for j: 3 { (2 * 3) } }",
            "input a: [4] from client\nlet t = for i: 4 { (0 - 2) } in\nfor i: 4 { t[i] * a[i] }",
            "input a: [4] from client\nlet t = for i: 4 { 3 } in\nsum(for i: 4 { t[i] })",
        ] {
            let p = ifp(src);
            for slots in [4, 16] {
                check_schedule(&p, &initial_schedule(&p), slots);
            }
        }
    }

    #[test]
    fn mismatched_layouts_are_invalid() {
        let p = ifp("input a: [2,2] from client\ninput b: [2,2] from client\nfor i: 2 { for j: 2 { a[i][j] + b[i][j] } }");
        let s = parse_schedule("0 = {i0_0:0:2:1} [(1,2,1)]\n1 = {i0_1:1:2:1} [(0,2,1)]").unwrap();
        assert!(matches!(cgen(&p, &s, 4), Err(Error::Invalid(_))));
    }
}
