use super::derive::{fit_affine, Derivation, TargetSlots};
use super::{build_vector, moved_traversal, roll_case, widen, without_preprocess, MaterializedVector, RollCase};
use crate::circ::{CircExpr, CircObj, OffsetExpr, ValueMap, VarKind};
use crate::index_free::ArrayTraversal;
use crate::lang::BinOp;
use crate::sched::{Layout, Preprocess};
use crate::tensor::positions;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

/// placeholder names inside a fragment, renamed when it is instantiated.
pub const VEC_HOLE: &str = "$v";
pub const MASK_HOLE: &str = "$m";
pub const OFF_HOLE: &str = "$o";

/// a materialized site: an expression over placeholder variables and their
/// registry maps, parameterized by the layout's exploded dims.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frag {
    pub expr: CircExpr,
    pub vars: Vec<(String, VarKind, ValueMap<CircObj>)>,
    pub offsets: Vec<(String, ValueMap<i64>)>,
}

/// per coordinate: base object, rotation and mask object.
pub(crate) struct PerCoord {
    pub base: Vec<CircObj>,
    pub rot: Vec<i64>,
    pub mask: Vec<CircObj>,
}

/// build `[rot(o, v)] [* m]` from per-coordinate values.
pub(crate) fn emit(l: &Layout, kind: VarKind, pc: PerCoord) -> Frag {
    let names = l.exploded_names();
    let extents = l.exploded_extents();
    let map = |values: Vec<CircObj>| ValueMap { params: names.clone(), extents: extents.clone(), values };
    let kind = if pc.base.iter().all(|o| matches!(o, CircObj::Const(_))) { VarKind::Pt } else { kind };
    let var = match kind {
        VarKind::Ct => CircExpr::Ct(String::from(VEC_HOLE)),
        VarKind::Pt => CircExpr::Pt(String::from(VEC_HOLE)),
    };
    let mut frag = Frag { expr: var, vars: Vec::from([(String::from(VEC_HOLE), kind, map(pc.base))]), offsets: Vec::new() };
    if pc.rot.iter().any(|&r| r != 0) {
        let o = match fit_affine(&names, &extents, &pc.rot) {
            Some(o) => o,
            None => {
                frag.offsets.push((String::from(OFF_HOLE), ValueMap { params: names.clone(), extents: extents.clone(), values: pc.rot }));
                OffsetExpr::Var(String::from(OFF_HOLE))
            }
        };
        frag.expr = CircExpr::rot(o, frag.expr);
    }
    if pc.mask.iter().any(|m| *m != CircObj::Const(1)) {
        frag.vars.push((String::from(MASK_HOLE), VarKind::Pt, map(pc.mask)));
        frag.expr = CircExpr::op(BinOp::Mul, frag.expr, CircExpr::Pt(String::from(MASK_HOLE)));
    }
    frag
}

fn vector_obj(v: MaterializedVector) -> CircObj {
    if v.is_zero() {
        CircObj::Const(0)
    } else {
        CircObj::Vector(v)
    }
}

fn mask_obj(d: &Derivation) -> CircObj {
    match &d.mask {
        Some(m) => CircObj::Mask(m.clone()),
        None => CircObj::Const(1),
    }
}

/// greedy cover of the target vectors by base vectors drawn from the
/// targets and their widened forms.
fn derived(targets: &[MaterializedVector], shape: &[usize]) -> PerCoord {
    let n = targets.len();
    let mut distinct: Vec<usize> = Vec::new();
    let mut of_target = Vec::with_capacity(n);
    let mut seen: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    let mut infos: Vec<TargetSlots> = Vec::new();
    for v in targets {
        let slots = v.slot_map(shape);
        let k = *seen.entry(slots.clone()).or_insert_with(|| {
            distinct.push(of_target.len());
            infos.push(TargetSlots::new(slots, &v.padded()));
            infos.len() - 1
        });
        of_target.push(k);
    }
    let mut cands: Vec<MaterializedVector> = Vec::new();
    for &t in &distinct {
        if !infos[of_target[t]].is_zero() {
            cands.push(targets[t].clone());
        }
    }
    let own = cands.len();
    for k in 0..own {
        if let Some(w) = widen(&cands[k], shape) {
            if !cands.contains(&w) {
                cands.push(w);
            }
        }
    }
    let cand_slots: Vec<Vec<i64>> = cands.iter().map(|c| c.slot_map(shape)).collect();
    // element -> candidates holding it
    let mut holders: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (c, s) in cand_slots.iter().enumerate() {
        for &e in s.iter().filter(|&&e| e >= 0) {
            let h = holders.entry(e).or_default();
            if h.last() != Some(&c) {
                h.push(c);
            }
        }
    }
    let mut covers: Vec<Vec<(usize, Derivation)>> = alloc::vec![Vec::new(); cands.len()];
    for (k, info) in infos.iter().enumerate() {
        let Some((_, e)) = info.first else { continue };
        for &c in holders.get(&e).map(Vec::as_slice).unwrap_or(&[]) {
            if let Some(d) = info.derive(&cand_slots[c]) {
                covers[c].push((k, d));
            }
        }
    }
    let mut covered: Vec<bool> = infos.iter().map(TargetSlots::is_zero).collect();
    let mut chosen: Vec<usize> = Vec::new();
    while covered.iter().any(|c| !c) {
        let best = (0..cands.len())
            .max_by_key(|&c| (covers[c].iter().filter(|(k, _)| !covered[*k]).count(), core::cmp::Reverse(c)))
            .expect("every target covers itself");
        for (k, _) in &covers[best] {
            covered[*k] = true;
        }
        chosen.push(best);
    }
    let mut pick: Vec<Option<(usize, Derivation)>> = alloc::vec![None; infos.len()];
    for (order, &c) in chosen.iter().enumerate() {
        for (k, d) in &covers[c] {
            let key = |o: usize, d: &Derivation| (d.mask.is_some(), d.rot.abs(), o);
            let better = match &pick[*k] {
                None => true,
                Some((o, old)) => key(order, d) < key(*o, old),
            };
            if better {
                pick[*k] = Some((order, d.clone()));
            }
        }
    }
    let mut pc = PerCoord { base: Vec::new(), rot: Vec::new(), mask: Vec::new() };
    for &k in &of_target {
        match &pick[k] {
            Some((o, d)) => {
                pc.base.push(CircObj::Vector(cands[chosen[*o]].clone()));
                pc.rot.push(d.rot);
                pc.mask.push(mask_obj(d));
            }
            None => {
                pc.base.push(CircObj::Const(0));
                pc.rot.push(0);
                pc.mask.push(CircObj::Const(1));
            }
        }
    }
    pc
}

/// materialize a site indexing a program input. client arrays derive their
/// vectors from a greedy base set; server arrays send one vector per
/// coordinate.
pub fn materialize_input(shape: &[usize], cipher: bool, t: &ArrayTraversal, l: &Layout) -> Frag {
    let kind = if cipher { VarKind::Ct } else { VarKind::Pt };
    let plain = without_preprocess(l);
    let coords: Vec<Vec<usize>> = positions(&l.exploded_extents()).collect();
    let n = coords.len();
    let ones = || alloc::vec![CircObj::Const(1); n];
    let pre = match roll_case(t, l) {
        RollCase::NoRoll | RollCase::Trivial => Preprocess::Identity,
        RollCase::Array(da, db) => Preprocess::Roll(da, db),
        RollCase::Rotated => {
            let Preprocess::Roll(a, b) = l.preprocess else { unreachable!() };
            let ka = l.exploded.iter().position(|e| e.dim == a).expect("rolled dim is exploded");
            let width = (l.block_size() / l.vectorized[0].extent) as i64;
            let moved = moved_traversal(t, a, b);
            let base = coords
                .iter()
                .map(|c| {
                    let mut c0 = c.clone();
                    c0[ka] = 0;
                    vector_obj(build_vector(&moved, shape, &plain, &c0, Preprocess::Identity))
                })
                .collect();
            let rot = coords.iter().map(|c| -(c[ka] as i64) * width).collect();
            return emit(l, kind, PerCoord { base, rot, mask: ones() });
        }
    };
    let targets: Vec<MaterializedVector> = coords.iter().map(|c| build_vector(t, shape, &plain, c, pre)).collect();
    if !cipher {
        let base = targets.into_iter().map(vector_obj).collect();
        return emit(l, kind, PerCoord { base, rot: alloc::vec![0; n], mask: ones() });
    }
    emit(l, kind, derived(&targets, shape))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index_free::{ContentDim, TraversalDim};
    use crate::sched::parse_layout;
    use alloc::string::ToString;
    use alloc::vec;

    fn kt() -> ArrayTraversal {
        ArrayTraversal {
            array: "k".into(),
            offsets: vec![1, 0],
            dims: vec![
                TraversalDim { extent: 2, content: vec![ContentDim { dim: 0, stride: -1 }] },
                TraversalDim { extent: 4, content: vec![ContentDim { dim: 0, stride: 1 }] },
            ],
        }
    }

    #[test]
    fn kt_fragment() {
        let l = parse_layout("{i:0:2:1} [(1,4,1)]").unwrap();
        let f = materialize_input(&[4, 4], true, &kt(), &l);
        assert_eq!(f.expr, CircExpr::op(BinOp::Mul, CircExpr::rot(OffsetExpr::affine(-1, &[("i".into(), 1)]), CircExpr::Ct("$v".into())), CircExpr::Pt("$m".into())));
        let (_, _, v) = &f.vars[0];
        assert!(v.is_uniform());
        assert_eq!(v.values[0].to_string(), "vector(k(0, 0)[(4, 0, 0 {0 :: 1})])");
        assert!(f.offsets.is_empty());
        assert_eq!(f.vars[1].2.values, vec![CircObj::Mask(vec![(4, 0, 2)]), CircObj::Const(1)]);
    }

    #[test]
    fn server_sends_every_vector() {
        let l = parse_layout("{i:0:2:1} [(1,4,1)]").unwrap();
        let f = materialize_input(&[4, 4], false, &kt(), &l);
        assert_eq!(f.expr, CircExpr::Pt("$v".into()));
        assert!(!f.vars[0].2.is_uniform());
    }

    #[test]
    fn exploded_needs_no_rotation() {
        let l = parse_layout("{i:0:2:1, j:1:4:1} []").unwrap();
        let f = materialize_input(&[4, 4], true, &kt(), &l);
        assert_eq!(f.expr, CircExpr::Ct("$v".into()));
    }
}
