use super::derive::TargetSlots;
use super::input::{emit, Frag, PerCoord};
use super::{site_slot_map, GARBAGE, ZERO};
use crate::circ::{CircObj, OutVecDim, OutputLayout, VarKind};
use crate::error::{Error, Result};
use crate::index_free::{ArrayTraversal, SiteId};
use crate::sched::{Layout, Preprocess};
use crate::tensor::{linear_index, positions, unlinear};
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

/// what a let-bound array looks like to its consumers.
#[derive(Clone, Copy, Debug)]
pub struct LetSource<'a> {
    pub name: &'a str,
    pub shape: &'a [usize],
    pub ol: &'a OutputLayout,
    /// value of padding slots per vectorized dim, when known.
    pub pads: &'a [Option<i64>],
    pub cipher: bool,
}

/// slot maps of every vector of a let: coordinates, maps and block dims.
/// with `filled`, reduced dims read as if clean-and-fill had run.
pub fn let_slot_maps(src: &LetSource, filled: bool) -> (Vec<Vec<usize>>, Vec<Vec<i64>>, Vec<usize>) {
    let OutputLayout::Concrete { preprocess, exploded, vectorized } = src.ol else {
        // a literal-only let is the same scalar in every slot
        return (vec![Vec::new()], vec![vec![0]], Vec::new());
    };
    let padded: Vec<usize> = vectorized.iter().map(OutVecDim::extent).collect();
    let block: usize = padded.iter().product();
    let extents: Vec<usize> = exploded.iter().map(|e| e.extent).collect();
    let coords: Vec<Vec<usize>> = positions(&extents).collect();
    let maps = coords
        .iter()
        .map(|c| {
            let mut base = vec![0usize; src.shape.len()];
            for (e, &x) in exploded.iter().zip(c) {
                base[e.dim] += x * e.stride;
            }
            (0..block)
                .map(|i| {
                    let p = unlinear(&padded, i);
                    let mut pos = base.clone();
                    let mut pad = None;
                    for (k, (d, &pk)) in vectorized.iter().zip(&p).enumerate() {
                        match d {
                            OutVecDim::Reduced(_) if !filled && pk != 0 => return GARBAGE,
                            OutVecDim::Reduced(_) | OutVecDim::ReducedRepeated(_) => {}
                            OutVecDim::Vec(v) if pk >= v.valid => {
                                if pad != Some(ZERO) {
                                    pad = Some(if src.pads.get(k).copied().flatten() == Some(0) { ZERO } else { GARBAGE });
                                }
                            }
                            OutVecDim::Vec(v) => pos[v.dim] += pk * v.stride,
                        }
                    }
                    if let Some(v) = pad {
                        return v;
                    }
                    if let Preprocess::Roll(a, b) = preprocess {
                        pos[*a] = (pos[*a] + pos[*b]) % src.shape[*a];
                    }
                    let idx: Vec<i64> = pos.iter().map(|&x| x as i64).collect();
                    linear_index(src.shape, &idx).map_or(GARBAGE, |o| o as i64)
                })
                .collect()
        })
        .collect();
    (coords, maps, padded)
}

/// materialize a site indexing a let-bound array by deriving each of its
/// vectors from one vector of the let. `fill_name` names the clean-and-fill
/// copy of the let when the filled reading is wanted.
pub fn materialize_expr(site: SiteId, src: &LetSource, t: &ArrayTraversal, l: &Layout, fill_name: Option<&str>) -> Result<Frag> {
    let (src_coords, src_maps, _) = let_slot_maps(src, fill_name.is_some());
    let mut holders: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (c, s) in src_maps.iter().enumerate() {
        for &e in s.iter().filter(|&&e| e >= 0) {
            let h = holders.entry(e).or_default();
            if h.last() != Some(&c) {
                h.push(c);
            }
        }
    }
    let name = String::from(fill_name.unwrap_or(src.name));
    let dims: Vec<usize> = l.vectorized.iter().map(|v| v.extent).collect();
    let mut memo: BTreeMap<Vec<i64>, (CircObj, i64, CircObj)> = BTreeMap::new();
    let mut pc = PerCoord { base: Vec::new(), rot: Vec::new(), mask: Vec::new() };
    for coord in positions(&l.exploded_extents()) {
        let slots = site_slot_map(t, src.shape, l, &coord);
        let entry = match memo.get(&slots) {
            Some(e) => e.clone(),
            None => {
                let info = TargetSlots::new(slots.clone(), &dims);
                let found = match info.first {
                    None => Some((CircObj::Const(0), 0, CircObj::Const(1))),
                    Some((_, e)) => holders.get(&e).into_iter().flatten().find_map(|&sc| {
                        info.derive(&src_maps[sc]).map(|d| {
                            let mask = d.mask.map_or(CircObj::Const(1), CircObj::Mask);
                            (CircObj::LetRef(name.clone(), src_coords[sc].clone()), d.rot, mask)
                        })
                    }),
                };
                let e = found.ok_or(Error::NonDerivable { site, coord: coord.clone() })?;
                memo.insert(slots, e.clone());
                e
            }
        };
        pc.base.push(entry.0);
        pc.rot.push(entry.1);
        pc.mask.push(entry.2);
    }
    let kind = if src.cipher { VarKind::Ct } else { VarKind::Pt };
    Ok(emit(l, kind, pc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circ::CircExpr;
    use crate::index_free::{ContentDim, TraversalDim};
    use crate::sched::{parse_layout, ExplodedDim, VectorizedDim};

    fn ident(name: &str, n: usize) -> ArrayTraversal {
        ArrayTraversal {
            array: name.into(),
            offsets: vec![0, 0],
            dims: vec![
                TraversalDim { extent: n, content: vec![ContentDim { dim: 0, stride: 1 }] },
                TraversalDim { extent: n, content: vec![ContentDim { dim: 1, stride: 1 }] },
            ],
        }
    }

    #[test]
    fn same_layout_is_direct() {
        let ol = OutputLayout::Concrete {
            preprocess: Preprocess::Identity,
            exploded: vec![ExplodedDim { name: "r0".into(), dim: 0, extent: 2, stride: 1 }],
            vectorized: vec![OutVecDim::Vec(VectorizedDim::new(1, 2, 1))],
        };
        let src = LetSource { name: "m", shape: &[2, 2], ol: &ol, pads: &[Some(0)], cipher: true };
        let l = parse_layout("{s0:0:2:1} [(1,2,1)]").unwrap();
        let f = materialize_expr(0, &src, &ident("m", 2), &l, None).unwrap();
        assert_eq!(f.expr, CircExpr::Ct("$v".into()));
        assert_eq!(f.vars[0].2.values, vec![CircObj::LetRef("m".into(), vec![0]), CircObj::LetRef("m".into(), vec![1])]);
    }

    #[test]
    fn transposed_order_is_not_derivable() {
        // the let packs rows, the site wants columns in one vector
        let ol = OutputLayout::Concrete {
            preprocess: Preprocess::Identity,
            exploded: vec![ExplodedDim { name: "r0".into(), dim: 0, extent: 2, stride: 1 }],
            vectorized: vec![OutVecDim::Vec(VectorizedDim::new(1, 2, 1))],
        };
        let src = LetSource { name: "m", shape: &[2, 2], ol: &ol, pads: &[Some(0)], cipher: true };
        let l = parse_layout("{s1:1:2:1} [(0,2,1)]").unwrap();
        assert!(matches!(materialize_expr(3, &src, &ident("m", 2), &l, None), Err(Error::NonDerivable { site: 3, .. })));
    }

    #[test]
    fn reduced_needs_fill() {
        // the let holds m[i] at position 0 of a reduced dim of extent 2
        let ol = OutputLayout::Concrete {
            preprocess: Preprocess::Identity,
            exploded: vec![],
            vectorized: vec![OutVecDim::Vec(VectorizedDim::new(0, 2, 1)), OutVecDim::Reduced(2)],
        };
        let src = LetSource { name: "m", shape: &[2], ol: &ol, pads: &[Some(0), None], cipher: true };
        // site m[i] over (i, j) with j repeating
        let t = ArrayTraversal {
            array: "m".into(),
            offsets: vec![0],
            dims: vec![
                TraversalDim { extent: 2, content: vec![ContentDim { dim: 0, stride: 1 }] },
                TraversalDim { extent: 2, content: vec![] },
            ],
        };
        let l = parse_layout("{} [(0,2,1), (1,2,1)]").unwrap();
        assert!(materialize_expr(0, &src, &t, &l, None).is_err());
        let f = materialize_expr(0, &src, &t, &l, Some("__cf0")).unwrap();
        assert_eq!(f.vars[0].2.values, vec![CircObj::LetRef("__cf0".into(), vec![])]);
    }
}
