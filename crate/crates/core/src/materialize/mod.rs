//! applying layouts to traversals: concrete vectors, slot maps, derivations
//! between vectors and the input, roll and let-reference materializers.

mod derive;
mod expr;
mod input;

pub use derive::{clean_and_fill, derive_slots, derive_vector, fit_affine, Derivation, MaskSpec, TargetSlots};
pub use expr::{let_slot_maps, materialize_expr, LetSource};
pub use input::{materialize_input, Frag, MASK_HOLE, OFF_HOLE, VEC_HOLE};

use crate::index_free::{ArrayTraversal, ContentDim};
use crate::sched::{Layout, Preprocess};
use crate::tensor::{linear_index, unlinear, Tensor};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// slot-map entry of a slot known to hold zero.
pub const ZERO: i64 = -1;
/// slot-map entry of a slot holding an unknown value.
pub const GARBAGE: i64 = -2;

/// a vectorized dimension of a concrete vector with its out-of-bounds padding.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VecDim {
    pub extent: usize,
    pub oob_l: usize,
    pub oob_r: usize,
    pub content: Vec<ContentDim>,
}

impl VecDim {
    pub fn padded(&self) -> usize {
        self.oob_l + self.extent + self.oob_r
    }
}

/// one packed vector of array elements.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MaterializedVector {
    pub array: String,
    /// array-level roll over array dims, applied after bounds checks.
    pub preprocess: Preprocess,
    pub offsets: Vec<i64>,
    pub dims: Vec<VecDim>,
}

impl MaterializedVector {
    pub fn padded(&self) -> Vec<usize> {
        self.dims.iter().map(VecDim::padded).collect()
    }

    pub fn block(&self) -> usize {
        self.dims.iter().map(VecDim::padded).product()
    }

    /// true when every slot is out of bounds.
    pub fn is_zero(&self) -> bool {
        self.dims.iter().any(|d| d.extent == 0)
    }

    /// array index held at slot position `p`, none for a zero slot.
    pub fn index_at(&self, p: &[usize], shape: &[usize]) -> Option<Vec<i64>> {
        let mut idx = self.offsets.clone();
        for (d, &pk) in self.dims.iter().zip(p) {
            let q = pk as i64 - d.oob_l as i64;
            if q < 0 || q >= d.extent as i64 {
                return None;
            }
            for c in &d.content {
                idx[c.dim] += q * c.stride;
            }
        }
        linear_index(shape, &idx)?;
        if let Preprocess::Roll(a, b) = self.preprocess {
            idx[a] = (idx[a] + idx[b]).rem_euclid(shape[a] as i64);
        }
        Some(idx)
    }

    /// linear element index per slot of one block, or [`ZERO`].
    pub fn slot_map(&self, shape: &[usize]) -> Vec<i64> {
        let padded = self.padded();
        (0..self.block())
            .map(|i| match self.index_at(&unlinear(&padded, i), shape) {
                Some(idx) => linear_index(shape, &idx).map_or(ZERO, |o| o as i64),
                None => ZERO,
            })
            .collect()
    }

    /// slot values of one block read from `data`.
    pub fn pack(&self, data: &Tensor) -> Vec<i64> {
        let padded = self.padded();
        (0..self.block())
            .map(|i| self.index_at(&unlinear(&padded, i), &data.shape).map_or(0, |idx| data.get(&idx)))
            .collect()
    }
}

impl fmt::Display for MaterializedVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.array)?;
        if let Preprocess::Roll(a, b) = self.preprocess {
            write!(f, ".Roll({a},{b})")?;
        }
        write!(f, "(")?;
        for (k, o) in self.offsets.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{o}")?;
        }
        write!(f, ")[")?;
        for (k, d) in self.dims.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "({}, {}, {}", d.extent, d.oob_l, d.oob_r)?;
            if d.content.is_empty() {
                write!(f, ", {{}})")?;
            } else {
                write!(f, " {{")?;
                for (j, c) in d.content.iter().enumerate() {
                    if j > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{} :: {}", c.dim, c.stride)?;
                }
                write!(f, "}})")?;
            }
        }
        write!(f, "]")
    }
}

fn floor_div(a: i64, b: i64) -> i64 {
    a.div_euclid(b)
}

fn ceil_div(a: i64, b: i64) -> i64 {
    -(-a).div_euclid(b)
}

/// slot positions p with 0 <= off + p * s < n, as a half-open range.
fn in_bounds(off: i64, s: i64, n: i64) -> (i64, i64) {
    if s > 0 {
        (ceil_div(-off, s), floor_div(n - 1 - off, s) + 1)
    } else {
        let t = -s;
        (ceil_div(off - n + 1, t), floor_div(off, t) + 1)
    }
}

fn dim_uses(dims: &[VecDim], rank: usize) -> Vec<usize> {
    let mut uses = vec![0; rank];
    for d in dims {
        for c in &d.content {
            uses[c.dim] += 1;
        }
    }
    uses
}

fn zero_vector(array: &str, rank: usize, padded: &[usize], pre: Preprocess) -> MaterializedVector {
    MaterializedVector {
        array: String::from(array),
        preprocess: pre,
        offsets: vec![0; rank],
        dims: padded.iter().map(|&p| VecDim { extent: 0, oob_l: 0, oob_r: p, content: Vec::new() }).collect(),
    }
}

/// the vector of coordinate `coord` ignoring the layout's own preprocess;
/// `pre` is attached as an array-level roll.
pub fn build_vector(t: &ArrayTraversal, shape: &[usize], l: &Layout, coord: &[usize], pre: Preprocess) -> MaterializedVector {
    let mut offsets = t.offsets.clone();
    for (e, &c) in l.exploded.iter().zip(coord) {
        for cd in &t.dims[e.dim].content {
            offsets[cd.dim] += cd.stride * (c * e.stride) as i64;
        }
    }
    let padded: Vec<usize> = l.vectorized.iter().map(|v| v.extent).collect();
    let mut dims: Vec<VecDim> = l
        .vectorized
        .iter()
        .map(|v| VecDim {
            extent: v.valid,
            oob_l: 0,
            oob_r: v.extent - v.valid,
            content: t.dims[v.dim].content.iter().map(|c| ContentDim { dim: c.dim, stride: c.stride * v.stride as i64 }).collect(),
        })
        .collect();
    let uses = dim_uses(&dims, shape.len());
    for (d, &n) in shape.iter().enumerate() {
        if uses[d] == 0 && (offsets[d] < 0 || offsets[d] >= n as i64) {
            return zero_vector(&t.array, shape.len(), &padded, pre);
        }
    }
    for (k, d) in dims.iter_mut().enumerate() {
        let (mut lo, mut hi) = (0i64, l.vectorized[k].valid as i64);
        for c in d.content.iter().filter(|c| uses[c.dim] == 1) {
            let (a, b) = in_bounds(offsets[c.dim], c.stride, shape[c.dim] as i64);
            lo = lo.max(a);
            hi = hi.min(b);
        }
        if lo >= hi {
            return zero_vector(&t.array, shape.len(), &padded, pre);
        }
        for c in &d.content {
            offsets[c.dim] += lo * c.stride;
        }
        d.oob_l = lo as usize;
        d.extent = (hi - lo) as usize;
        d.oob_r = padded[k] - hi as usize;
    }
    MaterializedVector { array: t.array.clone(), preprocess: pre, offsets, dims }
}

/// the same vector with unshared dims extended into padding wherever the
/// array is in bounds; none when nothing changes.
pub fn widen(v: &MaterializedVector, shape: &[usize]) -> Option<MaterializedVector> {
    if v.is_zero() {
        return None;
    }
    let uses = dim_uses(&v.dims, shape.len());
    let mut out = v.clone();
    for d in out.dims.iter_mut() {
        if d.content.is_empty() || d.content.iter().any(|c| uses[c.dim] != 1) {
            continue;
        }
        let p = d.padded() as i64;
        let (mut lo, mut hi) = (0i64, p);
        for c in &d.content {
            let base = out.offsets[c.dim] - d.oob_l as i64 * c.stride;
            let (a, b) = in_bounds(base, c.stride, shape[c.dim] as i64);
            lo = lo.max(a);
            hi = hi.min(b);
        }
        for c in &d.content {
            out.offsets[c.dim] += (lo - d.oob_l as i64) * c.stride;
        }
        d.oob_l = lo as usize;
        d.extent = (hi - lo) as usize;
        d.oob_r = (p - hi) as usize;
    }
    (out != *v).then_some(out)
}

/// ground truth: linear element per slot of coordinate `coord`, following
/// the traversal, the layout's preprocess and padding.
pub fn site_slot_map(t: &ArrayTraversal, shape: &[usize], l: &Layout, coord: &[usize]) -> Vec<i64> {
    let padded: Vec<usize> = l.vectorized.iter().map(|v| v.extent).collect();
    let block: usize = padded.iter().product();
    let mut base = vec![0usize; t.dims.len()];
    for (e, &c) in l.exploded.iter().zip(coord) {
        base[e.dim] += c * e.stride;
    }
    (0..block)
        .map(|i| {
            let p = unlinear(&padded, i);
            let mut pos = base.clone();
            for (v, &pk) in l.vectorized.iter().zip(&p) {
                if pk >= v.valid {
                    return ZERO;
                }
                pos[v.dim] += pk * v.stride;
            }
            if let Preprocess::Roll(a, b) = l.preprocess {
                pos[a] = (pos[a] + pos[b]) % t.dims[a].extent;
            }
            linear_index(shape, &t.index_at(&pos)).map_or(ZERO, |o| o as i64)
        })
        .collect()
}

/// how a roll layout is materialized.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RollCase {
    /// identity preprocess.
    NoRoll,
    /// the rolled dim has no content, so the roll changes nothing.
    Trivial,
    /// both dims have content: vectors of the array rolled over (da, db).
    Array(usize, usize),
    /// only the rolled dim has content: base vectors rotated per coordinate.
    Rotated,
}

pub fn roll_case(t: &ArrayTraversal, l: &Layout) -> RollCase {
    match l.preprocess {
        Preprocess::Identity => RollCase::NoRoll,
        Preprocess::Roll(a, b) => {
            let (ca, cb) = (&t.dims[a].content, &t.dims[b].content);
            if ca.is_empty() {
                RollCase::Trivial
            } else if cb.is_empty() {
                RollCase::Rotated
            } else {
                RollCase::Array(ca[0].dim, cb[0].dim)
            }
        }
    }
}

pub(crate) fn without_preprocess(l: &Layout) -> Layout {
    let mut out = l.clone();
    out.preprocess = Preprocess::Identity;
    out
}

/// traversal with the content of dim `a` moved onto dim `b`.
pub(crate) fn moved_traversal(t: &ArrayTraversal, a: usize, b: usize) -> ArrayTraversal {
    let mut out = t.clone();
    out.dims[b].content = core::mem::take(&mut out.dims[a].content);
    out
}

/// one vector per coordinate in row-major coordinate order; for a rotated
/// roll only the base vectors (rolled coordinate 0) are listed.
pub fn apply_layout(t: &ArrayTraversal, shape: &[usize], l: &Layout) -> Vec<(Vec<usize>, MaterializedVector)> {
    let extents = l.exploded_extents();
    let plain = without_preprocess(l);
    let coords = crate::tensor::positions(&extents);
    match roll_case(t, l) {
        RollCase::NoRoll | RollCase::Trivial => {
            coords.map(|c| (c.clone(), build_vector(t, shape, &plain, &c, Preprocess::Identity))).collect()
        }
        RollCase::Array(da, db) => coords.map(|c| (c.clone(), build_vector(t, shape, &plain, &c, Preprocess::Roll(da, db)))).collect(),
        RollCase::Rotated => {
            let Preprocess::Roll(a, b) = l.preprocess else { unreachable!() };
            let ka = l.exploded.iter().position(|e| e.dim == a).expect("rolled dim is exploded");
            let moved = moved_traversal(t, a, b);
            coords
                .filter(|c| c[ka] == 0)
                .map(|c| (c.clone(), build_vector(&moved, shape, &plain, &c, Preprocess::Identity)))
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sched::{parse_layout, VectorizedDim};
    use alloc::string::ToString;

    fn kt() -> ArrayTraversal {
        ArrayTraversal {
            array: "k".into(),
            offsets: vec![1, 0],
            dims: vec![
                crate::index_free::TraversalDim { extent: 2, content: vec![ContentDim { dim: 0, stride: -1 }] },
                crate::index_free::TraversalDim { extent: 4, content: vec![ContentDim { dim: 0, stride: 1 }] },
            ],
        }
    }

    #[test]
    fn kt_vectors() {
        let l = Layout {
            preprocess: Preprocess::Identity,
            exploded: vec![crate::sched::ExplodedDim { name: "i".into(), dim: 0, extent: 2, stride: 1 }],
            vectorized: vec![VectorizedDim::new(1, 4, 1)],
        };
        let vs = apply_layout(&kt(), &[4, 4], &l);
        assert_eq!(vs.len(), 2);
        assert_eq!(vs[0].1.to_string(), "k(1, 0)[(3, 0, 1 {0 :: 1})]");
        assert_eq!(vs[1].1.to_string(), "k(0, 0)[(4, 0, 0 {0 :: 1})]");
        for (c, v) in &vs {
            assert_eq!(v.slot_map(&[4, 4]), site_slot_map(&kt(), &[4, 4], &l, c));
        }
    }

    #[test]
    fn padding_and_clipping() {
        // x[j - 1] over j:4 vectorized at width 4 reads x[-1], x[0], x[1], x[2]
        let t = ArrayTraversal {
            array: "x".into(),
            offsets: vec![-1],
            dims: vec![crate::index_free::TraversalDim { extent: 3, content: vec![ContentDim { dim: 0, stride: 1 }] }],
        };
        let l = parse_layout("{} [(0,4~3,1)]").unwrap();
        let v = build_vector(&t, &[4], &l, &[], Preprocess::Identity);
        assert_eq!(v.to_string(), "x(0)[(2, 1, 1 {0 :: 1})]");
        assert_eq!(v.slot_map(&[4]), vec![ZERO, 0, 1, ZERO]);
        let w = widen(&v, &[4]).unwrap();
        assert_eq!(w.to_string(), "x(0)[(3, 1, 0 {0 :: 1})]");
        assert_eq!(w.slot_map(&[4]), vec![ZERO, 0, 1, 2]);
    }

    #[test]
    fn fully_oob_vector_is_zero() {
        let t = ArrayTraversal {
            array: "x".into(),
            offsets: vec![5, 0],
            dims: vec![crate::index_free::TraversalDim { extent: 2, content: vec![ContentDim { dim: 1, stride: 1 }] }],
        };
        let l = parse_layout("{} [(0,2,1)]").unwrap();
        let v = build_vector(&t, &[2, 2], &l, &[], Preprocess::Identity);
        assert!(v.is_zero());
        assert_eq!(v.slot_map(&[2, 2]), vec![ZERO, ZERO]);
    }

    #[test]
    fn in_bounds_ranges() {
        for off in -5i64..6 {
            for s in [-3i64, -2, -1, 1, 2, 3] {
                let (lo, hi) = in_bounds(off, s, 4);
                for p in -10i64..10 {
                    let x = off + p * s;
                    assert_eq!((0..4).contains(&x), p >= lo && p < hi, "off {off} s {s} p {p}");
                }
            }
        }
    }
}
