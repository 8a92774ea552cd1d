use super::{MaterializedVector, ZERO};
use crate::circ::OffsetExpr;
use crate::error::{invalid, Result};
use crate::tensor::unlinear;
use crate::util::log2_exact;
use alloc::string::String;
use alloc::vec::Vec;

/// per target dim (padded extent, lo, hi) with ones inside the inclusive box.
pub type MaskSpec = Vec<(usize, usize, usize)>;

/// rotate the source by `rot`, then multiply by `mask` if present.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation {
    pub rot: i64,
    pub mask: Option<MaskSpec>,
}

/// a target slot map with the facts derivation needs precomputed.
#[derive(Clone, Debug)]
pub struct TargetSlots {
    pub slots: Vec<i64>,
    pub dims: Vec<usize>,
    /// first slot holding an element, with that element.
    pub first: Option<(usize, i64)>,
    /// inclusive bounding box of element slots per dim.
    pub bbox: Vec<(usize, usize)>,
}

impl TargetSlots {
    pub fn new(slots: Vec<i64>, dims: &[usize]) -> Self {
        let mut bbox: Vec<(usize, usize)> = dims.iter().map(|_| (usize::MAX, 0)).collect();
        let mut first = None;
        for (i, &v) in slots.iter().enumerate() {
            if v < 0 {
                continue;
            }
            if first.is_none() {
                first = Some((i, v));
            }
            for (k, &p) in unlinear(dims, i).iter().enumerate() {
                bbox[k].0 = bbox[k].0.min(p);
                bbox[k].1 = bbox[k].1.max(p);
            }
        }
        TargetSlots { slots, dims: dims.to_vec(), first, bbox }
    }

    pub fn is_zero(&self) -> bool {
        self.first.is_none()
    }

    fn in_box(&self, i: usize) -> bool {
        unlinear(&self.dims, i).iter().zip(&self.bbox).all(|(&p, &(lo, hi))| p >= lo && p <= hi)
    }

    fn mask(&self) -> MaskSpec {
        self.dims.iter().zip(&self.bbox).map(|(&e, &(lo, hi))| (e, lo, hi)).collect()
    }

    /// whether `rot` works, and with which mask.
    pub fn check(&self, source: &[i64], rot: i64) -> Option<Option<MaskSpec>> {
        let (bt, bs) = (self.slots.len(), source.len());
        let l = bt.max(bs) as i64;
        let mut need_mask = false;
        for i in 0..l {
            let tv = self.slots[i as usize % bt];
            let sv = source[((i - rot).rem_euclid(l)) as usize % bs];
            if tv >= 0 {
                if sv != tv {
                    return None;
                }
            } else if sv != ZERO {
                if self.in_box(i as usize % bt) {
                    return None;
                }
                need_mask = true;
            }
        }
        Some(need_mask.then(|| self.mask()))
    }

    /// candidate rotations aligning the first target element, smallest first.
    pub fn candidates(&self, source: &[i64]) -> Vec<i64> {
        let Some((p, e)) = self.first else { return Vec::new() };
        let (bt, bs) = (self.slots.len(), source.len());
        let reps = (bt.max(bs) / bs) as i64;
        let mut out: Vec<i64> = Vec::new();
        for (q, _) in source.iter().enumerate().filter(|(_, &v)| v == e) {
            for m in 0..reps {
                out.push(p as i64 - q as i64 - m * bs as i64);
            }
        }
        out.sort_by_key(|r| (r.abs(), *r > 0));
        out.dedup();
        out
    }

    pub fn derive(&self, source: &[i64]) -> Option<Derivation> {
        self.candidates(source).into_iter().find_map(|r| self.check(source, r).map(|mask| Derivation { rot: r, mask }))
    }
}

/// derive a target slot map from a source slot map by one rotation and an
/// optional interval mask.
pub fn derive_slots(target: &[i64], dims: &[usize], source: &[i64]) -> Option<Derivation> {
    TargetSlots::new(target.to_vec(), dims).derive(source)
}

/// derive `target` from `source`, both vectors over the same array.
pub fn derive_vector(target: &MaterializedVector, source: &MaterializedVector, shape: &[usize]) -> Option<Derivation> {
    if target.array != source.array || target.preprocess != source.preprocess {
        return None;
    }
    derive_slots(&target.slot_map(shape), &target.padded(), &source.slot_map(shape))
}

/// rotations replicating position 0 of a reduced dim across its extent.
pub fn clean_and_fill(extent: usize, width: usize) -> Result<Vec<i64>> {
    let Some(k) = log2_exact(extent) else {
        return invalid(alloc::format!("clean-and-fill needs a power-of-two extent, got {extent}"));
    };
    Ok((0..k).map(|t| (width << t) as i64).collect())
}

/// offset expression of per-coordinate values when they are affine in the
/// coordinate, none otherwise.
pub fn fit_affine(names: &[String], extents: &[usize], values: &[i64]) -> Option<OffsetExpr> {
    let base = *values.first()?;
    let mut terms = Vec::new();
    let mut stride = 1usize;
    let mut strides = alloc::vec![0usize; extents.len()];
    for k in (0..extents.len()).rev() {
        strides[k] = stride;
        stride *= extents[k];
    }
    for (k, &e) in extents.iter().enumerate() {
        let c = if e > 1 { values[strides[k]] - base } else { 0 };
        terms.push((names[k].clone(), c));
    }
    for (o, &v) in values.iter().enumerate() {
        let coord = unlinear(extents, o);
        let want = base + coord.iter().zip(&terms).map(|(&x, (_, c))| x as i64 * c).sum::<i64>();
        if want != v {
            return None;
        }
    }
    Some(OffsetExpr::affine(base, &terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn kt_derivation() {
        // target k[1..3][0] then a zero slot; source k[0..3][0]
        let target = [4, 8, 12, ZERO];
        let source = [0, 4, 8, 12];
        let d = derive_slots(&target, &[4], &source).unwrap();
        assert_eq!(d, Derivation { rot: -1, mask: Some(vec![(4, 0, 2)]) });
        // the reverse needs an element the target lacks
        assert_eq!(derive_slots(&source, &[4], &target), None);
    }

    #[test]
    fn identity_derivation() {
        let s = [3, 1, ZERO, 2];
        assert_eq!(derive_slots(&s, &[4], &s), Some(Derivation { rot: 0, mask: None }));
    }

    #[test]
    fn non_interval_mask_fails() {
        // the zero sits between two elements, so no interval mask exists
        let target = [0, ZERO, 2, 3];
        let source = [0, 1, 2, 3];
        assert_eq!(derive_slots(&target, &[4], &source), None);
    }

    #[test]
    fn replicated_source() {
        // a 2-slot source replicated to 4 slots
        let target = [5, 6, 5, 6];
        let source = [6, 5];
        let d = derive_slots(&target, &[4], &source).unwrap();
        assert_eq!(d.mask, None);
        assert_eq!(d.rot.rem_euclid(2), 1);
    }

    #[test]
    fn fill_rotations() {
        assert_eq!(clean_and_fill(16, 16).unwrap(), vec![16, 32, 64, 128]);
        assert_eq!(clean_and_fill(1, 4).unwrap(), Vec::<i64>::new());
        assert_eq!(clean_and_fill(4, 1).unwrap(), vec![1, 2]);
        assert!(clean_and_fill(3, 1).is_err());
    }

    #[test]
    fn fill_replicates_by_brute_force() {
        // 8 slots: dims [2 outer, 4 reduced]; position 0 of the reduced dim
        // holds the value, other positions garbage
        let width = 1;
        let mut x = vec![7i64, 99, 98, 97, 5, 96, 95, 94];
        for (i, v) in x.iter_mut().enumerate() {
            if i % 4 != 0 {
                *v = 0;
            }
        }
        for r in clean_and_fill(4, width).unwrap() {
            let rotated: Vec<i64> = (0..8).map(|i| x[((i as i64 - r).rem_euclid(8)) as usize]).collect();
            x = x.iter().zip(&rotated).map(|(a, b)| a + b).collect();
        }
        assert_eq!(x, vec![7, 7, 7, 7, 5, 5, 5, 5]);
    }

    #[test]
    fn affine_fit() {
        let names = vec![String::from("a"), String::from("b")];
        let vals: Vec<i64> = (0..6i64).map(|o| -3 * (o / 3) - o % 3).collect();
        let e = fit_affine(&names, &[2, 3], &vals).unwrap();
        assert_eq!(alloc::format!("{e}"), "((-3 * a) + (-1 * b))");
        assert_eq!(fit_affine(&names, &[2, 3], &[0, 1, 5, 0, 0, 0]), None);
    }
}
