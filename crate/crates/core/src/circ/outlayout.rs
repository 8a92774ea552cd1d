use crate::error::{invalid, Result};
use crate::sched::{ExplodedDim, Layout, Preprocess, VectorizedDim};
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// a vector dimension of a computed value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OutVecDim {
    Vec(VectorizedDim),
    /// folded dim whose result sits at position 0.
    Reduced(usize),
    /// folded dim whose result repeats at every position.
    ReducedRepeated(usize),
}

impl OutVecDim {
    pub fn extent(&self) -> usize {
        match self {
            OutVecDim::Vec(v) => v.extent,
            OutVecDim::Reduced(e) | OutVecDim::ReducedRepeated(e) => *e,
        }
    }
}

impl fmt::Display for OutVecDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutVecDim::Vec(v) if v.valid == v.extent => write!(f, "({},{},{})", v.dim, v.extent, v.stride),
            OutVecDim::Vec(v) => write!(f, "({},{}~{},{})", v.dim, v.extent, v.valid, v.stride),
            OutVecDim::Reduced(e) => write!(f, "R({e})"),
            OutVecDim::ReducedRepeated(e) => write!(f, "RR({e})"),
        }
    }
}

/// layout of the value an expression computes.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OutputLayout {
    /// a literal: the same value in every slot of every vector.
    Wildcard,
    Concrete { preprocess: Preprocess, exploded: Vec<ExplodedDim>, vectorized: Vec<OutVecDim> },
}

type ShapeKey = (Preprocess, Vec<(usize, usize, usize)>, Vec<OutVecDim>);

impl OutputLayout {
    pub fn from_layout(l: &Layout) -> Self {
        OutputLayout::Concrete {
            preprocess: l.preprocess,
            exploded: l.exploded.clone(),
            vectorized: l.vectorized.iter().map(|v| OutVecDim::Vec(*v)).collect(),
        }
    }

    pub fn scalar() -> Self {
        OutputLayout::Concrete { preprocess: Preprocess::Identity, exploded: Vec::new(), vectorized: Vec::new() }
    }

    pub fn vectorized(&self) -> &[OutVecDim] {
        match self {
            OutputLayout::Wildcard => &[],
            OutputLayout::Concrete { vectorized, .. } => vectorized,
        }
    }

    pub fn exploded(&self) -> &[ExplodedDim] {
        match self {
            OutputLayout::Wildcard => &[],
            OutputLayout::Concrete { exploded, .. } => exploded,
        }
    }

    pub fn block(&self) -> usize {
        self.vectorized().iter().map(OutVecDim::extent).product()
    }

    /// exploded dims as let binders.
    pub fn dims(&self) -> Vec<(String, usize)> {
        self.exploded().iter().map(|e| (e.name.clone(), e.extent)).collect()
    }

    fn key(&self) -> Option<ShapeKey> {
        match self {
            OutputLayout::Wildcard => None,
            OutputLayout::Concrete { preprocess, exploded, vectorized } => {
                let mut ex: Vec<(usize, usize, usize)> = exploded.iter().map(|e| (e.dim, e.extent, e.stride)).collect();
                ex.sort_unstable();
                Some((*preprocess, ex, vectorized.clone()))
            }
        }
    }

    /// equal up to the names of exploded dims.
    pub fn same_shape(&self, o: &OutputLayout) -> bool {
        self.key() == o.key()
    }

    /// names of `self` mapped to the names at the same place in `to`.
    pub fn rename_map(&self, to: &OutputLayout) -> BTreeMap<String, String> {
        let sorted = |x: &OutputLayout| {
            let mut v: Vec<ExplodedDim> = x.exploded().to_vec();
            v.sort_by_key(|e| (e.dim, e.stride, e.extent));
            v
        };
        sorted(self).into_iter().zip(sorted(to)).filter(|(a, b)| a.name != b.name).map(|(a, b)| (a.name, b.name)).collect()
    }

    /// the site layout a consumer of this value must use; leading repeated
    /// dims are dropped and any other reduced dim is an error.
    pub fn to_layout(&self) -> Result<Layout> {
        let OutputLayout::Concrete { preprocess, exploded, vectorized } = self else {
            return invalid("a literal has no site layout");
        };
        let skip = leading_repeated(vectorized);
        let mut v = Vec::new();
        for d in &vectorized[skip..] {
            match d {
                OutVecDim::Vec(x) => v.push(*x),
                _ => return invalid("reduced dims cannot be combined with sites"),
            }
        }
        Ok(Layout { preprocess: *preprocess, exploded: exploded.clone(), vectorized: v })
    }

    /// the layout with `k` leading dims removed.
    pub fn drop_leading(&self, k: usize) -> OutputLayout {
        match self {
            OutputLayout::Wildcard => OutputLayout::Wildcard,
            OutputLayout::Concrete { preprocess, exploded, vectorized } => {
                OutputLayout::Concrete { preprocess: *preprocess, exploded: exploded.clone(), vectorized: vectorized[k..].to_vec() }
            }
        }
    }
}

fn leading_repeated(v: &[OutVecDim]) -> usize {
    v.iter().take_while(|d| matches!(d, OutVecDim::ReducedRepeated(_))).count()
}

impl fmt::Display for OutputLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutputLayout::Wildcard => write!(f, "*"),
            OutputLayout::Concrete { preprocess, exploded, vectorized } => {
                if *preprocess != Preprocess::Identity {
                    write!(f, "{preprocess} ")?;
                }
                write!(f, "{{")?;
                for (k, e) in exploded.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}:{}:{}:{}", e.name, e.dim, e.extent, e.stride)?;
                }
                write!(f, "}} [")?;
                for (k, v) in vectorized.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "]")
            }
        }
    }
}

/// number of leading repeated dims to drop for `from` to become `to` (up to
/// names), or none when no coercion exists.
pub fn coercion(from: &OutputLayout, to: &OutputLayout) -> Option<usize> {
    match (from, to) {
        (OutputLayout::Wildcard, _) => Some(0),
        (_, OutputLayout::Wildcard) => None,
        (OutputLayout::Concrete { vectorized, .. }, _) => {
            (0..=leading_repeated(vectorized)).find(|&k| from.drop_leading(k).same_shape(to))
        }
    }
}

/// whether `from` can stand where `to` is expected.
pub fn coerce(from: &OutputLayout, to: &OutputLayout) -> bool {
    coercion(from, to).is_some()
}

/// common layout of two operands, or none.
pub fn unify(a: &OutputLayout, b: &OutputLayout) -> Option<OutputLayout> {
    if coerce(b, a) {
        Some(a.clone())
    } else if coerce(a, b) {
        Some(b.clone())
    } else {
        None
    }
}

/// preprocess after reducing traversal dim `n`.
pub fn reduce_preprocess(n: usize, p: Preprocess) -> Result<Preprocess> {
    let shift = |d: usize| if d > n { d - 1 } else { d };
    match p {
        Preprocess::Identity => Ok(Preprocess::Identity),
        Preprocess::Roll(a, _) if a == n => Ok(Preprocess::Identity),
        Preprocess::Roll(_, b) if b == n => invalid("reducing the dim a roll follows mixes rolled positions"),
        Preprocess::Roll(a, b) => Ok(Preprocess::Roll(shift(a), shift(b))),
    }
}

/// result of [`reduce_layout`].
pub type Reduced = (OutputLayout, Vec<(String, usize)>, Vec<usize>);

/// layout after reducing dim `n`, the exploded dims reduced (name, extent)
/// and the positions of reduced vectorized dims.
pub fn reduce_layout(n: usize, ol: &OutputLayout) -> Result<Reduced> {
    let OutputLayout::Concrete { preprocess, exploded, vectorized } = ol else {
        return invalid("cannot reduce a literal layout");
    };
    let preprocess = reduce_preprocess(n, *preprocess)?;
    let mut ex = Vec::new();
    let mut gone = Vec::new();
    for e in exploded {
        if e.dim == n {
            gone.push((e.name.clone(), e.extent));
        } else {
            let mut e = e.clone();
            if e.dim > n {
                e.dim -= 1;
            }
            ex.push(e);
        }
    }
    let mut vec_out = Vec::new();
    let mut reduced = Vec::new();
    for (k, d) in vectorized.iter().enumerate() {
        match d {
            OutVecDim::Vec(v) if v.dim == n => {
                // a fold wraps cyclically when every dim outside it repeats
                let outer_repeats = vec_out.iter().all(|d| matches!(d, OutVecDim::ReducedRepeated(_)));
                vec_out.push(if outer_repeats { OutVecDim::ReducedRepeated(v.extent) } else { OutVecDim::Reduced(v.extent) });
                reduced.push(k);
            }
            OutVecDim::Vec(v) if v.dim > n => {
                let mut v = *v;
                v.dim -= 1;
                vec_out.push(OutVecDim::Vec(v));
            }
            d => vec_out.push(*d),
        }
    }
    Ok((OutputLayout::Concrete { preprocess, exploded: ex, vectorized: vec_out }, gone, reduced))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sched::parse_layout;
    use alloc::string::ToString;
    use alloc::vec;

    fn ol(s: &str) -> OutputLayout {
        OutputLayout::from_layout(&parse_layout(s).unwrap())
    }

    #[test]
    fn row_wise_reduce_repeats() {
        let (out, gone, red) = reduce_layout(1, &ol("{i:0:4:1} [(1,4,1)]")).unwrap();
        assert_eq!(out.to_string(), "{i:0:4:1} [RR(4)]");
        assert!(gone.is_empty());
        assert_eq!(red, vec![0]);
    }

    #[test]
    fn diagonal_reduce_drops_roll() {
        let (out, gone, _) = reduce_layout(1, &ol("roll(1,0) {i:1:4:1} [(0,4,1)]")).unwrap();
        assert_eq!(out.to_string(), "{} [(0,4,1)]");
        assert_eq!(gone, vec![(String::from("i"), 4)]);
    }

    #[test]
    fn inner_reduce_is_reduced() {
        let (out, _, _) = reduce_layout(1, &ol("{} [(0,4,1), (1,4,1)]")).unwrap();
        assert_eq!(out.to_string(), "{} [(0,4,1), R(4)]");
        let (out, _, _) = reduce_layout(0, &ol("{a:0:4:1} []")).unwrap();
        assert_eq!(out.to_string(), "{} []");
    }

    #[test]
    fn preprocess_rules() {
        assert_eq!(reduce_preprocess(1, Preprocess::Roll(1, 0)).unwrap(), Preprocess::Identity);
        assert!(reduce_preprocess(0, Preprocess::Roll(1, 0)).is_err());
        assert_eq!(reduce_preprocess(0, Preprocess::Roll(2, 1)).unwrap(), Preprocess::Roll(1, 0));
        assert_eq!(reduce_preprocess(3, Preprocess::Identity).unwrap(), Preprocess::Identity);
    }

    #[test]
    fn coercions() {
        let diag = ol("{} [(0,4,1)]");
        assert!(coerce(&OutputLayout::Wildcard, &diag));
        let rr = OutputLayout::Concrete {
            preprocess: Preprocess::Identity,
            exploded: vec![],
            vectorized: vec![OutVecDim::ReducedRepeated(4), OutVecDim::Vec(VectorizedDim::new(0, 4, 1))],
        };
        assert!(coerce(&rr, &diag));
        assert!(!coerce(&diag, &rr));
        let r = OutputLayout::Concrete { preprocess: Preprocess::Identity, exploded: vec![], vectorized: vec![OutVecDim::Reduced(4)] };
        assert!(!coerce(&r, &OutputLayout::scalar()));
        assert_eq!(unify(&diag, &rr), Some(diag.clone()));
        assert_eq!(unify(&r, &diag), None);
    }
}
