use crate::error::{Error, Result};
use crate::index_free::{IndexFreeProgram, SiteId};
use crate::util::next_pow2;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// permutation applied to a traversal before its layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Preprocess {
    Identity,
    /// position map x_a <- (x_a + x_b) mod n over traversal dims a and b.
    Roll(usize, usize),
}

impl fmt::Display for Preprocess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preprocess::Identity => write!(f, "id"),
            Preprocess::Roll(a, b) => write!(f, "roll({a},{b})"),
        }
    }
}

/// traversal dimension piece laid out across different vectors.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExplodedDim {
    pub name: String,
    pub dim: usize,
    pub extent: usize,
    pub stride: usize,
}

/// traversal dimension piece laid out inside every vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VectorizedDim {
    pub dim: usize,
    /// padded extent, always a power of two.
    pub extent: usize,
    pub stride: usize,
    /// unpadded extent; slot positions at or past it are padding.
    pub valid: usize,
}

impl VectorizedDim {
    pub fn new(dim: usize, valid: usize, stride: usize) -> Self {
        VectorizedDim { dim, extent: next_pow2(valid), stride, valid }
    }
}

/// layout of one indexing site.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Layout {
    pub preprocess: Preprocess,
    /// kept sorted by (dim, stride).
    pub exploded: Vec<ExplodedDim>,
    /// outermost first.
    pub vectorized: Vec<VectorizedDim>,
}

impl Layout {
    pub fn empty() -> Self {
        Layout { preprocess: Preprocess::Identity, exploded: Vec::new(), vectorized: Vec::new() }
    }

    /// number of slots one packed vector block occupies.
    pub fn block_size(&self) -> usize {
        self.vectorized.iter().map(|v| v.extent).product()
    }

    pub fn exploded_extents(&self) -> Vec<usize> {
        self.exploded.iter().map(|e| e.extent).collect()
    }

    pub fn exploded_names(&self) -> Vec<String> {
        self.exploded.iter().map(|e| e.name.clone()).collect()
    }

    pub fn num_coords(&self) -> usize {
        self.exploded.iter().map(|e| e.extent).product()
    }

    /// number of schedule dims on traversal dim `d`.
    pub fn pieces(&self, d: usize) -> usize {
        self.exploded.iter().filter(|e| e.dim == d).count() + self.vectorized.iter().filter(|v| v.dim == d).count()
    }

    /// tiling applications that produced this layout.
    pub fn tilings(&self) -> usize {
        let mut dims: Vec<usize> = self.exploded.iter().map(|e| e.dim).chain(self.vectorized.iter().map(|v| v.dim)).collect();
        let total = dims.len();
        dims.sort_unstable();
        dims.dedup();
        total - dims.len()
    }

    pub fn sort(&mut self) {
        self.exploded.sort_by_key(|e| (e.dim, e.stride));
    }

    pub fn is_initial(&self) -> bool {
        self.vectorized.is_empty() && self.preprocess == Preprocess::Identity
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.preprocess != Preprocess::Identity {
            write!(f, "{} ", self.preprocess)?;
        }
        write!(f, "{{")?;
        for (k, e) in self.exploded.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}:{}:{}:{}", e.name, e.dim, e.extent, e.stride)?;
        }
        write!(f, "}} [")?;
        for (k, v) in self.vectorized.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            if v.valid == v.extent {
                write!(f, "({},{},{})", v.dim, v.extent, v.stride)?;
            } else {
                write!(f, "({},{}~{},{})", v.dim, v.extent, v.valid, v.stride)?;
            }
        }
        write!(f, "]")
    }
}

/// per-site layouts.
pub type Schedule = BTreeMap<SiteId, Layout>;

/// canonical name of an exploded dim in a layout whose names use `prefix`.
pub fn canonical_name(prefix: &str, dim: usize, stride: usize) -> String {
    if stride == 1 {
        format!("{prefix}{dim}")
    } else {
        format!("{prefix}{dim}s{stride}")
    }
}

/// name prefix shared by all exploded dims of a layout (up to the last '_').
pub(crate) fn prefix_of(name: &str) -> &str {
    match name.rfind('_') {
        Some(k) => &name[..=k],
        None => "",
    }
}

/// fully exploded layout over traversal extents.
pub fn initial_layout(prefix: &str, extents: &[usize]) -> Layout {
    let exploded = extents
        .iter()
        .enumerate()
        .map(|(d, &e)| ExplodedDim { name: canonical_name(prefix, d, 1), dim: d, extent: e, stride: 1 })
        .collect();
    Layout { preprocess: Preprocess::Identity, exploded, vectorized: Vec::new() }
}

/// every site fully exploded; sites of one region share dimension names.
pub fn initial_schedule(p: &IndexFreeProgram) -> Schedule {
    let regions = crate::index_free::regions(p);
    let mut s = Schedule::new();
    for (r, reg) in regions.iter().enumerate() {
        let prefix = format!("i{r}_");
        for &site in &reg.sites {
            let t = p.sites().into_iter().find(|(id, _)| *id == site).map(|(_, t)| t.extents()).unwrap_or_default();
            s.insert(site, initial_layout(&prefix, &t));
        }
    }
    s
}

fn cfg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

fn nums(s: &str) -> Result<Vec<usize>> {
    s.split(',').map(|x| x.trim().parse::<usize>().map_err(|_| Error::Config(format!("bad number '{x}'")))).collect()
}

/// parse the text produced by `Display for Layout`.
pub fn parse_layout(text: &str) -> Result<Layout> {
    let text = text.trim();
    let (preprocess, rest) = if let Some(r) = text.strip_prefix("roll(") {
        let close = r.find(')').ok_or_else(|| Error::Config(String::from("unterminated roll")))?;
        let v = nums(&r[..close])?;
        if v.len() != 2 {
            return cfg("roll takes two dims");
        }
        (Preprocess::Roll(v[0], v[1]), r[close + 1..].trim())
    } else {
        (Preprocess::Identity, text.strip_prefix("id ").unwrap_or(text).trim())
    };
    let rest = rest.strip_prefix('{').ok_or_else(|| Error::Config(format!("expected '{{' in '{text}'")))?;
    let close = rest.find('}').ok_or_else(|| Error::Config(String::from("unterminated exploded set")))?;
    let mut exploded = Vec::new();
    for item in rest[..close].split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        if parts.len() != 4 {
            return cfg(format!("exploded dim '{item}' needs name:dim:extent:stride"));
        }
        let v = nums(&parts[1..].join(","))?;
        exploded.push(ExplodedDim { name: String::from(parts[0]), dim: v[0], extent: v[1], stride: v[2] });
    }
    let rest = rest[close + 1..].trim();
    let inner = rest
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| Error::Config(format!("expected vectorized list in '{text}'")))?;
    let mut vectorized = Vec::new();
    for item in inner.split(')').map(str::trim).filter(|s| !s.is_empty()) {
        let item = item.trim_start_matches(',').trim().trim_start_matches('(');
        let parts: Vec<&str> = item.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return cfg(format!("vectorized dim '{item}' needs (dim,extent,stride)"));
        }
        let dim = nums(parts[0])?[0];
        let stride = nums(parts[2])?[0];
        let v = match parts[1].split_once('~') {
            Some((e, valid)) => {
                let e = nums(e)?[0];
                let valid = nums(valid)?[0];
                if !e.is_power_of_two() || valid > e {
                    return cfg(format!("bad padded extent {e}~{valid}"));
                }
                VectorizedDim { dim, extent: e, stride, valid }
            }
            None => VectorizedDim::new(dim, nums(parts[1])?[0], stride),
        };
        vectorized.push(v);
    }
    let mut l = Layout { preprocess, exploded, vectorized };
    l.sort();
    Ok(l)
}

/// one `site = layout` line per site.
pub fn print_schedule(s: &Schedule) -> String {
    let mut out = String::new();
    for (id, l) in s {
        out.push_str(&format!("{id} = {l}\n"));
    }
    out
}

/// parse `site = layout` lines; blank lines and `#` comments are skipped.
pub fn parse_schedule(text: &str) -> Result<Schedule> {
    let mut s = Schedule::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let (id, l) = line.split_once('=').ok_or_else(|| Error::Config(format!("expected 'site = layout': {line}")))?;
        let id = id.trim().trim_start_matches('s');
        let id: usize = id.parse().map_err(|_| Error::Config(format!("bad site id '{id}'")))?;
        s.insert(id, parse_layout(l)?);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::index_free::to_index_free;
    use crate::lang::{check, parse};
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn initial_distance() {
        let p = to_index_free(&check(parse(&corpus::distance_fig(4)).unwrap()).unwrap()).unwrap();
        let s = initial_schedule(&p);
        assert_eq!(s.len(), 4);
        assert_eq!(s[&1].to_string(), "{i1_0:0:4:1, i1_1:1:4:1} []");
        assert_eq!(s[&0].exploded_names(), s[&1].exploded_names());
    }

    #[test]
    fn initial_scalar_and_conv() {
        assert_eq!(initial_layout("p_", &[]), Layout::empty());
        let p = to_index_free(&check(parse(&corpus::conv_siso(32)).unwrap()).unwrap()).unwrap();
        let s = initial_schedule(&p);
        assert_eq!(s[&0].exploded.len(), 4);
    }

    #[test]
    fn layout_text_roundtrip() {
        let l = Layout {
            preprocess: Preprocess::Roll(1, 0),
            exploded: vec![ExplodedDim { name: "i0_1".into(), dim: 1, extent: 4, stride: 1 }],
            vectorized: vec![VectorizedDim::new(0, 4, 1), VectorizedDim::new(2, 30, 2)],
        };
        let t = l.to_string();
        assert_eq!(t, "roll(1,0) {i0_1:1:4:1} [(0,4,1), (2,32~30,2)]");
        assert_eq!(parse_layout(&t).unwrap(), l);
        let s: Schedule = [(3, l.clone()), (5, Layout::empty())].into_iter().collect();
        assert_eq!(parse_schedule(&print_schedule(&s)).unwrap(), s);
    }

    #[test]
    fn tiling_count() {
        let l = parse_layout("{a_0:0:2:4} [(0,4,1)]").unwrap();
        assert_eq!(l.tilings(), 1);
        assert_eq!(l.block_size(), 4);
    }
}
