use super::layout::{canonical_name, prefix_of, ExplodedDim, Layout, Preprocess, VectorizedDim};
use crate::error::{invalid, Result};
use crate::index_free::ArrayTraversal;
use alloc::format;
use alloc::vec::Vec;

/// what transformers need to know about one site of a region.
#[derive(Clone, Copy, Debug)]
pub struct SiteView<'a> {
    pub traversal: &'a ArrayTraversal,
    pub array_shape: &'a [usize],
}

fn roll_dims(l: &Layout) -> Option<(usize, usize)> {
    match l.preprocess {
        Preprocess::Roll(a, b) => Some((a, b)),
        Preprocess::Identity => None,
    }
}

/// move an exploded dim to the innermost vectorized position.
pub fn vectorize_dim(l: &Layout, name: &str, slots: usize) -> Result<Layout> {
    let k = match l.exploded.iter().position(|e| e.name == name) {
        Some(k) => k,
        None => return invalid(format!("no exploded dim '{name}'")),
    };
    if roll_dims(l).is_some_and(|(a, _)| a == l.exploded[k].dim) {
        return invalid("cannot vectorize the rolled dim");
    }
    let mut out = l.clone();
    let e = out.exploded.remove(k);
    out.vectorized.push(VectorizedDim::new(e.dim, e.extent, e.stride));
    if out.block_size() > slots {
        return invalid(format!("vector block {} exceeds {slots} slots", out.block_size()));
    }
    Ok(out)
}

/// split an exploded dim into an inner piece of extent `tile` and an outer piece.
pub fn tile_dim(l: &Layout, name: &str, tile: usize) -> Result<Layout> {
    let k = match l.exploded.iter().position(|e| e.name == name) {
        Some(k) => k,
        None => return invalid(format!("no exploded dim '{name}'")),
    };
    let e = l.exploded[k].clone();
    if tile <= 1 || tile >= e.extent || !e.extent.is_multiple_of(tile) {
        return invalid(format!("tile {tile} does not properly divide extent {}", e.extent));
    }
    if roll_dims(l).is_some_and(|(a, b)| a == e.dim || b == e.dim) {
        return invalid("cannot tile a rolled dim");
    }
    let prefix = prefix_of(&e.name);
    let mut out = l.clone();
    out.exploded.remove(k);
    out.exploded.push(ExplodedDim { name: canonical_name(prefix, e.dim, e.stride), dim: e.dim, extent: tile, stride: e.stride });
    let outer = e.stride * tile;
    out.exploded.push(ExplodedDim { name: canonical_name(prefix, e.dim, outer), dim: e.dim, extent: e.extent / tile, stride: outer });
    out.sort();
    Ok(out)
}

fn roll_ok(l: &Layout, a: usize, sites: &[SiteView]) -> Result<()> {
    let b = match l.vectorized.first() {
        Some(b) => *b,
        None => return invalid("roll needs a vectorized dim"),
    };
    let ea = match l.exploded.iter().find(|e| e.dim == a) {
        Some(e) => e,
        None => return invalid("roll needs an exploded dim"),
    };
    if a == b.dim {
        return invalid("roll dims must differ");
    }
    if ea.extent != b.extent || b.valid != b.extent {
        return invalid("roll dims need equal unpadded extents");
    }
    if l.pieces(a) != 1 || l.pieces(b.dim) != 1 || ea.stride != 1 || b.stride != 1 {
        return invalid("roll dims must not be tiled");
    }
    let n = ea.extent;
    for s in sites {
        let t = s.traversal;
        if t.dims[a].extent != n || t.dims[b.dim].extent != n {
            return invalid("roll dims must cover whole traversal dims");
        }
        let ca = &t.dims[a].content;
        let cb = &t.dims[b.dim].content;
        if ca.len() > 1 || cb.len() > 1 {
            return invalid("roll dims need at most one content dim");
        }
        let mut touched = Vec::new();
        for c in ca.iter().chain(cb.iter()) {
            if c.stride != 1 || s.array_shape[c.dim] != n {
                return invalid("roll content dims need unit stride and matching extent");
            }
            if t.offsets[c.dim] != 0 {
                return invalid("roll content dims need zero offsets");
            }
            touched.push(c.dim);
        }
        if touched.len() == 2 && touched[0] == touched[1] {
            return invalid("roll dims traverse the same array dim");
        }
        for (d, td) in t.dims.iter().enumerate() {
            if d != a && d != b.dim && td.content.iter().any(|c| touched.contains(&c.dim)) {
                return invalid("roll array dims are traversed elsewhere");
            }
        }
    }
    Ok(())
}

/// roll exploded dim `a` along the outermost vectorized dim.
pub fn apply_roll(l: &Layout, a: usize, sites: &[SiteView]) -> Result<Layout> {
    if l.preprocess != Preprocess::Identity {
        return invalid("layout already has a preprocess");
    }
    roll_ok(l, a, sites)?;
    let mut out = l.clone();
    out.preprocess = Preprocess::Roll(a, l.vectorized[0].dim);
    Ok(out)
}

/// every applicable roll of the layout.
pub fn roll_candidates(l: &Layout, sites: &[SiteView]) -> Vec<Layout> {
    l.exploded.iter().filter_map(|e| apply_roll(l, e.dim, sites).ok()).collect()
}

/// single-transformer moves from a region layout; tiling is enabled from
/// epoch 2 with at most `epoch - 1` tilings and power-of-two tiles.
pub fn neighbors(l: &Layout, sites: &[SiteView], epoch: usize, slots: usize) -> Vec<Layout> {
    let mut out = Vec::new();
    for e in &l.exploded {
        if let Ok(v) = vectorize_dim(l, &e.name, slots) {
            out.push(v);
        }
    }
    if epoch >= 2 && l.tilings() < epoch - 1 {
        for e in &l.exploded {
            let mut t = 2;
            while t < e.extent {
                if e.extent % t == 0 {
                    if let Ok(v) = tile_dim(l, &e.name, t) {
                        out.push(v);
                    }
                }
                t *= 2;
            }
        }
    }
    out.extend(roll_candidates(l, sites));
    out
}
