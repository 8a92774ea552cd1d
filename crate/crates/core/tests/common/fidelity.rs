//! element-fidelity oracle for materialized input sites: every slot of
//! every vector must hold the element the traversal, preprocess and layout
//! select, recomputed here from their definitions.

use hec_core::circ::{eval_program, Circuit, CircLet, CircuitProgram, Registry};
use hec_core::index_free::{to_index_free, ArrayTraversal};
use hec_core::lang::{check, parse};
use hec_core::materialize::materialize_input;
use hec_core::sched::{initial_layout, neighbors, Layout, Preprocess, SiteView};
use hec_core::tensor::{positions, Tensor};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// element value at array index `idx`: its row-major rank plus one, or 0
/// out of bounds.
fn element(shape: &[usize], idx: &[i64]) -> i64 {
    let mut o = 0i64;
    for (&i, &n) in idx.iter().zip(shape) {
        if i < 0 || i >= n as i64 {
            return 0;
        }
        o = o * n as i64 + i;
    }
    o + 1
}

/// expected block of the vector at exploded coordinate `coord`.
pub fn expected_block(t: &ArrayTraversal, shape: &[usize], l: &Layout, coord: &[usize]) -> Vec<i64> {
    let padded: Vec<usize> = l.vectorized.iter().map(|v| v.extent).collect();
    positions(&padded)
        .map(|p| {
            let mut pos = vec![0usize; t.dims.len()];
            for (e, &c) in l.exploded.iter().zip(coord) {
                pos[e.dim] += c * e.stride;
            }
            for (v, &pk) in l.vectorized.iter().zip(&p) {
                if pk >= v.valid {
                    return 0;
                }
                pos[v.dim] += pk * v.stride;
            }
            if let Preprocess::Roll(a, b) = l.preprocess {
                pos[a] = (pos[a] + pos[b]) % t.dims[a].extent;
            }
            let mut idx = t.offsets.clone();
            for (d, &x) in t.dims.iter().zip(&pos) {
                for c in &d.content {
                    idx[c.dim] += c.stride * x as i64;
                }
            }
            element(shape, &idx)
        })
        .collect()
}

/// simulate the materialized site and compare every slot of every vector.
pub fn check_site(t: &ArrayTraversal, shape: &[usize], l: &Layout, cipher: bool) -> Result<usize, String> {
    let f = materialize_input(shape, cipher, t, l);
    let mut reg = Registry::default();
    for (n, k, m) in f.vars {
        reg.insert(k, n, m);
    }
    for (n, m) in f.offsets {
        reg.offsets.insert(n, m);
    }
    let mut circuit = Circuit::new();
    let root = circuit.insert_tree(&f.expr);
    let dims: Vec<(String, usize)> = l.exploded_names().into_iter().zip(l.exploded_extents()).collect();
    let prog = CircuitProgram { circuit, lets: vec![CircLet { name: "out".into(), dims, root, native: false }] };
    let block = l.block_size().max(1);
    let n: usize = shape.iter().product();
    let data = Tensor::new(shape.to_vec(), (1..=n as i64).collect());
    let inputs: BTreeMap<String, Tensor> = [(t.array.clone(), data)].into();
    let vals = eval_program(&prog, &reg, &inputs, block).map_err(|e| format!("{t} under {l}: {e}"))?;
    let mut checked = 0;
    for c in positions(&l.exploded_extents()) {
        let want = expected_block(t, shape, l, &c);
        let got = &vals["out"][&c];
        if *got != want {
            return Err(format!("{t} under {l} at {c:?}: got {got:?}, want {want:?}"));
        }
        checked += want.len();
    }
    Ok(checked)
}

/// layouts reachable from the initial one by the transformers, tiling
/// included, with blocks of at most `slots`.
pub fn reachable_layouts(t: &ArrayTraversal, shape: &[usize], slots: usize, cap: usize) -> Vec<Layout> {
    let view = [SiteView { traversal: t, array_shape: shape }];
    let start = initial_layout("f_", &t.extents());
    let mut seen = BTreeSet::from([start.to_string()]);
    let mut queue = VecDeque::from([start]);
    let mut out = Vec::new();
    while let Some(l) = queue.pop_front() {
        for m in neighbors(&l, &view, 3, slots) {
            if seen.insert(m.to_string()) && seen.len() <= cap {
                queue.push_back(m);
            }
        }
        out.push(l);
    }
    out
}

/// input traversals of the given programs with at most `max` positions.
pub fn corpus_sites(programs: &[(&str, String)], max: usize) -> Vec<(ArrayTraversal, Vec<usize>)> {
    let mut out: Vec<(ArrayTraversal, Vec<usize>)> = Vec::new();
    for (_, src) in programs {
        let p = to_index_free(&check(parse(src).unwrap()).unwrap()).unwrap();
        for (_, t) in p.sites() {
            if p.is_input(&t.array) && t.extents().iter().product::<usize>() <= max {
                let s = (t.clone(), p.array_shape(&t.array).to_vec());
                if !out.contains(&s) {
                    out.push(s);
                }
            }
        }
    }
    out
}

/// check every pair; returns (pairs, slots checked).
pub fn check_all(programs: &[(&str, String)]) -> Result<(usize, usize), String> {
    let (mut pairs, mut slots) = (0, 0);
    for (t, shape) in corpus_sites(programs, 256) {
        for l in reachable_layouts(&t, &shape, 256, 2000) {
            for cipher in [true, false] {
                slots += check_site(&t, &shape, &l, cipher)?;
                pairs += 1;
            }
        }
    }
    Ok((pairs, slots))
}
