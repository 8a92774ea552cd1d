//! circuit rewriting by equality saturation and plaintext hoisting.

mod egraph;
mod hoist;

pub use hoist::{hoist_plaintexts, plain_pairs};

use crate::circ::{cost, Circuit, CircuitProgram, CostWeights, NodeId, Registry};
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use crate::circ::Node;
use egraph::{EGraph, Id};

/// budgets for equality saturation.
#[derive(Clone, Copy)]
pub struct OptLimits<'a> {
    /// stop growing the e-graph past this many e-nodes.
    pub nodes: usize,
    pub iterations: usize,
    /// polled between iterations; true ends saturation early.
    pub stop: Option<&'a dyn Fn() -> bool>,
}

impl Default for OptLimits<'_> {
    fn default() -> Self {
        OptLimits { nodes: 500, iterations: 30, stop: None }
    }
}

/// what a saturation run did.
#[derive(Clone, Debug, PartialEq)]
pub struct OptStats {
    pub nodes: usize,
    pub iterations: usize,
    pub saturated: bool,
    pub before: f64,
    pub after: f64,
}

fn build(g: &EGraph, best: &BTreeMap<Id, Node>, c: Id, out: &mut Circuit, done: &mut BTreeMap<Id, NodeId>, open: &mut BTreeSet<Id>) -> Option<NodeId> {
    let c = g.find(c);
    if let Some(&n) = done.get(&c) {
        return Some(n);
    }
    if !open.insert(c) {
        return None;
    }
    let mut node = best.get(&c)?.clone();
    match &mut node {
        crate::circ::Node::Op(_, a, b) => {
            *a = build(g, best, *a, out, done, open)?;
            *b = build(g, best, *b, out, done, open)?;
        }
        crate::circ::Node::Rot(_, a) | crate::circ::Node::ReduceDim(_, _, _, a) => {
            *a = build(g, best, *a, out, done, open)?;
        }
        _ => {}
    }
    open.remove(&c);
    let id = out.add(node);
    done.insert(c, id);
    Some(id)
}

/// rewrite with the circuit identities and extract a cheaper equivalent;
/// the result never costs more than the input.
pub fn optimize(p: &CircuitProgram, reg: &Registry, w: &CostWeights, limits: &OptLimits) -> (CircuitProgram, OptStats) {
    let mut g = EGraph::new(reg);
    let mut map: BTreeMap<NodeId, Id> = BTreeMap::new();
    let mut roots = Vec::new();
    for l in &p.lets {
        for n in p.circuit.topo(l.root) {
            if map.contains_key(&n) {
                continue;
            }
            let mut node = p.circuit.node(n).clone();
            match &mut node {
                crate::circ::Node::Op(_, a, b) => {
                    *a = map[a];
                    *b = map[b];
                }
                crate::circ::Node::Rot(_, a) | crate::circ::Node::ReduceDim(_, _, _, a) => *a = map[a],
                _ => {}
            }
            let id = g.add(node);
            map.insert(n, id);
        }
        roots.push(map[&l.root]);
    }
    let mut iterations = 0;
    let mut saturated = false;
    while iterations < limits.iterations && g.size() < limits.nodes {
        if limits.stop.is_some_and(|f| f()) {
            break;
        }
        iterations += 1;
        g.analyze();
        let mut changed = false;
        for (c, t) in g.matches() {
            if g.size() >= limits.nodes {
                break;
            }
            let id = g.add_term(&t);
            changed |= g.union(c, id);
        }
        g.rebuild();
        if !changed {
            saturated = true;
            break;
        }
    }
    let before = cost(p, reg, w).total;
    let mut stats = OptStats { nodes: g.size(), iterations, saturated, before, after: before };
    let greedy: BTreeMap<Id, Node> = g.extract(w).into_iter().map(|(c, b)| (c, b.node)).collect();
    // the input's own choices, completed by the greedy ones
    let mut own = greedy.clone();
    for (&n, &c) in &map {
        let mut node = p.circuit.node(n).clone();
        match &mut node {
            Node::Op(_, a, b) => {
                *a = map[a];
                *b = map[b];
            }
            Node::Rot(_, a) | Node::ReduceDim(_, _, _, a) => *a = map[a],
            _ => {}
        }
        own.insert(g.find(c), node);
    }
    let mut best: Option<(CircuitProgram, f64)> = None;
    for start in [greedy, own] {
        if let Some((q, c)) = climb(&g, start, &roots, p, reg, w, limits) {
            if best.as_ref().is_none_or(|b| c < b.1) {
                best = Some((q, c));
            }
        }
    }
    match best {
        Some((q, after)) if after < before => {
            stats.after = after;
            (q, stats)
        }
        _ => (p.clone(), stats),
    }
}

/// the program a choice of one node per class denotes, with the classes it
/// reaches; `None` when the choice is cyclic.
fn realize(g: &EGraph, sel: &BTreeMap<Id, Node>, roots: &[Id], p: &CircuitProgram) -> Option<(CircuitProgram, Vec<Id>)> {
    let mut out = CircuitProgram { circuit: Circuit::new(), lets: p.lets.clone() };
    let mut done = BTreeMap::new();
    for (l, &r) in out.lets.iter_mut().zip(roots) {
        l.root = build(g, sel, r, &mut out.circuit, &mut done, &mut BTreeSet::new())?;
    }
    Some((out, done.into_keys().collect()))
}

/// change one class's node at a time while the real cost, which counts
/// shared subcircuits once, strictly drops.
fn climb(g: &EGraph, mut sel: BTreeMap<Id, Node>, roots: &[Id], p: &CircuitProgram, reg: &Registry, w: &CostWeights, limits: &OptLimits) -> Option<(CircuitProgram, f64)> {
    const TRIALS: usize = 20_000;
    let (mut prog, mut reach) = realize(g, &sel, roots, p)?;
    let mut cur = cost(&prog, reg, w).total;
    let mut trials = 0;
    'outer: loop {
        for &c in &reach {
            for n in g.nodes(c) {
                if sel.get(&c) == Some(n) {
                    continue;
                }
                trials += 1;
                if trials > TRIALS || (trials % 256 == 0 && limits.stop.is_some_and(|f| f())) {
                    break 'outer;
                }
                let old = sel.insert(c, n.clone());
                match realize(g, &sel, roots, p) {
                    Some((q, r)) if cost(&q, reg, w).total < cur => {
                        cur = cost(&q, reg, w).total;
                        prog = q;
                        reach = r;
                        continue 'outer;
                    }
                    _ => {
                        if let Some(o) = old {
                            sel.insert(c, o);
                        }
                    }
                }
            }
        }
        break;
    }
    Some((prog, cur))
}
