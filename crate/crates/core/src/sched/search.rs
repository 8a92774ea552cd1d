use super::layout::{initial_layout, Layout, Schedule};
use super::transform::{neighbors, SiteView};
use crate::circ::{cgen_cached, cost, CostValue, CostWeights, MatCache};
use crate::circ::Compiled;
use crate::error::{invalid, Result};
use crate::index_free::{regions, IndexFreeProgram};
use alloc::collections::{BTreeMap, BTreeSet, BinaryHeap};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

/// knobs of the schedule search.
#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub epochs: usize,
    pub slots: usize,
    pub weights: CostWeights,
    /// schedules evaluated per epoch before the search stops expanding.
    pub max_states: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { epochs: 1, slots: 16, weights: CostWeights::default(), max_states: 5000 }
    }
}

/// the best schedule found with its circuit and cost.
#[derive(Clone, Debug)]
pub struct SearchResult {
    pub schedule: Schedule,
    pub compiled: Compiled,
    pub cost: CostValue,
    /// distinct schedules evaluated over all epochs.
    pub explored: usize,
}

/// total order on (cost, exploded dims, serialization).
#[derive(Clone, Debug, PartialEq)]
struct Rank(f64, usize, String);

impl Eq for Rank {}

impl PartialOrd for Rank {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Rank {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.total_cmp(&o.0).then(self.1.cmp(&o.1)).then_with(|| self.2.cmp(&o.2))
    }
}

struct Space<'a> {
    p: &'a IndexFreeProgram,
    /// sites of each searched region.
    free: Vec<Vec<usize>>,
    views: Vec<Vec<SiteView<'a>>>,
}

impl Space<'_> {
    fn schedule(&self, state: &[Layout]) -> Schedule {
        let mut s = Schedule::new();
        for (sites, l) in self.free.iter().zip(state) {
            for &id in sites {
                s.insert(id, l.clone());
            }
        }
        s
    }
}

fn key(state: &[Layout]) -> String {
    let mut k = String::new();
    for l in state {
        k.push_str(&format!("{l};"));
    }
    k
}

fn exploded(state: &[Layout]) -> usize {
    state.iter().map(|l| l.exploded.len()).sum()
}

/// search for the cheapest valid schedule. each epoch explores the product
/// of per-region layouts reachable by the transformers, best first; regions
/// fed by reductions take the layout their reductions produce.
pub fn search(p: &IndexFreeProgram, cfg: &SearchConfig) -> Result<SearchResult> {
    if cfg.epochs == 0 {
        return invalid("at least one epoch is required");
    }
    let sites: BTreeMap<usize, &crate::index_free::ArrayTraversal> = p.sites().into_iter().collect();
    let mut space = Space { p, free: Vec::new(), views: Vec::new() };
    let mut init = Vec::new();
    for (r, reg) in regions(p).iter().enumerate() {
        if reg.reduce_leaves > 0 || reg.sites.is_empty() {
            continue;
        }
        let views: Vec<SiteView> =
            reg.sites.iter().map(|id| SiteView { traversal: sites[id], array_shape: p.array_shape(&sites[id].array) }).collect();
        init.push(initial_layout(&format!("i{r}_"), &views[0].traversal.extents()));
        space.free.push(reg.sites.clone());
        space.views.push(views);
    }
    let mut cache = MatCache::new();
    let mut evals: BTreeMap<String, Option<f64>> = BTreeMap::new();
    let mut eval = |state: &[Layout], cache: &mut MatCache| -> Option<f64> {
        let k = key(state);
        if let Some(v) = evals.get(&k) {
            return *v;
        }
        let v = cgen_cached(space.p, &space.schedule(state), cfg.slots, cache).ok().map(|c| cost(&c.program, &c.registry, &cfg.weights).total);
        evals.insert(k, v);
        v
    };
    let mut best: Option<(Rank, Vec<Layout>)> = None;
    for epoch in 1..=cfg.epochs {
        let mut seen = BTreeSet::new();
        let mut heap = BinaryHeap::new();
        let mut count = 0;
        seen.insert(key(&init));
        heap.push(Reverse((Rank(f64::INFINITY, 0, String::new()), init.clone())));
        while let Some(Reverse((_, state))) = heap.pop() {
            let here = eval(&state, &mut cache);
            count += 1;
            if let Some(c) = here {
                let rank = Rank(c, exploded(&state), key(&state));
                if best.as_ref().is_none_or(|(b, _)| rank < *b) {
                    best = Some((rank, state.clone()));
                }
            }
            if count >= cfg.max_states {
                break;
            }
            for r in 0..state.len() {
                for l in neighbors(&state[r], &space.views[r], epoch, cfg.slots) {
                    let mut next = state.clone();
                    next[r] = l;
                    let k = key(&next);
                    if seen.insert(k.clone()) {
                        // children are ordered by their parent's cost
                        let prio = here.unwrap_or(f64::INFINITY);
                        heap.push(Reverse((Rank(prio, exploded(&next), k), next)));
                    }
                }
            }
        }
    }
    let explored = evals.len();
    let (_, state) = best.ok_or_else(|| crate::error::Error::Invalid(String::from("no valid schedule found")))?;
    let schedule = space.schedule(&state);
    let compiled = cgen_cached(p, &schedule, cfg.slots, &mut cache)?;
    let cost = cost(&compiled.program, &compiled.registry, &cfg.weights);
    Ok(SearchResult { schedule: compiled.schedule.clone(), compiled, cost, explored })
}
