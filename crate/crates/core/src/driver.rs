//! the whole pipeline behind one call, with textual dumps of each stage.

use crate::circ::{cgen, cost, CircuitProgram, Compiled, CostValue, Registry};
use crate::error::{Error, Result};
use crate::index_free::{to_index_free, IndexFreeProgram};
use crate::lang::{check, interpret, parse, ShapedProgram};
use crate::lnest::{lower, mark_inplace, value_number, walk, Con, LoopNest, Stmt};
use crate::opt::{hoist_plaintexts, optimize, OptLimits, OptStats};
use crate::sched::{print_schedule, search, Schedule, SearchConfig};
use crate::sim::{decode_output, simulate, OpTrace};
use crate::tensor::Tensor;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;

/// compiler settings.
#[derive(Clone, Default)]
pub struct Options<'a> {
    pub search: SearchConfig,
    /// run the rewriting optimizer.
    pub opt: bool,
    pub limits: OptLimits<'a>,
    /// skip the search and use this schedule.
    pub schedule: Option<Schedule>,
}

impl Options<'_> {
    pub fn slots(slots: usize) -> Self {
        Options { search: SearchConfig { slots, ..SearchConfig::default() }, opt: true, ..Options::default() }
    }
}

/// every stage's result for one program.
#[derive(Clone, Debug)]
pub struct Artifacts {
    pub source: ShapedProgram,
    pub index_free: IndexFreeProgram,
    pub schedule: Schedule,
    /// the generated circuit before optimization.
    pub generated: Compiled,
    /// the final circuit after optimization and hoisting.
    pub program: CircuitProgram,
    pub registry: Registry,
    pub cost: CostValue,
    pub opt_stats: Option<OptStats>,
    /// schedules the search evaluated; zero when one was given.
    pub explored: usize,
    pub loopnest: LoopNest,
}

/// stages that can be printed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dump {
    IndexFree,
    Schedule,
    Circuit,
    Loopnest,
    Vectors,
}

impl Dump {
    pub fn parse(s: &str) -> Result<Dump> {
        Ok(match s {
            "index-free" => Dump::IndexFree,
            "schedule" => Dump::Schedule,
            "circuit" => Dump::Circuit,
            "loopnest" => Dump::Loopnest,
            "vectors" => Dump::Vectors,
            _ => return Err(Error::Config(format!("unknown dump '{s}'"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Dump::IndexFree => "index-free",
            Dump::Schedule => "schedule",
            Dump::Circuit => "circuit",
            Dump::Loopnest => "loopnest",
            Dump::Vectors => "vectors",
        }
    }
}

/// parse, check, schedule, generate, optimize and lower `src`.
pub fn compile(src: &str, o: &Options) -> Result<Artifacts> {
    let source = check(parse(src)?)?;
    let index_free = to_index_free(&source)?;
    let slots = o.search.slots;
    if !slots.is_power_of_two() {
        return Err(Error::Config(format!("{slots} slots is not a power of two")));
    }
    let (generated, explored) = match &o.schedule {
        Some(s) => (cgen(&index_free, s, slots)?, 0),
        None => {
            let r = search(&index_free, &o.search)?;
            (r.compiled, r.explored)
        }
    };
    let w = &o.search.weights;
    let (program, opt_stats) = if o.opt {
        let (p, st) = optimize(&generated.program, &generated.registry, w, &o.limits);
        (p, Some(st))
    } else {
        (generated.program.clone(), None)
    };
    let (program, registry) = hoist_plaintexts(&program, &generated.registry);
    let cost = cost(&program, &registry, w);
    let mut loopnest = value_number(&lower(&program, &registry)?);
    mark_inplace(&mut loopnest);
    Ok(Artifacts { source, index_free, schedule: generated.schedule.clone(), generated, program, registry, cost, opt_stats, explored, loopnest })
}

impl Artifacts {
    /// simulate on `inputs` and decode the result array.
    pub fn run(&self, inputs: &BTreeMap<String, Tensor>) -> Result<(Tensor, OpTrace)> {
        self.run_with(inputs, self.generated.slots)
    }

    /// as [`Artifacts::run`] on vectors of a different slot count.
    pub fn run_with(&self, inputs: &BTreeMap<String, Tensor>, slots: usize) -> Result<(Tensor, OpTrace)> {
        for i in self.source.program.inputs() {
            match inputs.get(&i.name) {
                None => return Err(Error::Input(format!("missing input '{}'", i.name))),
                Some(t) if t.shape != i.shape => {
                    return Err(Error::Input(format!("input '{}' has shape {:?}, expected {:?}", i.name, t.shape, i.shape)))
                }
                _ => {}
            }
        }
        let out = simulate(&self.loopnest, inputs, slots)?;
        let t = decode_output(&out.vectors, &self.generated.out_layout, &self.generated.out_shape)?;
        Ok((t, out.trace))
    }

    /// the source program's own result, for comparison.
    pub fn reference(&self, inputs: &BTreeMap<String, Tensor>) -> Result<Tensor> {
        interpret(&self.source, inputs)
    }

    pub fn dump(&self, d: Dump) -> String {
        match d {
            Dump::IndexFree => format!("{}", self.index_free),
            Dump::Schedule => print_schedule(&self.schedule),
            Dump::Circuit => format!("{}{}", self.program, self.registry),
            Dump::Loopnest => format!("{}", self.loopnest),
            Dump::Vectors => {
                let mut s = String::new();
                walk(&self.loopnest.body, &mut |st| {
                    if let Stmt::Val { name, ty, con: c @ Con::Vector(_) } = st {
                        s.push_str(&format!("{name}: {ty} = {c}\n"));
                    }
                });
                s
            }
        }
    }
}
