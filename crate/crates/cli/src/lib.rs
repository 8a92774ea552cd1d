//! command line front end: argument handling, json data files and the
//! `compile`, `run` and `emit` subcommands.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hec_core::circ::CostWeights;
use hec_core::driver::{compile, Artifacts, Dump, Options};
use hec_core::opt::OptLimits;
use hec_core::sched::{parse_schedule, SearchConfig};
use hec_core::sim::{emit_script, Binding, OpTrace};
use hec_core::Tensor;
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

#[derive(Parser, Debug)]
#[command(name = "hec", version, about = "vectorizing compiler for simd homomorphic encryption")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// compile a program and print its loop nest or the requested dumps
    Compile {
        #[command(flatten)]
        common: CompileArgs,
        /// print a stage: index-free, schedule, circuit, loopnest or vectors
        #[arg(long, value_parser = parse_dump)]
        dump: Vec<Dump>,
    },
    /// compile, simulate on json inputs and print the output and trace
    Run {
        #[command(flatten)]
        common: CompileArgs,
        /// json object mapping input names to nested integer arrays
        #[arg(long)]
        inputs: PathBuf,
    },
    /// compile and print a call-script against a bound api
    Emit {
        #[command(flatten)]
        common: CompileArgs,
        /// `key = value` lines mapping api names to target calls
        #[arg(long)]
        binding: PathBuf,
    },
}

#[derive(Args, Debug, Clone)]
pub struct CompileArgs {
    /// source program
    pub file: PathBuf,
    /// slots per vector, a power of two
    #[arg(long, default_value_t = 16, value_parser = parse_slots)]
    pub slots: usize,
    /// search epochs
    #[arg(long, default_value_t = 1)]
    pub epochs: usize,
    /// schedules evaluated per epoch
    #[arg(long, default_value_t = SearchConfig::default().max_states)]
    pub max_states: usize,
    /// 1 runs the rewriting optimizer, 0 skips it
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub opt: u8,
    /// optimizer budget as `nodes` or `nodes,seconds`
    #[arg(long, value_parser = parse_budget)]
    pub opt_budget: Option<(usize, Option<f64>)>,
    /// use this schedule instead of searching
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    /// cost weights as `key = value` lines
    #[arg(long)]
    pub weights: Option<PathBuf>,
}

fn parse_slots(s: &str) -> std::result::Result<usize, String> {
    let n: usize = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if n.is_power_of_two() {
        Ok(n)
    } else {
        Err(format!("{n} slots is not a power of two"))
    }
}

fn parse_dump(s: &str) -> std::result::Result<Dump, String> {
    Dump::parse(s).map_err(|e| e.to_string())
}

fn parse_budget(s: &str) -> std::result::Result<(usize, Option<f64>), String> {
    let bad = || format!("'{s}' is not `nodes` or `nodes,seconds`");
    let (n, t) = match s.split_once(',') {
        Some((n, t)) => (n, Some(t.trim().parse::<f64>().map_err(|_| bad())?)),
        None => (s, None),
    };
    Ok((n.trim().parse().map_err(|_| bad())?, t))
}

fn read(p: &PathBuf) -> Result<String> {
    std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))
}

impl CompileArgs {
    /// run the compiler with these flags.
    pub fn compile(&self) -> Result<Artifacts> {
        let src = read(&self.file)?;
        let weights = match &self.weights {
            Some(p) => CostWeights::parse(&read(p)?)?,
            None => CostWeights::default(),
        };
        let schedule = match &self.schedule {
            Some(p) => Some(parse_schedule(&read(p)?)?),
            None => None,
        };
        let mut limits = OptLimits::default();
        let deadline = self.opt_budget.and_then(|(_, t)| t).map(|t| (Instant::now(), Duration::from_secs_f64(t)));
        let stop = move || deadline.is_some_and(|(start, d)| start.elapsed() >= d);
        if let Some((nodes, _)) = self.opt_budget {
            limits.nodes = nodes;
        }
        limits.stop = Some(&stop);
        let opts = Options {
            search: SearchConfig { epochs: self.epochs, slots: self.slots, weights, max_states: self.max_states },
            opt: self.opt == 1,
            limits,
            schedule,
        };
        compile(&src, &opts).with_context(|| format!("compiling {}", self.file.display()))
    }
}

/// nested json arrays as a tensor; a number is a scalar.
pub fn tensor_from_json(v: &Value) -> Result<Tensor> {
    fn walk(v: &Value, depth: usize, shape: &mut Vec<usize>, data: &mut Vec<i64>) -> Result<()> {
        match v {
            Value::Number(n) => {
                if depth != shape.len() {
                    bail!("ragged array");
                }
                data.push(n.as_i64().with_context(|| format!("{n} is not an integer"))?);
            }
            Value::Array(xs) => {
                if depth == shape.len() {
                    if !data.is_empty() || xs.is_empty() {
                        bail!("ragged or empty array");
                    }
                    shape.push(xs.len());
                } else if depth > shape.len() || shape[depth] != xs.len() {
                    bail!("ragged array");
                }
                for x in xs {
                    walk(x, depth + 1, shape, data)?;
                }
            }
            _ => bail!("expected a number or an array"),
        }
        Ok(())
    }
    let (mut shape, mut data) = (Vec::new(), Vec::new());
    walk(v, 0, &mut shape, &mut data)?;
    Ok(Tensor::new(shape, data))
}

pub fn tensor_to_json(t: &Tensor) -> Value {
    fn nest(shape: &[usize], data: &[i64]) -> Value {
        match shape {
            [] => json!(data[0]),
            [n, rest @ ..] => {
                let step = data.len() / n;
                Value::Array((0..*n).map(|k| nest(rest, &data[k * step..(k + 1) * step])).collect())
            }
        }
    }
    nest(&t.shape, &t.data)
}

/// the input file: an object from input names to nested arrays.
pub fn parse_inputs(text: &str) -> Result<BTreeMap<String, Tensor>> {
    let v: Value = serde_json::from_str(text).context("inputs are not valid json")?;
    let Value::Object(m) = v else { bail!("inputs must be a json object") };
    m.iter().map(|(k, v)| Ok((k.clone(), tensor_from_json(v).with_context(|| format!("input '{k}'"))?))).collect()
}

pub fn trace_to_json(t: &OpTrace) -> Value {
    Value::Object(t.fields().into_iter().map(|(k, v)| (k.to_string(), json!(v))).collect::<Map<_, _>>())
}

/// execute a parsed command line and return what it prints.
pub fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Compile { common, dump } => {
            let a = common.compile()?;
            if dump.is_empty() {
                return Ok(a.dump(Dump::Loopnest));
            }
            let mut out = String::new();
            for d in dump {
                if dump.len() > 1 {
                    out.push_str(&format!("# {}\n", d.name()));
                }
                out.push_str(&a.dump(*d));
            }
            Ok(out)
        }
        Command::Run { common, inputs } => {
            let a = common.compile()?;
            let inputs = parse_inputs(&read(inputs)?)?;
            let (t, trace) = a.run(&inputs)?;
            let v = json!({ "output": tensor_to_json(&t), "trace": trace_to_json(&trace) });
            Ok(format!("{}\n", serde_json::to_string_pretty(&v)?))
        }
        Command::Emit { common, binding } => {
            let a = common.compile()?;
            let b = Binding::parse(&read(binding)?)?;
            Ok(emit_script(&a.loopnest, &b)?)
        }
    }
}
