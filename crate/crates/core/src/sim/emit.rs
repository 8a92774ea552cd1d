//! textual call-scripts against an abstract homomorphic API.

use crate::error::{Error, Result};
use crate::lnest::{Con, IType, LExpr, LoopNest, Stmt, ValType};
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

/// abstract operations a script may call.
pub const API: [&str; 8] = ["make_vector", "encode", "encrypt", "add", "sub", "mul", "rotate", "decrypt"];

/// map from abstract api names to target call syntax.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Binding(pub BTreeMap<String, String>);

impl Binding {
    /// read `key = value` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Binding> {
        let mut m = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config(format!("binding line {}: expected key = value", n + 1)))?;
            m.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Binding(m))
    }

    /// every api name bound to itself.
    pub fn identity() -> Binding {
        Binding(API.iter().map(|k| (k.to_string(), k.to_string())).collect())
    }

    fn get(&self, k: &str) -> Result<&str> {
        self.0.get(k).map(String::as_str).ok_or_else(|| Error::Config(format!("unbound api name '{k}'")))
    }
}

struct Emitter<'a> {
    b: &'a Binding,
    out: String,
}

fn expr(e: &LExpr) -> String {
    match e {
        LExpr::Op(op, a, b) => format!("({} {} {})", expr(a), op.symbol(), expr(b)),
        e => e.to_string(),
    }
}

impl Emitter<'_> {
    fn line(&mut self, depth: usize, s: &str) {
        let _ = writeln!(self.out, "{}{s}", "    ".repeat(depth + 1));
    }

    fn stmts(&mut self, body: &[Stmt], depth: usize) -> Result<()> {
        for s in body {
            match s {
                Stmt::Val { name, ty, con } => {
                    let arg = match con {
                        Con::Vector(_) => format!("inputs, \"{con}\""),
                        _ => format!("\"{con}\""),
                    };
                    let mut v = format!("{}({arg})", self.b.get("make_vector")?);
                    if *ty != ValType::N {
                        v = format!("{}({v})", self.b.get("encode")?);
                    }
                    if *ty == ValType::C {
                        v = format!("{}({v})", self.b.get("encrypt")?);
                    }
                    self.line(depth, &format!("{name} = {v}"));
                }
                Stmt::Var { name, extents, init, .. } => {
                    let dims: Vec<String> = extents.iter().map(|e| e.to_string()).collect();
                    self.line(depth, &format!("{name} = array({init}, [{}])", dims.join(", ")));
                }
                Stmt::Instr { id, op, it, a, b, inplace } => {
                    if *it == IType::N {
                        self.line(depth, &format!("instr{id} = [x {} y for x, y in zip({a}, {b})]", op.symbol()));
                        continue;
                    }
                    let f = self.b.get(op.name())?.to_string();
                    let ip = format!("{}_inplace", op.name());
                    match self.b.0.get(&ip) {
                        Some(g) if *inplace => {
                            self.line(depth, &format!("{g}({a}, {b})"));
                            self.line(depth, &format!("instr{id} = {a}"));
                        }
                        _ => self.line(depth, &format!("instr{id} = {f}({a}, {b})")),
                    }
                }
                Stmt::Rot { id, it, amount, a, inplace } => {
                    if *it == IType::N {
                        self.line(depth, &format!("instr{id} = roll({a}, {})", expr(amount)));
                        continue;
                    }
                    let f = self.b.get("rotate")?.to_string();
                    match self.b.0.get("rotate_inplace") {
                        Some(g) if *inplace => {
                            self.line(depth, &format!("{g}({a}, {})", expr(amount)));
                            self.line(depth, &format!("instr{id} = {a}"));
                        }
                        _ => self.line(depth, &format!("instr{id} = {f}({a}, {})", expr(amount))),
                    }
                }
                Stmt::Assign { target, value } => self.line(depth, &format!("{target} = {}", expr(value))),
                Stmt::Encode(a) => {
                    let f = self.b.get("encode")?.to_string();
                    self.line(depth, &format!("{a} = {f}({a})"));
                }
                Stmt::For { dim, extent, body } => {
                    self.line(depth, &format!("for {dim} in range({extent}):"));
                    if body.is_empty() {
                        self.line(depth + 1, "pass");
                    }
                    self.stmts(body, depth + 1)?;
                }
            }
        }
        Ok(())
    }
}

const HEADER: &str = "# generated call-script; unset array entries act as the identity of\n\
# the first operation applied to them\n\
def array(init, extents):\n    \
if not extents:\n        return None\n    \
return [array(init, extents[1:]) for _ in range(extents[0])]\n\n\
def roll(x, k):\n    \
k %= len(x)\n    \
return x[len(x) - k:] + x[:len(x) - k]\n\n\
def flatten(x, f):\n    \
return [flatten(y, f) for y in x] if isinstance(x, list) else f(x)\n\n\
def server(inputs):\n";

/// render `p` as a script whose api calls go through `binding`.
pub fn emit_script(p: &LoopNest, binding: &Binding) -> Result<String> {
    let mut e = Emitter { b: binding, out: String::from(HEADER) };
    e.stmts(&p.body, 0)?;
    if p.body.is_empty() {
        e.line(0, "return None");
    } else {
        e.line(0, &format!("return {}", p.output));
        let d = binding.get("decrypt")?;
        let _ = write!(e.out, "\n\ndef client(result):\n    return flatten(result, {d})\n");
    }
    Ok(e.out)
}
