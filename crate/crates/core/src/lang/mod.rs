//! source language: ast, parser, shape checker and reference interpreter.

mod check;
mod interp;
mod parse;

pub use check::{check, infer_shape, ArrayInfo, ShapedProgram};
pub use interp::{interpret, parse_and_run};
pub use parse::{parse, parse_affine};

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// element-wise binary operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
}

impl BinOp {
    /// exact integer semantics shared by the interpreter and the simulator.
    pub fn apply(self, a: i64, b: i64) -> i64 {
        match self {
            BinOp::Add => a.wrapping_add(b),
            BinOp::Sub => a.wrapping_sub(b),
            BinOp::Mul => a.wrapping_mul(b),
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BinOp::Add => "add",
            BinOp::Sub => "sub",
            BinOp::Mul => "mul",
        }
    }

    /// neutral element of a reduction operator.
    pub fn identity(self) -> i64 {
        match self {
            BinOp::Mul => 1,
            _ => 0,
        }
    }

    pub fn commutative(self) -> bool {
        !matches!(self, BinOp::Sub)
    }
}

/// which party supplies an input array.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Party {
    Client,
    Server,
}

/// affine index: constant plus integer multiples of index variables.
/// zero coefficients are never stored, so equal affines compare equal.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Affine {
    pub constant: i64,
    pub coeffs: BTreeMap<String, i64>,
}

impl Affine {
    pub fn constant(c: i64) -> Self {
        Affine { constant: c, coeffs: BTreeMap::new() }
    }

    pub fn var(v: &str) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(String::from(v), 1);
        Affine { constant: 0, coeffs }
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, v: &str) -> i64 {
        self.coeffs.get(v).copied().unwrap_or(0)
    }

    pub fn add(&self, o: &Affine) -> Affine {
        let mut r = self.clone();
        r.constant += o.constant;
        for (v, c) in &o.coeffs {
            *r.coeffs.entry(v.clone()).or_insert(0) += c;
        }
        r.coeffs.retain(|_, c| *c != 0);
        r
    }

    pub fn scale(&self, k: i64) -> Affine {
        let mut r = Affine::constant(self.constant * k);
        if k != 0 {
            for (v, c) in &self.coeffs {
                r.coeffs.insert(v.clone(), c * k);
            }
        }
        r
    }

    pub fn eval(&self, lookup: impl Fn(&str) -> i64) -> i64 {
        self.coeffs.iter().fold(self.constant, |acc, (v, c)| acc + c * lookup(v))
    }
}

impl fmt::Display for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, &c) in &self.coeffs {
            let (neg, mag) = (c < 0, c.unsigned_abs());
            match (first, neg) {
                (true, true) => write!(f, "-")?,
                (true, false) => {}
                (false, true) => write!(f, " - ")?,
                (false, false) => write!(f, " + ")?,
            }
            if mag == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{mag}*{v}")?;
            }
            first = false;
        }
        if first {
            write!(f, "{}", self.constant)
        } else if self.constant > 0 {
            write!(f, " + {}", self.constant)
        } else if self.constant < 0 {
            write!(f, " - {}", self.constant.unsigned_abs())
        } else {
            Ok(())
        }
    }
}

/// source expression.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Lit(i64),
    /// array variable with a (possibly empty) list of affine indices.
    Index(String, Vec<Affine>),
    Op(BinOp, Box<Expr>, Box<Expr>),
    /// fold dimension `dim` of the body with the operator.
    Reduce(BinOp, usize, Box<Expr>),
    For(String, usize, Box<Expr>),
}

use alloc::boxed::Box;

impl Expr {
    pub fn op(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Op(op, Box::new(a), Box::new(b))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Lit(v) => write!(f, "{v}"),
            Expr::Index(a, idx) => {
                write!(f, "{a}")?;
                for i in idx {
                    write!(f, "[{i}]")?;
                }
                Ok(())
            }
            Expr::Op(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Reduce(op, n, e) => {
                let kw = if *op == BinOp::Mul { "product" } else { "sum" };
                if *n == 0 {
                    write!(f, "{kw}({e})")
                } else {
                    write!(f, "{kw}@{n}({e})")
                }
            }
            Expr::For(v, n, e) => write!(f, "for {v}: {n} {{ {e} }}"),
        }
    }
}

/// input declaration.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct InputDecl {
    pub name: String,
    pub shape: Vec<usize>,
    pub party: Party,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Stmt {
    Input(InputDecl),
    Let(String, Expr),
}

/// a whole source program: bindings followed by the output expression.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Program {
    pub stmts: Vec<Stmt>,
    pub output: Expr,
}

impl Program {
    pub fn inputs(&self) -> impl Iterator<Item = &InputDecl> {
        self.stmts.iter().filter_map(|s| match s {
            Stmt::Input(d) => Some(d),
            _ => None,
        })
    }

    pub fn lets(&self) -> impl Iterator<Item = (&String, &Expr)> {
        self.stmts.iter().filter_map(|s| match s {
            Stmt::Let(n, e) => Some((n, e)),
            _ => None,
        })
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.stmts {
            match s {
                Stmt::Input(d) => {
                    write!(f, "input {}: [", d.name)?;
                    for (k, e) in d.shape.iter().enumerate() {
                        if k > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{e}")?;
                    }
                    let p = if d.party == Party::Client { "client" } else { "server" };
                    writeln!(f, "] from {p}")?;
                }
                Stmt::Let(n, e) => writeln!(f, "let {n} = {e} in")?,
            }
        }
        writeln!(f, "{}", self.output)
    }
}
