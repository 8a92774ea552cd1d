//! imperative loop-nest programs over arrays of vectors, lowered from
//! circuits and printed in a listing format close to target code.

mod lower;
mod vn;

pub use lower::lower;
pub use vn::{mark_inplace, value_number};

use crate::circ::OffsetExpr;
use crate::lang::BinOp;
use crate::materialize::MaterializedVector;
use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// value type: native vectors, encoded plaintexts or ciphertexts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ValType {
    N,
    P,
    C,
}

impl fmt::Display for ValType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValType::N => "N",
            ValType::P => "P",
            ValType::C => "C",
        })
    }
}

/// instruction type from the operand types.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IType {
    N,
    PP,
    CP,
    CC,
}

impl IType {
    /// type of an instruction over operands of types `a` and `b`.
    pub fn of(a: ValType, b: ValType) -> IType {
        use ValType::*;
        match (a, b) {
            (N, N) => IType::N,
            (C, C) => IType::CC,
            (C, _) | (_, C) => IType::CP,
            _ => IType::PP,
        }
    }

    pub fn result(self) -> ValType {
        match self {
            IType::N => ValType::N,
            IType::PP => ValType::P,
            _ => ValType::C,
        }
    }
}

impl fmt::Display for IType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IType::N => "N",
            IType::PP => "PP",
            IType::CP => "CP",
            IType::CC => "CC",
        })
    }
}

/// array index: a loop variable or a constant.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Index {
    Dim(String),
    Lit(usize),
}

/// an array or one element of it.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ARef {
    pub name: String,
    pub idx: Vec<Index>,
}

impl ARef {
    pub fn scalar(name: &str) -> Self {
        ARef { name: String::from(name), idx: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ref {
    Instr(usize),
    Arr(ARef),
}

/// constructor of a program-wide vector value.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Con {
    Const(i64),
    Mask(Vec<(usize, usize, usize)>),
    Vector(MaterializedVector),
}

/// integer expression: rotation amounts and offset-array entries.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LExpr {
    Lit(i64),
    Dim(String),
    Op(BinOp, Box<LExpr>, Box<LExpr>),
    Ref(Ref),
}

impl LExpr {
    /// an offset with offset variables read from arrays indexed by `index`.
    pub fn from_offset(o: &OffsetExpr, index: &dyn Fn(&str) -> LExpr) -> LExpr {
        match o {
            OffsetExpr::Int(v) => LExpr::Lit(*v),
            OffsetExpr::Dim(d) => LExpr::Dim(d.clone()),
            OffsetExpr::Var(v) => index(v),
            OffsetExpr::Op(op, a, b) => LExpr::Op(*op, Box::new(Self::from_offset(a, index)), Box::new(Self::from_offset(b, index))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Val { name: String, ty: ValType, con: Con },
    /// array declaration; accumulators start empty and take their first
    /// operand without an operation.
    Var { name: String, ty: ValType, extents: Vec<usize>, init: i64 },
    Instr { id: usize, op: BinOp, it: IType, a: Ref, b: Ref, inplace: bool },
    Rot { id: usize, it: IType, amount: LExpr, a: Ref, inplace: bool },
    Assign { target: ARef, value: LExpr },
    Encode(ARef),
    For { dim: String, extent: usize, body: Vec<Stmt> },
}

/// a lowered program; `output` names the array holding the result vectors.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoopNest {
    pub body: Vec<Stmt>,
    pub output: String,
    pub output_extents: Vec<usize>,
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Index::Dim(d) => write!(f, "{d}"),
            Index::Lit(v) => write!(f, "{v}"),
        }
    }
}

impl fmt::Display for ARef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        for i in &self.idx {
            write!(f, "[{i}]")?;
        }
        Ok(())
    }
}

impl fmt::Display for Ref {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ref::Instr(id) => write!(f, "instr{id}"),
            Ref::Arr(a) => write!(f, "{a}"),
        }
    }
}

impl fmt::Display for Con {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Con::Const(v) => write!(f, "const({v})"),
            Con::Mask(m) => write!(f, "{}", crate::circ::CircObj::Mask(m.clone())),
            Con::Vector(v) => write!(f, "vector({v})"),
        }
    }
}

impl fmt::Display for LExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LExpr::Lit(v) => write!(f, "{v}"),
            LExpr::Dim(d) => write!(f, "{d}"),
            LExpr::Op(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            LExpr::Ref(r) => write!(f, "{r}"),
        }
    }
}

fn write_stmts(f: &mut fmt::Formatter<'_>, body: &[Stmt], depth: usize) -> fmt::Result {
    let pad = "    ".repeat(depth);
    for s in body {
        match s {
            Stmt::Val { name, ty, con } => writeln!(f, "{pad}val {name}: {ty} = {con}")?,
            Stmt::Var { name, ty, extents, init } => {
                write!(f, "{pad}var {name}: {ty}")?;
                for e in extents {
                    write!(f, "[{e}]")?;
                }
                writeln!(f, " = {init}")?;
            }
            Stmt::Instr { id, op, it, a, b, .. } => writeln!(f, "{pad}instr{id} = {}({it}, {a}, {b})", op.name())?,
            Stmt::Rot { id, it, amount, a, .. } => writeln!(f, "{pad}instr{id} = rot({it}, {amount}, {a})")?,
            Stmt::Assign { target, value } => writeln!(f, "{pad}{target} = {value}")?,
            Stmt::Encode(a) => writeln!(f, "{pad}encode({a})")?,
            Stmt::For { dim, extent, body } => {
                writeln!(f, "{pad}for {dim} in range({extent}) {{")?;
                write_stmts(f, body, depth + 1)?;
                writeln!(f, "{pad}}}")?;
            }
        }
    }
    Ok(())
}

impl fmt::Display for LoopNest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_stmts(f, &self.body, 0)
    }
}

/// visit every statement, entering loop bodies.
pub fn walk(body: &[Stmt], f: &mut dyn FnMut(&Stmt)) {
    for s in body {
        f(s);
        if let Stmt::For { body, .. } = s {
            walk(body, f);
        }
    }
}
