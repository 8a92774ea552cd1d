//! value numbering and last-use marking over loop nests.

use super::{ARef, IType, LExpr, LoopNest, Ref, Stmt};
use crate::lang::BinOp;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

/// an operand as seen by value numbering: arrays carry the version
/// current when they are read.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Opnd {
    Instr(usize),
    Arr(ARef, usize),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Key {
    Op(BinOp, IType, Opnd, Opnd),
    Rot(IType, LExprKey, Opnd),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct LExprKey(LExpr, Vec<(String, usize)>);

fn assigned(body: &[Stmt], out: &mut BTreeSet<String>) {
    for s in body {
        match s {
            Stmt::Assign { target, .. } => {
                out.insert(target.name.clone());
            }
            Stmt::Var { name, .. } | Stmt::Val { name, .. } => {
                out.insert(name.clone());
            }
            Stmt::Encode(a) => {
                out.insert(a.name.clone());
            }
            Stmt::For { body, .. } => assigned(body, out),
            _ => {}
        }
    }
}

fn lexpr_arrays(e: &LExpr, out: &mut Vec<String>) {
    match e {
        LExpr::Ref(Ref::Arr(a)) => out.push(a.name.clone()),
        LExpr::Op(_, a, b) => {
            lexpr_arrays(a, out);
            lexpr_arrays(b, out);
        }
        _ => {}
    }
}

fn rename_ref(r: &mut Ref, map: &BTreeMap<usize, usize>) {
    if let Ref::Instr(id) = r {
        if let Some(&n) = map.get(id) {
            *id = n;
        }
    }
}

fn rename_lexpr(e: &mut LExpr, map: &BTreeMap<usize, usize>) {
    match e {
        LExpr::Ref(r) => rename_ref(r, map),
        LExpr::Op(_, a, b) => {
            rename_lexpr(a, map);
            rename_lexpr(b, map);
        }
        _ => {}
    }
}

struct Vn {
    versions: BTreeMap<String, usize>,
    table: BTreeMap<Key, usize>,
    rename: BTreeMap<usize, usize>,
}

impl Vn {
    fn bump(&mut self, name: &str) {
        *self.versions.entry(String::from(name)).or_insert(0) += 1;
    }

    fn opnd(&self, r: &Ref) -> Opnd {
        match r {
            Ref::Instr(id) => Opnd::Instr(*id),
            Ref::Arr(a) => Opnd::Arr(a.clone(), self.versions.get(&a.name).copied().unwrap_or(0)),
        }
    }

    fn block(&mut self, body: Vec<Stmt>) -> Vec<Stmt> {
        let mut out = Vec::new();
        for mut s in body {
            match &mut s {
                Stmt::Instr { id, op, it, a, b, .. } => {
                    rename_ref(a, &self.rename);
                    rename_ref(b, &self.rename);
                    let key = Key::Op(*op, *it, self.opnd(a), self.opnd(b));
                    if let Some(&prev) = self.table.get(&key) {
                        self.rename.insert(*id, prev);
                        continue;
                    }
                    self.table.insert(key, *id);
                }
                Stmt::Rot { id, it, amount, a, .. } => {
                    rename_ref(a, &self.rename);
                    rename_lexpr(amount, &self.rename);
                    let mut arrays = Vec::new();
                    lexpr_arrays(amount, &mut arrays);
                    let vs = arrays.into_iter().map(|n| (n.clone(), self.versions.get(&n).copied().unwrap_or(0))).collect();
                    let key = Key::Rot(*it, LExprKey(amount.clone(), vs), self.opnd(a));
                    if let Some(&prev) = self.table.get(&key) {
                        self.rename.insert(*id, prev);
                        continue;
                    }
                    self.table.insert(key, *id);
                }
                Stmt::Assign { target, value } => {
                    rename_lexpr(value, &self.rename);
                    self.bump(&target.name);
                }
                Stmt::Var { name, .. } | Stmt::Val { name, .. } => {
                    let name = name.clone();
                    self.bump(&name);
                }
                Stmt::Encode(a) => {
                    let name = a.name.clone();
                    self.bump(&name);
                }
                Stmt::For { body, .. } => {
                    // arrays written anywhere in the loop differ between iterations
                    let mut w = BTreeSet::new();
                    assigned(body, &mut w);
                    for n in &w {
                        self.bump(n);
                    }
                    let saved = self.table.clone();
                    *body = self.block(take_vec(body));
                    self.table = saved;
                    for n in &w {
                        self.bump(n);
                    }
                }
            }
            out.push(s);
        }
        out
    }
}

fn take_vec(v: &mut Vec<Stmt>) -> Vec<Stmt> {
    core::mem::take(v)
}

/// merge instructions with the same operation, type, operands and rotation
/// amount; array reads only match while the array is unchanged.
pub fn value_number(p: &LoopNest) -> LoopNest {
    let mut vn = Vn { versions: BTreeMap::new(), table: BTreeMap::new(), rename: BTreeMap::new() };
    LoopNest { body: vn.block(p.body.clone()), output: p.output.clone(), output_extents: p.output_extents.clone() }
}

fn uses(s: &Stmt, out: &mut BTreeSet<usize>) {
    let mut r = |x: &Ref| {
        if let Ref::Instr(id) = x {
            out.insert(*id);
        }
    };
    fn lex(e: &LExpr, r: &mut dyn FnMut(&Ref)) {
        match e {
            LExpr::Ref(x) => r(x),
            LExpr::Op(_, a, b) => {
                lex(a, r);
                lex(b, r);
            }
            _ => {}
        }
    }
    match s {
        Stmt::Instr { a, b, .. } => {
            r(a);
            r(b);
        }
        Stmt::Rot { amount, a, .. } => {
            r(a);
            lex(amount, &mut r);
        }
        Stmt::Assign { value, .. } => lex(value, &mut r),
        Stmt::For { body, .. } => {
            for s in body {
                uses(s, out);
            }
        }
        _ => {}
    }
}

/// flag instructions whose first operand is a result of the same block
/// that is never read again, so back ends may overwrite it.
pub fn mark_inplace(p: &mut LoopNest) {
    fn block(body: &mut [Stmt]) {
        let mut defined = BTreeSet::new();
        for k in 0..body.len() {
            let mut later = BTreeSet::new();
            for s in &body[k + 1..] {
                uses(s, &mut later);
            }
            match &mut body[k] {
                Stmt::Instr { id, a, b, inplace, .. } => {
                    let dies = matches!(a, Ref::Instr(x) if defined.contains(x) && !later.contains(x) && Some(*x) != instr_of(b));
                    *inplace = dies;
                    defined.insert(*id);
                }
                Stmt::Rot { id, a, amount, inplace, .. } => {
                    let mut in_amount = BTreeSet::new();
                    uses(&Stmt::Assign { target: ARef::scalar(""), value: amount.clone() }, &mut in_amount);
                    *inplace = matches!(a, Ref::Instr(x) if defined.contains(x) && !later.contains(x) && !in_amount.contains(x));
                    defined.insert(*id);
                }
                Stmt::For { body, .. } => block(body),
                _ => {}
            }
        }
    }
    fn instr_of(r: &Ref) -> Option<usize> {
        match r {
            Ref::Instr(x) => Some(*x),
            _ => None,
        }
    }
    block(&mut p.body);
}
