use super::{BinOp, Expr, Party, Program, Stmt};
use crate::error::{Error, Result};
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

/// shape and taint of an array variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArrayInfo {
    pub shape: Vec<usize>,
    /// true when any client data flows into the array.
    pub cipher: bool,
    /// the supplying party for inputs, none for let-bound arrays.
    pub party: Option<Party>,
}

/// a program that passed the checker, with every array's shape.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShapedProgram {
    pub program: Program,
    pub arrays: BTreeMap<String, ArrayInfo>,
    pub output_shape: Vec<usize>,
    pub output_cipher: bool,
}

impl ShapedProgram {
    pub fn is_input(&self, name: &str) -> bool {
        self.arrays.get(name).is_some_and(|a| a.party.is_some())
    }
}

fn err<T>(msg: String) -> Result<T> {
    Err(Error::Check(msg))
}

/// shape of `e` (none for a broadcasting literal) and whether it carries client data.
pub fn infer_shape(
    e: &Expr,
    arrays: &BTreeMap<String, ArrayInfo>,
    scope: &mut Vec<(String, usize)>,
) -> Result<(Option<Vec<usize>>, bool)> {
    match e {
        Expr::Lit(_) => Ok((None, false)),
        Expr::Index(a, idx) => {
            if scope.iter().any(|(v, _)| v == a) {
                return err(format!("index variable '{a}' used as a value"));
            }
            let info = match arrays.get(a) {
                Some(i) => i,
                None => return err(format!("unbound array variable '{a}'")),
            };
            if idx.len() > info.shape.len() {
                return err(format!("'{a}' has rank {} but is indexed {} times", info.shape.len(), idx.len()));
            }
            for i in idx {
                for v in i.coeffs.keys() {
                    if !scope.iter().any(|(s, _)| s == v) {
                        return err(format!("unbound index variable '{v}'"));
                    }
                }
            }
            Ok((Some(info.shape[idx.len()..].to_vec()), info.cipher))
        }
        Expr::Op(_, a, b) => {
            let (sa, ca) = infer_shape(a, arrays, scope)?;
            let (sb, cb) = infer_shape(b, arrays, scope)?;
            let s = match (sa, sb) {
                (None, s) | (s, None) => s,
                (Some(x), Some(y)) if x == y => Some(x),
                (Some(x), Some(y)) => return err(format!("shape mismatch: {x:?} vs {y:?}")),
            };
            Ok((s, ca || cb))
        }
        Expr::Reduce(op, n, body) => {
            if *op == BinOp::Sub {
                return err(String::from("reduce with '-' is not supported"));
            }
            let (s, c) = infer_shape(body, arrays, scope)?;
            let mut s = match s {
                Some(s) => s,
                None => return err(String::from("cannot reduce a broadcast literal")),
            };
            if *n >= s.len() {
                return err(format!("reduce dimension {n} out of range for rank {}", s.len()));
            }
            s.remove(*n);
            Ok((Some(s), c))
        }
        Expr::For(v, n, body) => {
            if *n == 0 {
                return err(format!("for '{v}' has extent 0"));
            }
            if arrays.contains_key(v) {
                return err(format!("index variable '{v}' shadows an array"));
            }
            scope.push((v.clone(), *n));
            let r = infer_shape(body, arrays, scope);
            scope.pop();
            let (s, c) = r?;
            let mut out = Vec::from([*n]);
            out.extend(s.unwrap_or_default());
            Ok((Some(out), c))
        }
    }
}

/// check scoping, shapes and reduce operators; annotate arrays with shapes and taint.
pub fn check(p: Program) -> Result<ShapedProgram> {
    let mut arrays: BTreeMap<String, ArrayInfo> = BTreeMap::new();
    for s in &p.stmts {
        let name = match s {
            Stmt::Input(d) => &d.name,
            Stmt::Let(n, _) => n,
        };
        if name == "out" {
            return err(String::from("'out' is reserved for the program output"));
        }
        if arrays.contains_key(name) {
            return err(format!("'{name}' is bound twice"));
        }
        let info = match s {
            Stmt::Input(d) => {
                if d.shape.contains(&0) {
                    return err(format!("input '{name}' has a zero extent"));
                }
                ArrayInfo { shape: d.shape.clone(), cipher: d.party == Party::Client, party: Some(d.party) }
            }
            Stmt::Let(_, e) => {
                let (s, c) = infer_shape(e, &arrays, &mut Vec::new())?;
                ArrayInfo { shape: s.unwrap_or_default(), cipher: c, party: None }
            }
        };
        arrays.insert(name.clone(), info);
    }
    let (s, c) = infer_shape(&p.output, &arrays, &mut Vec::new())?;
    Ok(ShapedProgram { program: p, arrays, output_shape: s.unwrap_or_default(), output_cipher: c })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::lang::parse;

    fn chk(src: &str) -> Result<ShapedProgram> {
        check(parse(src).unwrap())
    }

    #[test]
    fn distance_output_shape() {
        let sp = chk(&corpus::distance_fig(4)).unwrap();
        assert_eq!(sp.output_shape, alloc::vec![4]);
        assert!(sp.output_cipher);
    }

    #[test]
    fn reduce_of_literal_for_is_scalar() {
        let sp = chk("sum(for i: 5 { 3 })").unwrap();
        assert!(sp.output_shape.is_empty());
    }

    #[test]
    fn shape_mismatch() {
        let e = chk("input a: [2] from client\ninput b: [3] from client\na + b").unwrap_err();
        assert!(matches!(e, Error::Check(m) if m.contains("mismatch")));
    }

    #[test]
    fn reduce_errors() {
        assert!(chk("input a: [2] from client\nsum@1(a)").is_err());
        let p = Program {
            stmts: alloc::vec![],
            output: Expr::Reduce(BinOp::Sub, 0, alloc::boxed::Box::new(Expr::For("i".into(), 2, alloc::boxed::Box::new(Expr::Lit(1))))),
        };
        assert!(matches!(check(p), Err(Error::Check(m)) if m.contains("'-'")));
    }

    #[test]
    fn scoping_errors() {
        assert!(chk("b").is_err());
        assert!(chk("input a: [2] from client\na[i]").is_err());
        assert!(chk("input out: [2] from client\nout").is_err());
        assert!(chk("input a: [2] from client\nfor i: 2 { a[i][0] }").is_err());
    }

    #[test]
    fn server_only_is_plain() {
        let sp = chk("input a: [2] from server\nfor i: 2 { a[i] * 2 }").unwrap();
        assert!(!sp.output_cipher);
    }
}
