use super::{check, parse, Expr, ShapedProgram, Stmt};
use crate::error::{Error, Result};
use crate::tensor::{positions, Tensor};
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

enum Val {
    /// literal that broadcasts to any shape.
    Bcast(i64),
    T(Tensor),
}

struct Interp<'a> {
    arrays: &'a BTreeMap<String, Tensor>,
    env: Vec<(String, i64)>,
}

impl Interp<'_> {
    fn lookup(&self, v: &str) -> i64 {
        self.env.iter().rev().find(|(n, _)| n == v).map_or(0, |(_, x)| *x)
    }

    fn eval(&mut self, e: &Expr) -> Result<Val> {
        match e {
            Expr::Lit(v) => Ok(Val::Bcast(*v)),
            Expr::Index(a, idx) => {
                let t = self.arrays.get(a).ok_or_else(|| Error::Input(format!("array '{a}' has no value")))?;
                let base: Vec<i64> = idx.iter().map(|i| i.eval(|v| self.lookup(v))).collect();
                let rest = t.shape[idx.len()..].to_vec();
                let mut data = Vec::with_capacity(rest.iter().product());
                let mut full = base.clone();
                for p in positions(&rest) {
                    full.truncate(base.len());
                    full.extend(p.iter().map(|&x| x as i64));
                    data.push(t.get(&full));
                }
                Ok(Val::T(Tensor::new(rest, data)))
            }
            Expr::Op(op, a, b) => {
                let va = self.eval(a)?;
                let vb = self.eval(b)?;
                Ok(match (va, vb) {
                    (Val::Bcast(x), Val::Bcast(y)) => Val::Bcast(op.apply(x, y)),
                    (Val::Bcast(x), Val::T(mut t)) => {
                        t.data.iter_mut().for_each(|y| *y = op.apply(x, *y));
                        Val::T(t)
                    }
                    (Val::T(mut t), Val::Bcast(y)) => {
                        t.data.iter_mut().for_each(|x| *x = op.apply(*x, y));
                        Val::T(t)
                    }
                    (Val::T(mut t), Val::T(u)) => {
                        if t.shape != u.shape {
                            return Err(Error::Check(format!("shape mismatch {:?} vs {:?}", t.shape, u.shape)));
                        }
                        t.data.iter_mut().zip(&u.data).for_each(|(x, y)| *x = op.apply(*x, *y));
                        Val::T(t)
                    }
                })
            }
            Expr::Reduce(op, n, body) => {
                let t = match self.eval(body)? {
                    Val::T(t) => t,
                    Val::Bcast(_) => return Err(Error::Check(String::from("cannot reduce a broadcast literal"))),
                };
                let mut shape = t.shape.clone();
                let ext = shape.remove(*n);
                let mut out = Tensor::zeros(&shape);
                for (o, p) in positions(&shape).enumerate() {
                    let mut acc = op.identity();
                    let mut full: Vec<i64> = p.iter().map(|&x| x as i64).collect();
                    full.insert(*n, 0);
                    for k in 0..ext {
                        full[*n] = k as i64;
                        acc = op.apply(acc, t.get(&full));
                    }
                    out.data[o] = acc;
                }
                Ok(Val::T(out))
            }
            Expr::For(v, n, body) => {
                let mut parts = Vec::with_capacity(*n);
                for k in 0..*n {
                    self.env.push((v.clone(), k as i64));
                    let r = self.eval(body);
                    self.env.pop();
                    parts.push(r?);
                }
                let inner: Vec<usize> = match &parts[0] {
                    Val::T(t) => t.shape.clone(),
                    Val::Bcast(_) => Vec::new(),
                };
                let mut shape = Vec::from([*n]);
                shape.extend(&inner);
                let mut data = Vec::with_capacity(shape.iter().product());
                for part in parts {
                    match part {
                        Val::T(t) => data.extend(t.data),
                        Val::Bcast(x) => data.push(x),
                    }
                }
                Ok(Val::T(Tensor::new(shape, data)))
            }
        }
    }
}

fn to_tensor(v: Val, shape: &[usize]) -> Tensor {
    match v {
        Val::T(t) => t,
        Val::Bcast(x) => {
            let mut t = Tensor::zeros(shape);
            t.data.iter_mut().for_each(|y| *y = x);
            t
        }
    }
}

/// reference semantics: exact integers, out-of-range indices read zero.
pub fn interpret(p: &ShapedProgram, inputs: &BTreeMap<String, Tensor>) -> Result<Tensor> {
    let mut arrays: BTreeMap<String, Tensor> = BTreeMap::new();
    for s in &p.program.stmts {
        match s {
            Stmt::Input(d) => {
                let t = inputs.get(&d.name).ok_or_else(|| Error::Input(format!("missing input '{}'", d.name)))?;
                if t.shape != d.shape {
                    return Err(Error::Input(format!(
                        "input '{}' has shape {:?}, expected {:?}",
                        d.name, t.shape, d.shape
                    )));
                }
                arrays.insert(d.name.clone(), t.clone());
            }
            Stmt::Let(n, e) => {
                let v = Interp { arrays: &arrays, env: Vec::new() }.eval(e)?;
                let t = to_tensor(v, &p.arrays[n].shape);
                arrays.insert(n.clone(), t);
            }
        }
    }
    let v = Interp { arrays: &arrays, env: Vec::new() }.eval(&p.program.output)?;
    Ok(to_tensor(v, &p.output_shape))
}

/// parse, check and interpret in one step.
pub fn parse_and_run(src: &str, inputs: &BTreeMap<String, Tensor>) -> Result<Tensor> {
    interpret(&check(parse(src)?)?, inputs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use alloc::vec;

    fn inputs(items: &[(&str, Tensor)]) -> BTreeMap<String, Tensor> {
        items.iter().map(|(n, t)| (String::from(*n), t.clone())).collect()
    }

    #[test]
    fn distance_identity_example() {
        let mut a = Tensor::zeros(&[4, 4]);
        for i in 0..4 {
            a.set(&[i, i], 1);
        }
        let x = Tensor::new(vec![4], vec![1, 0, 0, 0]);
        let out = parse_and_run(&corpus::distance_fig(4), &inputs(&[("a", a), ("x", x)])).unwrap();
        assert_eq!(out.data, vec![0, 2, 2, 2]);
    }

    #[test]
    fn matmul_identity() {
        let src = "input a: [2,2] from client\ninput b: [2,2] from server\n\
                   for i: 2 { for j: 2 { sum(for k: 2 { a[i][k] * b[k][j] }) } }";
        let a = Tensor::new(vec![2, 2], vec![1, 2, 3, 4]);
        let b = Tensor::new(vec![2, 2], vec![1, 0, 0, 1]);
        let out = parse_and_run(src, &inputs(&[("a", a), ("b", b)])).unwrap();
        assert_eq!(out.data, vec![1, 2, 3, 4]);
    }

    #[test]
    fn zero_inputs_give_zero() {
        for (name, src) in corpus::all_reduced() {
            let sp = check(parse(&src).unwrap()).unwrap();
            if src.contains("1 -") {
                continue;
            }
            let ins = sp
                .program
                .inputs()
                .map(|d| (d.name.clone(), Tensor::zeros(&d.shape)))
                .collect();
            let out = interpret(&sp, &ins).unwrap();
            assert!(out.data.iter().all(|&x| x == 0), "{name}");
        }
    }

    #[test]
    fn oob_and_literal_broadcast() {
        let src = "input a: [3] from client\nfor i: 3 { a[i + 1] + 10 }";
        let out = parse_and_run(src, &inputs(&[("a", Tensor::new(vec![3], vec![1, 2, 3]))])).unwrap();
        assert_eq!(out.data, vec![12, 13, 10]);
    }

    #[test]
    fn missing_input() {
        let e = parse_and_run("input a: [3] from client\na", &BTreeMap::new()).unwrap_err();
        assert!(matches!(e, Error::Input(_)));
    }

    #[test]
    fn reduce_nonzero_dim() {
        let src = "input a: [2,3] from client\nsum@1(a)";
        let out = parse_and_run(src, &inputs(&[("a", Tensor::new(vec![2, 3], vec![1, 2, 3, 4, 5, 6]))])).unwrap();
        assert_eq!(out.data, vec![6, 15]);
    }
}
