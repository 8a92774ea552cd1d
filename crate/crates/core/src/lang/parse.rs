use super::{Affine, BinOp, Expr, InputDecl, Party, Program, Stmt};
use crate::error::{Error, Result};
use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(char),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') || c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let v = text.parse::<i64>().map_err(|_| Error::Parse {
                line: l0,
                col: c0,
                msg: alloc::format!("integer literal {text} out of range"),
            })?;
            col += i - start;
            out.push(Token { tok: Tok::Int(v), line: l0, col: c0 });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), line: l0, col: c0 });
            continue;
        }
        if "[](){}:,+-*=;@".contains(c) {
            out.push(Token { tok: Tok::Sym(c), line: l0, col: c0 });
            i += 1;
            col += 1;
            continue;
        }
        return Err(Error::Parse { line: l0, col: c0, msg: alloc::format!("unexpected character '{c}'") });
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

const KEYWORDS: &[&str] = &["input", "from", "client", "server", "let", "in", "for", "sum", "product"];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let t = &self.toks[self.pos];
        Err(Error::Parse { line: t.line, col: t.col, msg: msg.into() })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_sym(&self, c: char) -> bool {
        *self.peek() == Tok::Sym(c)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_sym(&mut self, c: char) -> Result<()> {
        if self.is_sym(c) {
            self.bump();
            Ok(())
        } else {
            self.err(alloc::format!("expected '{c}'"))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.err(alloc::format!("expected '{kw}'"))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            _ => self.err("expected identifier"),
        }
    }

    fn nat(&mut self) -> Result<usize> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(v as usize)
            }
            _ => self.err("expected natural number"),
        }
    }

    fn skip_semis(&mut self) {
        while self.is_sym(';') {
            self.bump();
        }
    }

    fn program(&mut self) -> Result<Program> {
        let mut stmts = Vec::new();
        loop {
            self.skip_semis();
            if self.is_kw("input") {
                self.bump();
                let name = self.ident()?;
                self.expect_sym(':')?;
                self.expect_sym('[')?;
                let mut shape = Vec::new();
                if !self.is_sym(']') {
                    shape.push(self.nat()?);
                    while self.is_sym(',') {
                        self.bump();
                        shape.push(self.nat()?);
                    }
                }
                self.expect_sym(']')?;
                self.expect_kw("from")?;
                let party = if self.is_kw("client") {
                    Party::Client
                } else if self.is_kw("server") {
                    Party::Server
                } else {
                    return self.err("expected 'client' or 'server'");
                };
                self.bump();
                stmts.push(Stmt::Input(InputDecl { name, shape, party }));
            } else if self.is_kw("let") {
                self.bump();
                let name = self.ident()?;
                self.expect_sym('=')?;
                let e = self.expr()?;
                self.expect_kw("in")?;
                stmts.push(Stmt::Let(name, e));
            } else {
                break;
            }
        }
        let output = self.expr()?;
        self.skip_semis();
        if *self.peek() != Tok::Eof {
            return self.err("unexpected trailing input");
        }
        Ok(Program { stmts, output })
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut e = self.term()?;
        loop {
            let op = if self.is_sym('+') {
                BinOp::Add
            } else if self.is_sym('-') {
                BinOp::Sub
            } else {
                return Ok(e);
            };
            self.bump();
            let r = self.term()?;
            e = Expr::op(op, e, r);
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut e = self.factor()?;
        while self.is_sym('*') {
            self.bump();
            let r = self.factor()?;
            e = Expr::op(BinOp::Mul, e, r);
        }
        Ok(e)
    }

    fn factor(&mut self) -> Result<Expr> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Lit(v))
            }
            Tok::Sym('-') => {
                self.bump();
                if let Tok::Int(v) = *self.peek() {
                    self.bump();
                    return Ok(Expr::Lit(-v));
                }
                let e = self.factor()?;
                Ok(Expr::op(BinOp::Sub, Expr::Lit(0), e))
            }
            Tok::Sym('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(')')?;
                Ok(e)
            }
            Tok::Ident(s) if s == "for" => {
                self.bump();
                let v = self.ident()?;
                self.expect_sym(':')?;
                let n = self.nat()?;
                self.expect_sym('{')?;
                let e = self.expr()?;
                self.expect_sym('}')?;
                Ok(Expr::For(v, n, Box::new(e)))
            }
            Tok::Ident(s) if s == "sum" || s == "product" => {
                self.bump();
                let op = if s == "sum" { BinOp::Add } else { BinOp::Mul };
                let mut dim = 0;
                if self.is_sym('@') {
                    self.bump();
                    dim = self.nat()?;
                }
                self.expect_sym('(')?;
                let e = self.expr()?;
                self.expect_sym(')')?;
                Ok(Expr::Reduce(op, dim, Box::new(e)))
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                let mut idx = Vec::new();
                while self.is_sym('[') {
                    self.bump();
                    idx.push(self.affine()?);
                    self.expect_sym(']')?;
                }
                Ok(Expr::Index(name, idx))
            }
            _ => self.err("expected expression"),
        }
    }

    fn affine(&mut self) -> Result<Affine> {
        let mut a = self.aff_term()?;
        loop {
            let sign = if self.is_sym('+') {
                1
            } else if self.is_sym('-') {
                -1
            } else {
                return Ok(a);
            };
            self.bump();
            let r = self.aff_term()?;
            a = a.add(&r.scale(sign));
        }
    }

    fn aff_term(&mut self) -> Result<Affine> {
        let mut a = self.aff_factor()?;
        while self.is_sym('*') {
            self.bump();
            let r = self.aff_factor()?;
            a = if a.is_constant() {
                r.scale(a.constant)
            } else if r.is_constant() {
                a.scale(r.constant)
            } else {
                return self.err("index variables cannot be multiplied together");
            };
        }
        Ok(a)
    }

    fn aff_factor(&mut self) -> Result<Affine> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Affine::constant(v))
            }
            Tok::Sym('-') => {
                self.bump();
                Ok(self.aff_factor()?.scale(-1))
            }
            Tok::Sym('(') => {
                self.bump();
                let a = self.affine()?;
                self.expect_sym(')')?;
                Ok(a)
            }
            Tok::Ident(_) => {
                let v = self.ident()?;
                if self.is_sym('[') {
                    return self.err("only affine expressions over index variables can appear in an index");
                }
                Ok(Affine::var(&v))
            }
            _ => self.err("expected index expression"),
        }
    }
}

/// parse a whole program in the concrete syntax.
pub fn parse(src: &str) -> Result<Program> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    p.program()
}

/// parse a standalone affine index expression such as `x + 2*i - 1`.
pub fn parse_affine(src: &str) -> Result<Affine> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let a = p.affine()?;
    if *p.peek() != Tok::Eof {
        return p.err("unexpected trailing input");
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn distance_shape_of_ast() {
        let p = parse(&corpus::distance_fig(4)).unwrap();
        match &p.output {
            Expr::For(i, 4, body) => {
                assert_eq!(i, "i");
                assert!(matches!(&**body, Expr::Reduce(BinOp::Add, 0, inner) if matches!(&**inner, Expr::For(_, 4, _))));
            }
            other => panic!("unexpected output {other:?}"),
        }
    }

    #[test]
    fn scalar_literal() {
        let p = parse("42").unwrap();
        assert_eq!(p.output, Expr::Lit(42));
        assert!(p.stmts.is_empty());
    }

    #[test]
    fn index_products_rejected() {
        let e = parse("input a: [4] from client\nfor i: 2 { for j: 2 { a[i*j] } }").unwrap_err();
        match e {
            Error::Parse { line, msg, .. } => {
                assert_eq!(line, 2);
                assert!(msg.contains("cannot be multiplied"));
            }
            other => panic!("wrong error {other:?}"),
        }
    }

    #[test]
    fn constant_scaling_allowed() {
        let a = parse_affine("2*(i + 1) - j*3").unwrap();
        assert_eq!(a.constant, 2);
        assert_eq!(a.coeff("i"), 2);
        assert_eq!(a.coeff("j"), -3);
    }

    #[test]
    fn error_positions() {
        match parse("input a: [4] from nowhere\na").unwrap_err() {
            Error::Parse { line, col, .. } => assert_eq!((line, col), (1, 19)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn roundtrip_corpus() {
        for (name, src) in corpus::all_reduced() {
            let p = parse(&src).unwrap_or_else(|e| panic!("{name}: {e}"));
            let printed = alloc::format!("{p}");
            let q = parse(&printed).unwrap_or_else(|e| panic!("{name} reparse: {e}\n{printed}"));
            assert_eq!(p, q, "{name}");
        }
    }

    #[test]
    fn negative_literals_and_unary_minus() {
        let p = parse("input a: [2] from client\nfor i: 2 { -a[i] * -3 }").unwrap();
        let q = parse(&alloc::format!("{p}")).unwrap();
        assert_eq!(p, q);
    }
}
