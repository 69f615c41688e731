use std::collections::HashMap;

use super::ast::{Decl, Expr, GeneratorDecl, ModelDocument, Range, TensorEntries};
use super::lexer::{tokenize, Tok, Token};
use super::FrontendError;
use crate::superalgebra::Parity;

#[derive(Debug, Clone)]
enum Symbol {
    Generator(Option<Range>),
    Param,
    Tensor(Vec<Range>),
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    skip_newlines: usize,
    symbols: HashMap<String, Symbol>,
    scope: Vec<(String, Range)>,
}

/// Parses a model file and checks every symbol and literal index.
pub fn parse_model(src: &str) -> Result<ModelDocument, FrontendError> {
    let mut p = Parser { toks: tokenize(src)?, pos: 0, skip_newlines: 0, symbols: HashMap::new(), scope: Vec::new() };
    p.document()
}

impl Parser {
    fn peek_token(&mut self) -> &Token {
        if self.skip_newlines > 0 {
            while self.toks[self.pos].tok == Tok::Newline {
                self.pos += 1;
            }
        }
        &self.toks[self.pos]
    }

    fn peek(&mut self) -> Tok {
        self.peek_token().tok.clone()
    }

    fn next(&mut self) -> Token {
        self.peek_token();
        let t = self.toks[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&mut self, message: impl Into<String>) -> Result<T, FrontendError> {
        let t = self.peek_token().clone();
        Err(FrontendError::Syntax { line: t.line, col: t.col, message: message.into() })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Token, FrontendError> {
        if self.peek() == tok {
            Ok(self.next())
        } else {
            let found = self.peek();
            self.error(format!("expected {what}, found {found:?}"))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Token), FrontendError> {
        match self.peek() {
            Tok::Ident(s) => {
                let t = self.next();
                Ok((s, t))
            }
            other => self.error(format!("expected {what}, found {other:?}")),
        }
    }

    fn newlines(&mut self) {
        while self.peek() == Tok::Newline {
            self.next();
        }
    }

    fn end_of_statement(&mut self) -> Result<(), FrontendError> {
        match self.peek() {
            Tok::Newline => {
                self.newlines();
                Ok(())
            }
            Tok::Eof => Ok(()),
            other => self.error(format!("unexpected {other:?} at end of line")),
        }
    }

    fn document(&mut self) -> Result<ModelDocument, FrontendError> {
        self.newlines();
        match self.peek() {
            Tok::Ident(k) if k == "model" => {
                self.next();
            }
            _ => return self.error("a model file starts with `model <name>`"),
        }
        let (name, _) = self.ident("model name")?;
        self.end_of_statement()?;
        let mut decls = Vec::new();
        loop {
            let (kw, _) = self.ident("declaration or `lagrangian:`")?;
            match kw.as_str() {
                "even" | "odd" => {
                    let parity = if kw == "even" { Parity::Even } else { Parity::Odd };
                    decls.push(self.generators(parity)?);
                }
                "param" => decls.push(self.param()?),
                "tensor" => decls.push(self.tensor()?),
                "lagrangian" => {
                    self.expect(Tok::Colon, "`:`")?;
                    self.skip_newlines += 1;
                    let lagrangian = self.expr()?;
                    if self.peek() != Tok::Eof {
                        let found = self.peek();
                        return self.error(format!("unexpected {found:?} after the Lagrangian"));
                    }
                    return Ok(ModelDocument { name, decls, lagrangian });
                }
                other => return self.error(format!("unknown declaration `{other}`")),
            }
            self.end_of_statement()?;
        }
    }

    fn declare(&mut self, name: &str, sym: Symbol, at: &Token) -> Result<(), FrontendError> {
        if name == "i" || self.symbols.contains_key(name) {
            return Err(FrontendError::Syntax {
                line: at.line,
                col: at.col,
                message: format!("`{name}` is already defined"),
            });
        }
        self.symbols.insert(name.to_string(), sym);
        Ok(())
    }

    fn generators(&mut self, parity: Parity) -> Result<Decl, FrontendError> {
        let mut items = Vec::new();
        loop {
            let (name, at) = self.ident("generator name")?;
            let range = if self.peek() == Tok::LBracket {
                self.next();
                let r = self.dim()?;
                self.expect(Tok::RBracket, "`]`")?;
                Some(r)
            } else {
                None
            };
            self.declare(&name, Symbol::Generator(range), &at)?;
            items.push(GeneratorDecl { name, range });
            if self.peek() != Tok::Comma {
                break;
            }
            self.next();
        }
        Ok(Decl::Generators { parity, items })
    }

    fn param(&mut self) -> Result<Decl, FrontendError> {
        let (name, at) = self.ident("parameter name")?;
        self.expect(Tok::Colon, "`:`")?;
        let parity = match self.ident("`even` or `odd`")?.0.as_str() {
            "even" => Parity::Even,
            "odd" => Parity::Odd,
            _ => return self.error("expected `even` or `odd`"),
        };
        self.declare(&name, Symbol::Param, &at)?;
        Ok(Decl::Param { name, parity })
    }

    fn tensor(&mut self) -> Result<Decl, FrontendError> {
        let (name, at) = self.ident("tensor name")?;
        self.expect(Tok::LBracket, "`[`")?;
        let mut dims = vec![self.dim()?];
        while self.peek() == Tok::Comma {
            self.next();
            dims.push(self.dim()?);
        }
        self.expect(Tok::RBracket, "`]`")?;
        self.expect(Tok::Equals, "`=`")?;
        let entries = self.entries()?;
        if !shape_matches(&entries, &dims) {
            return Err(FrontendError::Syntax {
                line: at.line,
                col: at.col,
                message: format!("entries of `{name}` do not match its dimensions"),
            });
        }
        self.declare(&name, Symbol::Tensor(dims.clone()), &at)?;
        Ok(Decl::Tensor { name, dims, entries })
    }

    fn entries(&mut self) -> Result<TensorEntries, FrontendError> {
        if self.peek() != Tok::LBracket {
            return Ok(TensorEntries::Scalar(self.expr()?));
        }
        self.next();
        self.skip_newlines += 1;
        let mut items = vec![self.entries()?];
        while self.peek() == Tok::Comma {
            self.next();
            items.push(self.entries()?);
        }
        self.expect(Tok::RBracket, "`]`")?;
        self.skip_newlines -= 1;
        Ok(TensorEntries::List(items))
    }

    fn int(&mut self) -> Result<i64, FrontendError> {
        let neg = if self.peek() == Tok::Minus {
            self.next();
            true
        } else {
            false
        };
        match self.peek() {
            Tok::Number(s) if !s.contains('.') => {
                self.next();
                let v: i64 = s.parse().map_err(|_| FrontendError::Syntax {
                    line: 0,
                    col: 0,
                    message: format!("integer `{s}` out of range"),
                })?;
                Ok(if neg { -v } else { v })
            }
            other => self.error(format!("expected an integer, found {other:?}")),
        }
    }

    /// `N` (meaning `1..N`) or `a..b`.
    fn dim(&mut self) -> Result<Range, FrontendError> {
        let a = self.int()?;
        if self.peek() == Tok::DotDot {
            self.next();
            let b = self.int()?;
            if b < a {
                return self.error("empty index range");
            }
            Ok(Range { lo: a, hi: b })
        } else if a >= 1 {
            Ok(Range { lo: 1, hi: a })
        } else {
            self.error("dimension must be positive")
        }
    }

    fn expr(&mut self) -> Result<Expr, FrontendError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.next();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.next();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, FrontendError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.next();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Slash => {
                    self.next();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, FrontendError> {
        if self.peek() == Tok::Minus {
            self.next();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, FrontendError> {
        match self.peek() {
            Tok::Number(text) => {
                self.next();
                Ok(Expr::Num { text, imaginary: false })
            }
            Tok::Imag(text) => {
                self.next();
                Ok(Expr::Num { text, imaginary: true })
            }
            Tok::LParen => {
                self.next();
                self.skip_newlines += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                self.skip_newlines -= 1;
                Ok(e)
            }
            Tok::Ident(name) if name == "dot" => self.dot(),
            Tok::Ident(name) if name == "sum" => self.sum(),
            Tok::Ident(_) => self.var(),
            other => self.error(format!("expected an expression, found {other:?}")),
        }
    }

    fn indices(&mut self) -> Result<Vec<(Expr, Token)>, FrontendError> {
        if self.peek() != Tok::LBracket {
            return Ok(Vec::new());
        }
        self.next();
        self.skip_newlines += 1;
        let mut out = Vec::new();
        loop {
            let at = self.peek_token().clone();
            out.push((self.expr()?, at));
            if self.peek() != Tok::Comma {
                break;
            }
            self.next();
        }
        self.expect(Tok::RBracket, "`]`")?;
        self.skip_newlines -= 1;
        Ok(out)
    }

    fn dot(&mut self) -> Result<Expr, FrontendError> {
        self.next();
        self.expect(Tok::LParen, "`(` after `dot`")?;
        let (name, at) = self.ident("generator name")?;
        let mut idx = self.indices()?;
        self.expect(Tok::RParen, "`)`")?;
        if idx.is_empty() {
            idx = self.indices()?;
        }
        match self.symbols.get(&name).cloned() {
            Some(Symbol::Generator(range)) => self.check_generator_indices(&name, range, &idx, &at)?,
            _ => return Err(unknown(&name, &at)),
        }
        Ok(Expr::Dot { name, indices: idx.into_iter().map(|(e, _)| e).collect() })
    }

    fn sum(&mut self) -> Result<Expr, FrontendError> {
        self.next();
        self.expect(Tok::LParen, "`(` after `sum`")?;
        self.skip_newlines += 1;
        let (var, _) = self.ident("summation variable")?;
        match self.ident("`in`")?.0.as_str() {
            "in" => {}
            _ => return self.error("expected `in`"),
        }
        let lo = self.int()?;
        self.expect(Tok::DotDot, "`..`")?;
        let hi = self.int()?;
        self.expect(Tok::Comma, "`,`")?;
        self.scope.push((var.clone(), Range { lo, hi }));
        let body = self.expr()?;
        self.scope.pop();
        self.expect(Tok::RParen, "`)`")?;
        self.skip_newlines -= 1;
        Ok(Expr::Sum { var, lo, hi, body: Box::new(body) })
    }

    fn var(&mut self) -> Result<Expr, FrontendError> {
        let (name, at) = self.ident("symbol")?;
        let idx = self.indices()?;
        let bound = self.scope.iter().rev().any(|(v, _)| *v == name);
        if bound || (name == "i" && !self.symbols.contains_key("i")) {
            if !idx.is_empty() {
                return Err(FrontendError::Syntax { line: at.line, col: at.col, message: format!("`{name}` takes no index") });
            }
        } else {
            match self.symbols.get(&name).cloned() {
                Some(Symbol::Generator(range)) => self.check_generator_indices(&name, range, &idx, &at)?,
                Some(Symbol::Param) if idx.is_empty() => {}
                Some(Symbol::Param) => {
                    return Err(FrontendError::Syntax { line: at.line, col: at.col, message: format!("`{name}` takes no index") })
                }
                Some(Symbol::Tensor(dims)) => {
                    if idx.len() != dims.len() {
                        return Err(FrontendError::Syntax {
                            line: at.line,
                            col: at.col,
                            message: format!("`{name}` needs {} indices", dims.len()),
                        });
                    }
                    for ((e, t), d) in idx.iter().zip(&dims) {
                        self.check_literal_index(&name, e, *d, t)?;
                    }
                }
                None => return Err(unknown(&name, &at)),
            }
        }
        Ok(Expr::Var { name, indices: idx.into_iter().map(|(e, _)| e).collect() })
    }

    fn check_generator_indices(
        &self,
        name: &str,
        range: Option<Range>,
        idx: &[(Expr, Token)],
        at: &Token,
    ) -> Result<(), FrontendError> {
        match (range, idx) {
            (None, []) => Ok(()),
            (Some(r), [(e, t)]) => self.check_literal_index(name, e, r, t),
            (None, _) => Err(FrontendError::Syntax { line: at.line, col: at.col, message: format!("`{name}` takes no index") }),
            (Some(_), _) => Err(FrontendError::Syntax {
                line: at.line,
                col: at.col,
                message: format!("`{name}` needs exactly one index"),
            }),
        }
    }

    /// Literal indices, and indices that are a bare loop variable, are
    /// checked here; everything else is checked during elaboration.
    fn check_literal_index(&self, name: &str, e: &Expr, r: Range, at: &Token) -> Result<(), FrontendError> {
        let span = match e {
            Expr::Num { text, imaginary: false } => text.parse::<i64>().ok().map(|k| (k, k)),
            Expr::Neg(x) => match x.as_ref() {
                Expr::Num { text, imaginary: false } => text.parse::<i64>().ok().map(|k| (-k, -k)),
                _ => None,
            },
            Expr::Var { name: v, indices } if indices.is_empty() => {
                self.scope.iter().rev().find(|(s, _)| s == v).map(|(_, rr)| (rr.lo, rr.hi))
            }
            _ => None,
        };
        if let Some((lo, hi)) = span {
            for k in [lo, hi] {
                if !r.contains(k) {
                    return Err(FrontendError::IndexOutOfRange { name: name.to_string(), index: k, line: at.line, col: at.col });
                }
            }
        }
        Ok(())
    }
}

fn unknown(name: &str, at: &Token) -> FrontendError {
    FrontendError::UnknownSymbol { name: name.to_string(), line: at.line, col: at.col }
}

fn shape_matches(e: &TensorEntries, dims: &[Range]) -> bool {
    match (e, dims) {
        (TensorEntries::Scalar(_), []) => true,
        (TensorEntries::List(items), [d, rest @ ..]) => {
            items.len() == d.len() && items.iter().all(|x| shape_matches(x, rest))
        }
        _ => false,
    }
}
