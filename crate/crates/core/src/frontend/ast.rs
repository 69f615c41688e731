//! Syntax tree of model files. Factor order is kept exactly as written.

use std::fmt;

use crate::superalgebra::Parity;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    /// Decimal literal as written; `imaginary` for a trailing `i`.
    Num { text: String, imaginary: bool },
    /// Symbol with optional indices: generator, parameter, tensor, loop
    /// variable or the imaginary unit `i`.
    Var { name: String, indices: Vec<Expr> },
    /// `dot(x[..])`; indices may also be written after the parenthesis.
    Dot { name: String, indices: Vec<Expr> },
    Sum { var: String, lo: i64, hi: i64, body: Box<Expr> },
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
}

/// Inclusive index range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Range {
    pub lo: i64,
    pub hi: i64,
}

impl Range {
    pub fn contains(&self, k: i64) -> bool {
        self.lo <= k && k <= self.hi
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1).max(0) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorDecl {
    pub name: String,
    pub range: Option<Range>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TensorEntries {
    Scalar(Expr),
    List(Vec<TensorEntries>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decl {
    Generators { parity: Parity, items: Vec<GeneratorDecl> },
    Param { name: String, parity: Parity },
    Tensor { name: String, dims: Vec<Range>, entries: TensorEntries },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelDocument {
    pub name: String,
    pub decls: Vec<Decl>,
    pub lagrangian: Expr,
}

const ADD: u8 = 1;
const MUL: u8 = 2;
const UNARY: u8 = 3;

impl Expr {
    fn prec(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => ADD,
            Expr::Mul(..) | Expr::Div(..) => MUL,
            Expr::Neg(_) => UNARY,
            _ => UNARY + 1,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.prec() < min {
            f.write_str("(")?;
            self.write_at(f, 0)?;
            return f.write_str(")");
        }
        match self {
            Expr::Num { text, imaginary } => {
                f.write_str(text)?;
                if *imaginary {
                    f.write_str("i")?;
                }
                Ok(())
            }
            Expr::Var { name, indices } => {
                f.write_str(name)?;
                write_indices(f, indices)
            }
            Expr::Dot { name, indices } => {
                write!(f, "dot({name}")?;
                write_indices(f, indices)?;
                f.write_str(")")
            }
            Expr::Sum { var, lo, hi, body } => {
                write!(f, "sum({var} in {lo}..{hi}, ")?;
                body.write_at(f, 0)?;
                f.write_str(")")
            }
            Expr::Neg(x) => {
                f.write_str("-")?;
                x.write_at(f, UNARY)
            }
            Expr::Add(a, b) => binary(f, a, " + ", b, ADD),
            Expr::Sub(a, b) => binary(f, a, " - ", b, ADD),
            Expr::Mul(a, b) => binary(f, a, "*", b, MUL),
            Expr::Div(a, b) => binary(f, a, "/", b, MUL),
        }
    }
}

fn binary(f: &mut fmt::Formatter<'_>, a: &Expr, op: &str, b: &Expr, prec: u8) -> fmt::Result {
    a.write_at(f, prec)?;
    f.write_str(op)?;
    b.write_at(f, prec + 1)
}

fn write_indices(f: &mut fmt::Formatter<'_>, indices: &[Expr]) -> fmt::Result {
    if indices.is_empty() {
        return Ok(());
    }
    f.write_str("[")?;
    for (k, e) in indices.iter().enumerate() {
        if k > 0 {
            f.write_str(",")?;
        }
        e.write_at(f, 0)?;
    }
    f.write_str("]")
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.lo, self.hi)
    }
}

impl fmt::Display for TensorEntries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TensorEntries::Scalar(e) => write!(f, "{e}"),
            TensorEntries::List(items) => {
                f.write_str("[")?;
                for (k, x) in items.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str("]")
            }
        }
    }
}

impl fmt::Display for Decl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decl::Generators { parity, items } => {
                write!(f, "{parity} ")?;
                for (k, it) in items.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    f.write_str(&it.name)?;
                    if let Some(r) = it.range {
                        write!(f, "[{r}]")?;
                    }
                }
                Ok(())
            }
            Decl::Param { name, parity } => write!(f, "param {name}: {parity}"),
            Decl::Tensor { name, dims, entries } => {
                write!(f, "tensor {name}[")?;
                for (k, d) in dims.iter().enumerate() {
                    if k > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{d}")?;
                }
                write!(f, "] = {entries}")
            }
        }
    }
}

impl fmt::Display for ModelDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model {}", self.name)?;
        for d in &self.decls {
            writeln!(f, "{d}")?;
        }
        writeln!(f, "lagrangian: {}", self.lagrangian)
    }
}
