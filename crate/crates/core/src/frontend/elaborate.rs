use std::collections::HashMap;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::Zero;

use super::ast::{Decl, Expr, ModelDocument, Range, TensorEntries};
use super::FrontendError;
use crate::legendre::LagrangianModel;
use crate::superalgebra::{Coefficient, GaussianRational, Generator, GeneratorTable, Parity, SuperPoly};
use crate::Poly;

struct Tensor {
    dims: Vec<Range>,
    values: Vec<GaussianRational>,
}

struct Env<'a> {
    table: &'a GeneratorTable,
    families: HashMap<String, Option<Range>>,
    tensors: HashMap<String, Tensor>,
    loops: Vec<(String, i64)>,
}

/// Expands sums and tensor contractions into a model over scalar generators.
pub fn elaborate(doc: &ModelDocument) -> Result<LagrangianModel, FrontendError> {
    let mut table = GeneratorTable::new();
    let mut families = HashMap::new();
    let mut raw_tensors = Vec::new();
    for d in &doc.decls {
        match d {
            Decl::Generators { parity, items } => {
                for it in items {
                    families.insert(it.name.clone(), it.range);
                    match it.range {
                        None => {
                            table.declare_coordinate(&it.name, *parity, None)?;
                        }
                        Some(r) => {
                            for k in r.lo..=r.hi {
                                table.declare_coordinate(&format!("{}[{k}]", it.name), *parity, Some((it.name.clone(), k)))?;
                            }
                        }
                    }
                }
            }
            Decl::Param { name, parity } => {
                table.declare_parameter(name, *parity)?;
            }
            Decl::Tensor { name, dims, entries } => raw_tensors.push((name.clone(), dims.clone(), entries)),
        }
    }
    let mut env = Env { table: &table, families, tensors: HashMap::new(), loops: Vec::new() };
    for (name, dims, entries) in raw_tensors {
        let mut values = Vec::new();
        flatten(entries, &mut |e| {
            let v = env.eval(e)?;
            let c = v.as_constant().ok_or_else(|| FrontendError::UnboundConstant(format!("entry of tensor `{name}` is not numeric: {e}")))?;
            values.push(c);
            Ok(())
        })?;
        env.tensors.insert(name, Tensor { dims, values });
    }
    let lagrangian = env.eval(&doc.lagrangian)?;
    match lagrangian.parity_of() {
        Ok(Parity::Even) => {}
        _ => return Err(FrontendError::MixedParity),
    }
    Ok(LagrangianModel::new(doc.name.clone(), table, lagrangian)?)
}

fn flatten(
    e: &TensorEntries,
    f: &mut dyn FnMut(&Expr) -> Result<(), FrontendError>,
) -> Result<(), FrontendError> {
    match e {
        TensorEntries::Scalar(x) => f(x),
        TensorEntries::List(items) => items.iter().try_for_each(|x| flatten(x, f)),
    }
}

fn literal(text: &str) -> BigRational {
    match text.split_once('.') {
        Some((int, frac)) => {
            let den = BigInt::from(10u32).pow(frac.len() as u32);
            let num: BigInt = format!("{int}{frac}").parse().expect("lexer guarantees digits");
            BigRational::new(num, den)
        }
        None => BigRational::from_integer(text.parse().expect("lexer guarantees digits")),
    }
}

impl Env<'_> {
    fn loop_value(&self, name: &str) -> Option<i64> {
        self.loops.iter().rev().find(|(v, _)| v == name).map(|(_, k)| *k)
    }

    fn eval_int(&self, e: &Expr) -> Result<i64, FrontendError> {
        match e {
            Expr::Num { text, imaginary: false } => {
                text.parse().map_err(|_| FrontendError::UnboundConstant(format!("index `{text}` is not an integer")))
            }
            Expr::Var { name, indices } if indices.is_empty() => self
                .loop_value(name)
                .ok_or_else(|| FrontendError::UnboundConstant(format!("index `{name}` is not a summation variable"))),
            Expr::Neg(x) => Ok(-self.eval_int(x)?),
            Expr::Add(a, b) => Ok(self.eval_int(a)? + self.eval_int(b)?),
            Expr::Sub(a, b) => Ok(self.eval_int(a)? - self.eval_int(b)?),
            Expr::Mul(a, b) => Ok(self.eval_int(a)? * self.eval_int(b)?),
            other => Err(FrontendError::UnboundConstant(format!("index `{other}` is not an integer expression"))),
        }
    }

    fn generator(&self, name: &str, indices: &[Expr]) -> Result<Generator, FrontendError> {
        let range = self.families.get(name).ok_or_else(|| FrontendError::UnknownSymbol {
            name: name.to_string(),
            line: 0,
            col: 0,
        })?;
        let full = match (range, indices) {
            (None, []) => name.to_string(),
            (Some(r), [ix]) => {
                let k = self.eval_int(ix)?;
                if !r.contains(k) {
                    return Err(FrontendError::IndexOutOfRange { name: name.to_string(), index: k, line: 0, col: 0 });
                }
                format!("{name}[{k}]")
            }
            _ => return Err(FrontendError::UnboundConstant(format!("wrong number of indices for `{name}`"))),
        };
        Ok(self.table.lookup(&full).expect("declared during elaboration"))
    }

    fn eval(&mut self, e: &Expr) -> Result<Poly, FrontendError> {
        Ok(match e {
            Expr::Num { text, imaginary } => {
                let r = literal(text);
                Poly::constant(if *imaginary { Complex::new(BigRational::zero(), r) } else { Complex::new(r, BigRational::zero()) })
            }
            Expr::Var { name, indices } => {
                if let Some(k) = self.loop_value(name) {
                    Poly::integer(k)
                } else if let Some(t) = self.tensors.get(name) {
                    let mut flat = 0usize;
                    for (ix, d) in indices.iter().zip(&t.dims) {
                        let k = self.eval_int(ix)?;
                        if !d.contains(k) {
                            return Err(FrontendError::IndexOutOfRange { name: name.clone(), index: k, line: 0, col: 0 });
                        }
                        flat = flat * d.len() + (k - d.lo) as usize;
                    }
                    Poly::constant(t.values[flat].clone())
                } else if self.families.contains_key(name) {
                    SuperPoly::generator(self.generator(name, indices)?)
                } else if let Some(g) = self.table.lookup(name) {
                    SuperPoly::generator(g)
                } else if name == "i" {
                    Poly::constant(GaussianRational::imaginary_unit().expect("complex field"))
                } else {
                    return Err(FrontendError::UnboundConstant(name.clone()));
                }
            }
            Expr::Dot { name, indices } => {
                let g = self.generator(name, indices)?;
                let v = self.table.coordinate_handle(g).expect("coordinate").velocity;
                SuperPoly::generator(v)
            }
            Expr::Sum { var, lo, hi, body } => {
                let mut acc = Poly::zero();
                for k in *lo..=*hi {
                    self.loops.push((var.clone(), k));
                    let term = self.eval(body);
                    self.loops.pop();
                    acc += &term?;
                }
                acc
            }
            Expr::Neg(x) => -self.eval(x)?,
            Expr::Add(a, b) => self.eval(a)? + self.eval(b)?,
            Expr::Sub(a, b) => self.eval(a)? - self.eval(b)?,
            Expr::Mul(a, b) => self.eval(a)? * self.eval(b)?,
            Expr::Div(a, b) => {
                let d = self.eval(b)?;
                let inv = d
                    .as_constant()
                    .and_then(|c| c.inverse())
                    .ok_or_else(|| FrontendError::UnboundConstant(format!("divisor `{b}` is not a nonzero number")))?;
                self.eval(a)?.scale(&inv)
            }
        })
    }
}
