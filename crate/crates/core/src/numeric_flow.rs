//! Numeric evaluation in a finite Grassmann algebra `Λ_n` and fixed-step
//! integration of the characteristic equations along parameter paths.
//!
//! Values carry `2^n` coefficients indexed by subsets of `{1..n}` encoded
//! as bitmasks (bit `k-1` for generator `e_k`). Distances between values are
//! the maximum modulus over coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::brackets::berezin;
use crate::hamilton_jacobi::{HJSystem, IntegrabilityReport, TotalDifferentialSystem};
use crate::superalgebra::{Coefficient, Generator, GeneratorTable, Kind, SuperPoly};

/// Largest supported number of Grassmann generators.
pub const MAX_GENERATORS: usize = 12;

/// Tolerance for the initial point to lie on the constraint surface.
pub const SURFACE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FlowError {
    #[error("value assigned to `{generator}` has the wrong grade")]
    GradeMismatch { generator: String },
    #[error("no value assigned to `{0}`")]
    Unassigned(String),
    #[error("coefficient {0} is not real")]
    NonRealCoefficient(String),
    #[error("Λ_{0} exceeds the limit of {MAX_GENERATORS} generators")]
    AlgebraTooLarge(usize),
    #[error("generator index e{index} outside Λ_{n}")]
    GeneratorOutOfRange { index: usize, n: usize },
    #[error("path config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("invalid path: {0}")]
    Path(String),
    #[error("odd parameter `{0}` cannot follow a numeric path")]
    OddParameter(String),
    #[error("initial state is off the constraint surface: {hamiltonian} = {value:e}")]
    OffSurface { hamiltonian: String, value: f64 },
    #[error(transparent)]
    Algebra(#[from] crate::superalgebra::AlgebraError),
}

/// Scalar field for numeric coefficients.
pub trait FlowScalar:
    Copy + fmt::Debug + PartialEq + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    /// `None` when the field cannot represent a nonzero imaginary part.
    fn from_parts(re: f64, im: f64) -> Option<Self>;
    fn from_f64(x: f64) -> Self;
    fn modulus(self) -> f64;
    fn parts(self) -> (f64, f64);
}

impl FlowScalar for f64 {
    fn from_parts(re: f64, im: f64) -> Option<Self> {
        (im == 0.0).then_some(re)
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn parts(self) -> (f64, f64) {
        (self, 0.0)
    }
}

impl FlowScalar for f32 {
    fn from_parts(re: f64, im: f64) -> Option<Self> {
        (im == 0.0).then_some(re as f32)
    }
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn modulus(self) -> f64 {
        self.abs() as f64
    }
    fn parts(self) -> (f64, f64) {
        (self as f64, 0.0)
    }
}

impl FlowScalar for Complex<f64> {
    fn from_parts(re: f64, im: f64) -> Option<Self> {
        Some(Complex::new(re, im))
    }
    fn from_f64(x: f64) -> Self {
        Complex::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn parts(self) -> (f64, f64) {
        (self.re, self.im)
    }
}

/// `(-1)` to the number of transpositions needed to merge `a` before `b`.
fn merge_sign(a: usize, b: usize) -> bool {
    let mut swaps = 0u32;
    let mut rest = a;
    while rest != 0 {
        let i = rest.trailing_zeros();
        swaps += (b & ((1usize << i) - 1)).count_ones();
        rest &= rest - 1;
    }
    swaps % 2 == 1
}

/// Element of `Λ_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrassmannValue<S = Complex<f64>> {
    n: usize,
    coeffs: Vec<S>,
}

impl<S: FlowScalar> GrassmannValue<S> {
    pub fn zero(n: usize) -> Self {
        GrassmannValue { n, coeffs: vec![S::zero(); 1 << n] }
    }

    pub fn scalar(n: usize, s: S) -> Self {
        let mut v = Self::zero(n);
        v.coeffs[0] = s;
        v
    }

    /// The generator `e_k`, `k` in `1..=n`.
    pub fn generator(n: usize, k: usize) -> Result<Self, FlowError> {
        if k == 0 || k > n {
            return Err(FlowError::GeneratorOutOfRange { index: k, n });
        }
        let mut v = Self::zero(n);
        v.coeffs[1 << (k - 1)] = S::one();
        Ok(v)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn get(&self, mask: usize) -> S {
        self.coeffs[mask]
    }

    pub fn set(&mut self, mask: usize, s: S) {
        self.coeffs[mask] = s;
    }

    pub fn body(&self) -> S {
        self.coeffs[0]
    }

    /// Nonzero coefficients as `(subset, value)` with 1-based indices.
    pub fn support(&self) -> Vec<(Vec<usize>, S)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(m, &c)| ((1..=self.n).filter(|k| m & (1 << (k - 1)) != 0).collect(), c))
            .collect()
    }

    /// True when every nonzero coefficient sits on a subset of the given
    /// grade parity.
    pub fn has_grade(&self, odd: bool) -> bool {
        self.coeffs.iter().enumerate().all(|(m, c)| c.is_zero() || (m.count_ones() % 2 == 1) == odd)
    }

    pub fn max_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.modulus()).fold(0.0, f64::max)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (*a - *b).modulus()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: S) -> Self {
        GrassmannValue { n: self.n, coeffs: self.coeffs.iter().map(|&c| c * s).collect() }
    }

    fn axpy(&mut self, s: S, x: &Self) {
        for (a, &b) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *a = *a + s * b;
        }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let mut out = Self::zero(self.n);
        for (a, &ca) in self.coeffs.iter().enumerate() {
            if ca.is_zero() {
                continue;
            }
            for (b, &cb) in rhs.coeffs.iter().enumerate() {
                if a & b != 0 || cb.is_zero() {
                    continue;
                }
                let c = ca * cb;
                let slot = &mut out.coeffs[a | b];
                *slot = if merge_sign(a, b) { *slot - c } else { *slot + c };
            }
        }
        out
    }
}

impl<S: FlowScalar> Add for &GrassmannValue<S> {
    type Output = GrassmannValue<S>;
    fn add(self, rhs: Self) -> GrassmannValue<S> {
        let mut out = self.clone();
        out.axpy(S::one(), rhs);
        out
    }
}

impl<S: FlowScalar> Sub for &GrassmannValue<S> {
    type Output = GrassmannValue<S>;
    fn sub(self, rhs: Self) -> GrassmannValue<S> {
        let mut out = self.clone();
        out.axpy(-S::one(), rhs);
        out
    }
}

impl<S: FlowScalar> Mul for &GrassmannValue<S> {
    type Output = GrassmannValue<S>;
    fn mul(self, rhs: Self) -> GrassmannValue<S> {
        GrassmannValue::mul(self, rhs)
    }
}

impl<S: FlowScalar> Neg for &GrassmannValue<S> {
    type Output = GrassmannValue<S>;
    fn neg(self) -> GrassmannValue<S> {
        self.scale(-S::one())
    }
}

fn scalar_of<C: Coefficient, S: FlowScalar>(c: &C) -> Result<S, FlowError> {
    let (re, im) = c.to_f64_parts();
    S::from_parts(re, im).ok_or_else(|| FlowError::NonRealCoefficient(c.canonical_string()))
}

/// Polynomial with numeric coefficients and generators resolved to slots
/// of an assignment vector.
#[derive(Debug, Clone)]
struct Compiled<S> {
    terms: Vec<(S, Vec<(usize, u32)>)>,
}

impl<S: FlowScalar> Compiled<S> {
    fn new<C: Coefficient>(
        p: &SuperPoly<C>,
        slots: &BTreeMap<Generator, usize>,
        table: &GeneratorTable,
    ) -> Result<Self, FlowError> {
        let mut terms = Vec::new();
        for (factors, c) in p.terms() {
            let mut fs = Vec::new();
            for &(g, e) in factors {
                let slot = *slots.get(&g).ok_or_else(|| FlowError::Unassigned(table.name(g).to_string()))?;
                fs.push((slot, e));
            }
            terms.push((scalar_of(c)?, fs));
        }
        Ok(Compiled { terms })
    }

    fn eval(&self, n: usize, values: &[GrassmannValue<S>]) -> GrassmannValue<S> {
        let mut out = GrassmannValue::zero(n);
        for (c, fs) in &self.terms {
            let mut acc = GrassmannValue::scalar(n, *c);
            for &(slot, e) in fs {
                for _ in 0..e {
                    acc = acc.mul(&values[slot]);
                }
            }
            out.axpy(S::one(), &acc);
        }
        out
    }
}

/// Evaluates `p` with every generator replaced by its assigned value.
pub fn evaluate<C: Coefficient, S: FlowScalar>(
    p: &SuperPoly<C>,
    assignment: &BTreeMap<Generator, GrassmannValue<S>>,
    n: usize,
    table: &GeneratorTable,
) -> Result<GrassmannValue<S>, FlowError> {
    let mut slots = BTreeMap::new();
    let mut values = Vec::new();
    for g in p.generators() {
        let v = assignment.get(&g).ok_or_else(|| FlowError::Unassigned(table.name(g).to_string()))?;
        if v.n() != n {
            return Err(FlowError::Path(format!("value of `{}` lives in Λ_{}, expected Λ_{n}", table.name(g), v.n())));
        }
        if !v.has_grade(g.is_odd()) {
            return Err(FlowError::GradeMismatch { generator: table.name(g).to_string() });
        }
        slots.insert(g, values.len());
        values.push(v.clone());
    }
    Ok(Compiled::new(p, &slots, table)?.eval(n, &values))
}

/// Waypoints in `(t, free parameters…)` with a fixed step count per segment.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec {
    pub waypoints: Vec<Vec<f64>>,
    pub steps: usize,
}

impl PathSpec {
    pub fn new(waypoints: Vec<Vec<f64>>, steps: usize) -> Result<Self, FlowError> {
        if steps == 0 {
            return Err(FlowError::Path("steps must be at least 1".into()));
        }
        if waypoints.len() < 2 {
            return Err(FlowError::Path("a path needs at least two waypoints".into()));
        }
        let dim = waypoints[0].len();
        if waypoints.iter().any(|w| w.len() != dim) {
            return Err(FlowError::Path("waypoints differ in dimension".into()));
        }
        if waypoints.windows(2).any(|w| w[0] == w[1]) {
            return Err(FlowError::Path("consecutive waypoints coincide".into()));
        }
        Ok(PathSpec { waypoints, steps })
    }

    pub fn start(&self) -> &[f64] {
        &self.waypoints[0]
    }

    pub fn end(&self) -> &[f64] {
        self.waypoints.last().expect("validated")
    }
}

/// A `Λ` literal: sum of `coefficient · e_{k1} ⋯ e_{km}` terms.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaLiteral {
    pub terms: Vec<((f64, f64), Vec<usize>)>,
}

impl LambdaLiteral {
    pub fn to_value<S: FlowScalar>(&self, n: usize) -> Result<GrassmannValue<S>, FlowError> {
        let mut out = GrassmannValue::zero(n);
        for ((re, im), gens) in &self.terms {
            let c = S::from_parts(*re, *im).ok_or_else(|| FlowError::NonRealCoefficient(format!("{re}+{im}i")))?;
            let mut term = GrassmannValue::scalar(n, c);
            for &k in gens {
                term = term.mul(&GrassmannValue::generator(n, k)?);
            }
            out.axpy(S::one(), &term);
        }
        Ok(out)
    }

    /// Largest generator index used.
    pub fn max_generator(&self) -> usize {
        self.terms.iter().flat_map(|(_, g)| g.iter().copied()).max().unwrap_or(0)
    }
}

/// Run configuration: one or more paths, an optional algebra size and
/// initial values.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub paths: Vec<PathSpec>,
    pub algebra: Option<usize>,
    pub init: Vec<(String, LambdaLiteral)>,
}

fn parse_real(s: &str, line: usize) -> Result<f64, FlowError> {
    let err = || FlowError::Config { line, message: format!("bad number `{s}`") };
    let mut value = 1.0;
    let mut divide = false;
    let mut first = true;
    for part in s.split_inclusive(['*', '/']) {
        let (tok, op) = match part.strip_suffix('*') {
            Some(t) => (t, Some(false)),
            None => match part.strip_suffix('/') {
                Some(t) => (t, Some(true)),
                None => (part, None),
            },
        };
        let tok = tok.trim();
        let (neg, tok) = match tok.strip_prefix('-') {
            Some(t) if first => (true, t.trim()),
            _ => (false, tok),
        };
        let x = if tok == "pi" { std::f64::consts::PI } else { tok.parse::<f64>().map_err(|_| err())? };
        let x = if neg { -x } else { x };
        value = if divide { value / x } else { value * x };
        divide = op == Some(true);
        first = false;
    }
    Ok(value)
}

fn parse_lambda(src: &str, line: usize) -> Result<LambdaLiteral, FlowError> {
    let err = |m: String| FlowError::Config { line, message: m };
    let s: String = src.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(err("empty value".into()));
    }
    let mut terms = Vec::new();
    let mut rest = s.as_str();
    while !rest.is_empty() {
        let mut sign = 1.0;
        if let Some(r) = rest.strip_prefix('+') {
            rest = r;
        } else if let Some(r) = rest.strip_prefix('-') {
            sign = -1.0;
            rest = r;
        } else if !terms.is_empty() {
            return Err(err(format!("expected `+` or `-` before `{rest}`")));
        }
        let end = rest[1.min(rest.len())..].find(['+', '-']).map(|k| k + 1).unwrap_or(rest.len());
        // An exponent sign (`1e-3`) does not end the term.
        let mut end = end;
        while end < rest.len() && rest[..end].ends_with(['e', 'E']) && rest[..end - 1].ends_with(|c: char| c.is_ascii_digit()) {
            end = rest[end + 1..].find(['+', '-']).map(|k| k + end + 1).unwrap_or(rest.len());
        }
        let (term, tail) = rest.split_at(end);
        rest = tail;
        let mut coeff = (sign, 0.0);
        let mut gens = Vec::new();
        for factor in term.split('*') {
            if let Some(k) = factor.strip_prefix('e').filter(|k| !k.is_empty() && k.bytes().all(|b| b.is_ascii_digit())) {
                gens.push(k.parse::<usize>().map_err(|_| err(format!("bad generator `{factor}`")))?);
            } else if let Some(im) = factor.strip_suffix('i') {
                let x = if im.is_empty() { 1.0 } else { parse_real(im, line)? };
                coeff = (-coeff.1 * x, coeff.0 * x);
            } else {
                let x = parse_real(factor, line)?;
                coeff = (coeff.0 * x, coeff.1 * x);
            }
        }
        terms.push((coeff, gens));
    }
    Ok(LambdaLiteral { terms })
}

/// Parses a run configuration. Waypoint lines are comma-separated numbers
/// (`pi` and products such as `2*pi` allowed); each `steps N` line closes a
/// path; `algebra N` fixes `Λ_N`; `name = literal` sets an initial value.
pub fn parse_flow_config(src: &str) -> Result<FlowConfig, FlowError> {
    let mut paths = Vec::new();
    let mut current: Vec<Vec<f64>> = Vec::new();
    let mut algebra = None;
    let mut init = Vec::new();
    for (k, raw) in src.lines().enumerate() {
        let line = k + 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        if let Some(n) = text.strip_prefix("steps") {
            let steps = n.trim().parse().map_err(|_| FlowError::Config { line, message: "bad step count".into() })?;
            paths.push(PathSpec::new(std::mem::take(&mut current), steps)?);
        } else if let Some(n) = text.strip_prefix("algebra") {
            algebra = Some(n.trim().parse().map_err(|_| FlowError::Config { line, message: "bad algebra size".into() })?);
        } else if let Some((name, value)) = text.split_once('=') {
            init.push((name.trim().to_string(), parse_lambda(value, line)?));
        } else {
            current.push(text.split(',').map(|x| parse_real(x, line)).collect::<Result<_, _>>()?);
        }
    }
    if !current.is_empty() {
        return Err(FlowError::Config { line: src.lines().count(), message: "waypoints without a `steps` line".into() });
    }
    if paths.is_empty() {
        return Err(FlowError::Config { line: 0, message: "no path given".into() });
    }
    Ok(FlowConfig { paths, algebra, init })
}

/// `(parameter index, K0, [(free parameter index, K)])`.
type Dependent<S> = (usize, Compiled<S>, Vec<(usize, Compiled<S>)>);

/// Numeric form of the characteristic equations with the closure data
/// needed to follow dependent parameters.
#[derive(Debug, Clone)]
pub struct FlowSystem<S = Complex<f64>> {
    n: usize,
    /// Slot order: basis coordinates, basis momenta, constants.
    slots: Vec<Generator>,
    slot_of: BTreeMap<Generator, usize>,
    phase_len: usize,
    /// Parameter index of `t` followed by the free parameters.
    driven: Vec<usize>,
    dependent: Vec<Dependent<S>>,
    coeffs: Vec<Vec<Compiled<S>>>,
    dz: Vec<Compiled<S>>,
    constraints: Vec<(String, Compiled<S>)>,
    /// Primary `H_α` used to complete initial momenta; `H₀` first.
    h: Vec<Compiled<S>>,
    parameters: Vec<Generator>,
    names: Vec<String>,
}

/// Point along a path with the full phase-space state.
#[derive(Debug, Clone)]
pub struct FlowSample<S = Complex<f64>> {
    pub point: Vec<f64>,
    pub state: Vec<GrassmannValue<S>>,
    pub z: GrassmannValue<S>,
}

#[derive(Debug, Clone)]
pub struct FlowResult<S = Complex<f64>> {
    /// Generators in state order.
    pub generators: Vec<Generator>,
    pub samples: Vec<FlowSample<S>>,
    /// Accumulated `Z` at the endpoint.
    pub z: GrassmannValue<S>,
    /// Max over samples of `|H′|`, for each Hamiltonian.
    pub drift_per: Vec<(String, f64)>,
    pub drift: f64,
}

impl<S: FlowScalar> FlowResult<S> {
    pub fn endpoint(&self) -> &FlowSample<S> {
        self.samples.last().expect("at least the initial sample")
    }

    pub fn value(&self, g: Generator) -> Option<&GrassmannValue<S>> {
        let k = self.generators.iter().position(|&h| h == g)?;
        Some(&self.endpoint().state[k])
    }
}

impl<S: FlowScalar> FlowSystem<S> {
    pub fn new<C: Coefficient>(
        sys: &HJSystem<C>,
        tds: &TotalDifferentialSystem<C>,
        report: &IntegrabilityReport<C>,
        table: &GeneratorTable,
        n: usize,
    ) -> Result<Self, FlowError> {
        if n > MAX_GENERATORS {
            return Err(FlowError::AlgebraTooLarge(n));
        }
        let mut slots: Vec<Generator> = tds.coordinates.iter().map(|&(q, _)| q).collect();
        slots.extend(tds.coordinates.iter().map(|&(_, p)| p));
        let phase_len = slots.len();
        slots.extend(table.generators().filter(|g| g.kind() == Kind::Parameter));
        let slot_of: BTreeMap<Generator, usize> = slots.iter().enumerate().map(|(k, &g)| (g, k)).collect();
        let param_index = |g: Generator| tds.parameters.iter().position(|&p| p == g).expect("parameter");
        let mut driven = vec![0];
        for &f in &report.free_parameters {
            if f.is_odd() {
                return Err(FlowError::OddParameter(table.name(f).to_string()));
            }
            driven.push(param_index(f));
        }
        let compile = |p: &SuperPoly<C>| Compiled::new(p, &slot_of, table);
        let mut dependent = Vec::new();
        for rel in &report.dt_relations {
            let free = rel.free.iter().map(|(g, k)| Ok((param_index(*g), compile(k)?))).collect::<Result<_, FlowError>>()?;
            dependent.push((param_index(rel.parameter), compile(&rel.dt0)?, free));
        }
        let mut coeffs = Vec::new();
        for rows in [&tds.dq, &tds.dp] {
            for row in rows {
                coeffs.push(row.iter().map(compile).collect::<Result<Vec<_>, _>>()?);
            }
        }
        let dz = tds.dz.iter().map(compile).collect::<Result<_, _>>()?;
        let constraints =
            report.hamiltonians.iter().map(|h| Ok((h.label.clone(), compile(&h.expr)?))).collect::<Result<_, FlowError>>()?;
        let h = sys.h.iter().map(compile).collect::<Result<_, _>>()?;
        let names = slots.iter().map(|&g| table.name(g).to_string()).collect();
        Ok(FlowSystem {
            n,
            slots,
            slot_of,
            phase_len,
            driven,
            dependent,
            coeffs,
            dz,
            constraints,
            h,
            parameters: tds.parameters.clone(),
            names,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Dimension of a waypoint: `t` plus the free parameters.
    pub fn path_dim(&self) -> usize {
        self.driven.len()
    }

    pub fn phase_generators(&self) -> &[Generator] {
        &self.slots[..self.phase_len]
    }

    /// Builds the full initial assignment. Missing values are filled for
    /// `t` and free parameters from the first waypoint, for primary momenta
    /// from `p_α = −H_α` and for `P0` from `P0 = −H₀`.
    pub fn initial_state(
        &self,
        given: &BTreeMap<Generator, GrassmannValue<S>>,
        start: &[f64],
    ) -> Result<Vec<GrassmannValue<S>>, FlowError> {
        if start.len() != self.path_dim() {
            return Err(FlowError::Path(format!("waypoints need {} components", self.path_dim())));
        }
        let mut values: Vec<Option<GrassmannValue<S>>> = vec![None; self.slots.len()];
        for (g, v) in given {
            let k = *self.slot_of.get(g).ok_or_else(|| FlowError::Unassigned(format!("{g:?}")))?;
            if v.n() != self.n {
                return Err(FlowError::Path(format!("initial value of `{}` is not in Λ_{}", self.names[k], self.n)));
            }
            values[k] = Some(v.clone());
        }
        let pairs = self.phase_len / 2;
        for (d, &a) in self.driven.iter().enumerate() {
            let k = self.slot_of[&self.parameters[a]];
            values[k].get_or_insert_with(|| GrassmannValue::scalar(self.n, S::from_f64(start[d])));
        }
        let zero_missing = |values: &[Option<GrassmannValue<S>>]| -> Vec<GrassmannValue<S>> {
            values.iter().map(|v| v.clone().unwrap_or_else(|| GrassmannValue::zero(self.n))).collect()
        };
        // Primary momenta depend on coordinates and expressed momenta only.
        for (a, &param) in self.parameters.iter().enumerate().skip(1) {
            let k = pairs + self.slot_of[&param];
            if values[k].is_none() {
                let v = self.h[a].eval(self.n, &zero_missing(&values));
                values[k] = Some(-&v);
            }
        }
        let p0 = pairs + self.slot_of[&self.parameters[0]];
        if values[p0].is_none() {
            for (k, v) in values.iter().enumerate() {
                if v.is_none() && k != p0 {
                    return Err(FlowError::Unassigned(self.names[k].clone()));
                }
            }
            let v = self.h[0].eval(self.n, &zero_missing(&values));
            values[p0] = Some(-&v);
        }
        let mut out = Vec::with_capacity(values.len());
        for (k, v) in values.into_iter().enumerate() {
            let v = v.ok_or_else(|| FlowError::Unassigned(self.names[k].clone()))?;
            if !v.has_grade(self.slots[k].is_odd()) {
                return Err(FlowError::GradeMismatch { generator: self.names[k].clone() });
            }
            out.push(v);
        }
        for (label, c) in &self.constraints {
            let value = c.eval(self.n, &out).max_norm();
            if value > SURFACE_TOLERANCE {
                return Err(FlowError::OffSurface { hamiltonian: label.clone(), value });
            }
        }
        Ok(out)
    }

    /// Initial state from named literals of a configuration.
    pub fn initial_from_config(
        &self,
        config: &FlowConfig,
        table: &GeneratorTable,
        start: &[f64],
    ) -> Result<Vec<GrassmannValue<S>>, FlowError> {
        let mut given = BTreeMap::new();
        for (name, lit) in &config.init {
            let g = table.lookup(name).ok_or_else(|| FlowError::Unassigned(name.clone()))?;
            given.insert(g, lit.to_value(self.n)?);
        }
        self.initial_state(&given, start)
    }

    fn values_with(&self, phase: &[GrassmannValue<S>], consts: &[GrassmannValue<S>]) -> Vec<GrassmannValue<S>> {
        phase.iter().chain(consts).cloned().collect()
    }

    /// Increments of the phase variables and of `Z` for driven increments
    /// `delta` (same layout as waypoints).
    fn rate(&self, values: &[GrassmannValue<S>], delta: &[f64]) -> (Vec<GrassmannValue<S>>, GrassmannValue<S>) {
        let n = self.n;
        let mut dt: Vec<Option<GrassmannValue<S>>> = vec![None; self.parameters.len()];
        for (d, &a) in self.driven.iter().enumerate() {
            dt[a] = Some(GrassmannValue::scalar(n, S::from_f64(delta[d])));
        }
        for (a, k0, free) in &self.dependent {
            let mut v = k0.eval(n, values).mul(dt[0].as_ref().expect("t is driven"));
            for (f, k) in free {
                v.axpy(S::one(), &k.eval(n, values).mul(dt[*f].as_ref().expect("free parameter is driven")));
            }
            dt[*a] = Some(v);
        }
        let dt: Vec<GrassmannValue<S>> = dt.into_iter().map(|v| v.unwrap_or_else(|| GrassmannValue::zero(n))).collect();
        let apply = |row: &[Compiled<S>]| {
            let mut acc = GrassmannValue::zero(n);
            for (c, d) in row.iter().zip(&dt) {
                if d.max_norm() != 0.0 {
                    acc.axpy(S::one(), &c.eval(n, values).mul(d));
                }
            }
            acc
        };
        (self.coeffs.iter().map(|row| apply(row)).collect(), apply(&self.dz))
    }

    fn drift(&self, values: &[GrassmannValue<S>], worst: &mut [f64]) {
        for (w, (_, c)) in worst.iter_mut().zip(&self.constraints) {
            *w = w.max(c.eval(self.n, values).max_norm());
        }
    }

    /// Observables held fixed by the flow are not required; constants are
    /// read from `init` and never evolve.
    pub fn integrate(&self, path: &PathSpec, init: &[GrassmannValue<S>]) -> Result<FlowResult<S>, FlowError> {
        if path.start().len() != self.path_dim() {
            return Err(FlowError::Path(format!("waypoints need {} components", self.path_dim())));
        }
        let consts = &init[self.phase_len..];
        let mut phase = init[..self.phase_len].to_vec();
        let mut z = GrassmannValue::zero(self.n);
        let mut worst = vec![0.0; self.constraints.len()];
        let mut samples = Vec::new();
        let mut point = path.start().to_vec();
        let full = self.values_with(&phase, consts);
        self.drift(&full, &mut worst);
        samples.push(FlowSample { point: point.clone(), state: full, z: z.clone() });
        let half = S::from_f64(0.5);
        let sixth = S::from_f64(1.0 / 6.0);
        let two = S::from_f64(2.0);
        for seg in path.waypoints.windows(2) {
            let delta: Vec<f64> = seg[0].iter().zip(&seg[1]).map(|(a, b)| (b - a) / path.steps as f64).collect();
            for step in 1..=path.steps {
                let shifted = |ks: &[GrassmannValue<S>], s: S| -> Vec<GrassmannValue<S>> {
                    let mut y = phase.clone();
                    for (v, k) in y.iter_mut().zip(ks) {
                        v.axpy(s, k);
                    }
                    self.values_with(&y, consts)
                };
                let (k1, z1) = self.rate(&self.values_with(&phase, consts), &delta);
                let (k2, z2) = self.rate(&shifted(&k1, half), &delta);
                let (k3, z3) = self.rate(&shifted(&k2, half), &delta);
                let (k4, z4) = self.rate(&shifted(&k3, S::one()), &delta);
                for (i, v) in phase.iter_mut().enumerate() {
                    let mut inc = k1[i].clone();
                    inc.axpy(two, &k2[i]);
                    inc.axpy(two, &k3[i]);
                    inc.axpy(S::one(), &k4[i]);
                    v.axpy(sixth, &inc);
                }
                let mut zinc = z1;
                zinc.axpy(two, &z2);
                zinc.axpy(two, &z3);
                zinc.axpy(S::one(), &z4);
                z.axpy(sixth, &zinc);
                point = seg[0].iter().zip(&seg[1]).map(|(a, b)| a + (b - a) * step as f64 / path.steps as f64).collect();
                let full = self.values_with(&phase, consts);
                self.drift(&full, &mut worst);
                samples.push(FlowSample { point: point.clone(), state: full, z: z.clone() });
            }
        }
        let drift_per: Vec<(String, f64)> =
            self.constraints.iter().zip(worst).map(|((l, _), w)| (l.clone(), w)).collect();
        let drift = drift_per.iter().map(|(_, w)| *w).fold(0.0, f64::max);
        Ok(FlowResult { generators: self.slots.clone(), samples, z, drift_per, drift })
    }
}

/// Integrates one path with the fixed-step fourth-order scheme.
pub fn integrate_flow<S: FlowScalar>(
    flow: &FlowSystem<S>,
    path: &PathSpec,
    init: &[GrassmannValue<S>],
) -> Result<FlowResult<S>, FlowError> {
    flow.integrate(path, init)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservableCheck {
    pub name: String,
    pub first_class: bool,
    pub discrepancy: f64,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathIndependenceReport {
    pub strict: bool,
    pub tolerance: f64,
    pub observables: Vec<ObservableCheck>,
    /// Endpoint `|H′|` on each path.
    pub constraints: Vec<(String, f64, f64)>,
    pub z_discrepancy: f64,
    pub passed: bool,
}

impl PathIndependenceReport {
    pub fn flagged(&self) -> Vec<&str> {
        self.observables.iter().filter(|o| !o.first_class).map(|o| o.name.as_str()).collect()
    }
}

/// Coordinates and momenta `F` with `{F, H′}` weakly zero for every `H′`.
pub fn first_class_observables<C: Coefficient>(
    sys: &HJSystem<C>,
    report: &IntegrabilityReport<C>,
    table: &GeneratorTable,
) -> Result<BTreeMap<Generator, bool>, crate::hamilton_jacobi::HjError> {
    let mut out = BTreeMap::new();
    for h in table.coordinates() {
        for g in [h.coordinate, h.momentum] {
            let f = SuperPoly::generator(g);
            let mut first = true;
            for hp in &report.hamiltonians {
                let b = berezin(&f, &hp.expr, &sys.basis)?;
                if !report.reducer.is_weakly_zero(&b, table)? {
                    first = false;
                    break;
                }
            }
            out.insert(g, first);
        }
    }
    Ok(out)
}

/// Integrates two paths with shared endpoints and compares the endpoint
/// states. For systems that are not strictly integrable only first-class
/// observables and constraint values must agree.
#[allow(clippy::too_many_arguments)]
pub fn path_independence_check<C: Coefficient, S: FlowScalar>(
    flow: &FlowSystem<S>,
    sys: &HJSystem<C>,
    report: &IntegrabilityReport<C>,
    table: &GeneratorTable,
    path_a: &PathSpec,
    path_b: &PathSpec,
    init: &[GrassmannValue<S>],
    tolerance: f64,
) -> Result<PathIndependenceReport, FlowError> {
    if path_a.start() != path_b.start() || path_a.end() != path_b.end() {
        return Err(FlowError::Path("paths do not share endpoints".into()));
    }
    let a = flow.integrate(path_a, init)?;
    let b = flow.integrate(path_b, init)?;
    let strict = report.strictly_integrable();
    let classes = first_class_observables(sys, report, table).map_err(|e| FlowError::Path(e.to_string()))?;
    let mut observables = Vec::new();
    let mut passed = true;
    for (&g, &first_class) in &classes {
        let discrepancy = a.value(g).expect("phase generator").distance(b.value(g).expect("phase generator"));
        let agrees = discrepancy <= tolerance;
        if (strict || first_class) && !agrees {
            passed = false;
        }
        observables.push(ObservableCheck { name: table.name(g).to_string(), first_class: strict || first_class, discrepancy, agrees });
    }
    let end_a = &a.endpoint().state;
    let end_b = &b.endpoint().state;
    let constraints: Vec<(String, f64, f64)> = flow
        .constraints
        .iter()
        .map(|(l, c)| (l.clone(), c.eval(flow.n, end_a).max_norm(), c.eval(flow.n, end_b).max_norm()))
        .collect();
    passed &= constraints.iter().all(|(_, x, y)| *x <= tolerance && *y <= tolerance);
    let z_discrepancy = a.z.distance(&b.z);
    if strict {
        passed &= z_discrepancy <= tolerance;
    }
    Ok(PathIndependenceReport { strict, tolerance, observables, constraints, z_discrepancy, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    type V = GrassmannValue<f64>;

    #[test]
    fn exterior_signs() {
        let e1 = V::generator(3, 1).unwrap();
        let e2 = V::generator(3, 2).unwrap();
        let e3 = V::generator(3, 3).unwrap();
        let a = e1.mul(&e2);
        let b = e2.mul(&e1);
        assert_eq!(a.get(0b011), 1.0);
        assert_eq!(b.get(0b011), -1.0);
        assert_eq!(e1.mul(&e1).max_norm(), 0.0);
        assert_eq!(e3.mul(&e1).mul(&e2).get(0b111), 1.0);
        assert_eq!(e2.mul(&e3).mul(&e1).get(0b111), 1.0);
        assert_eq!(e2.mul(&e1).mul(&e3).get(0b111), -1.0);
    }

    #[test]
    fn literals_and_config() {
        let cfg = parse_flow_config("0\n2*pi\nsteps 2000\nalgebra 2\nq = 1\npsi = 0.5*e1 - 2i*e2 # odd\n").unwrap();
        assert_eq!(cfg.paths.len(), 1);
        assert!((cfg.paths[0].end()[0] - 2.0 * std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(cfg.algebra, Some(2));
        assert_eq!(cfg.init[1].1.terms, vec![((0.5, 0.0), vec![1]), ((-0.0, -2.0), vec![2])]);
        assert!(parse_flow_config("0\n0\nsteps 3\n").is_err());
        assert!(parse_flow_config("0\n1\nsteps 0\n").is_err());
        let lit = parse_lambda("1e-3*e1+2", 1).unwrap();
        assert_eq!(lit.terms, vec![((1e-3, 0.0), vec![1]), ((2.0, 0.0), vec![])]);
        let lit = parse_lambda("e1 - 0.5i*e2*e3", 1).unwrap();
        assert_eq!(lit.terms, vec![((1.0, 0.0), vec![1]), ((-0.0, -0.5), vec![2, 3])]);
    }
}
