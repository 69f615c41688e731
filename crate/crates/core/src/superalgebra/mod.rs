//! Graded-commutative symbolic kernel.
//!
//! Expressions are polynomials over even (commuting) and odd (anticommuting)
//! generators with exact coefficients. Every value is kept in a canonical form
//! so that structural equality coincides with algebraic equality.

mod coeff;
mod display;
mod matrix;
mod poly;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::Add;

use serde::Serialize;
use thiserror::Error;

pub use coeff::{gaussian, Coefficient, GaussianRational, Rational};
pub use display::PolyDisplay;
pub use matrix::{NumMatrix, PolyMatrix, RowEchelon};
pub use poly::{Factors, Monomial, SuperPoly};

/// Grading of a generator or homogeneous expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn is_odd(self) -> bool {
        self == Parity::Odd
    }

    pub fn bit(self) -> u8 {
        self as u8
    }

    /// `(-1)^(self * other)` as a boolean "negate" flag.
    pub fn sign_with(self, other: Parity) -> bool {
        self.is_odd() && other.is_odd()
    }
}

impl Add for Parity {
    type Output = Parity;

    fn add(self, rhs: Parity) -> Parity {
        if self == rhs {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        })
    }
}

/// Role of a generator. The declaration order of the variants is the first
/// key of the global generator order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Coordinate,
    Velocity,
    Momentum,
    Parameter,
    Auxiliary,
}

/// A symbol of the algebra. Ordering is `(kind, declaration sequence)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Generator {
    kind: Kind,
    seq: u32,
    parity: Parity,
}

impl Generator {
    pub fn kind(self) -> Kind {
        self.kind
    }

    pub fn parity(self) -> Parity {
        self.parity
    }

    pub fn is_odd(self) -> bool {
        self.parity.is_odd()
    }

    pub fn seq(self) -> u32 {
        self.seq
    }
}

#[derive(Debug, Clone)]
pub struct GeneratorInfo {
    pub name: String,
    /// `(family, index)` for members of an indexed family such as `psi[2]`.
    pub family: Option<(String, i64)>,
    /// For velocities, momenta and multipliers: the coordinate they belong to.
    pub coordinate: Option<Generator>,
}

/// The generators attached to one declared coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CoordinateHandle {
    pub coordinate: Generator,
    pub velocity: Generator,
    pub momentum: Generator,
    pub multiplier: Generator,
}

impl CoordinateHandle {
    pub fn parity(&self) -> Parity {
        self.coordinate.parity()
    }
}

/// Registry of generators with their names and links.
///
/// A fresh table already contains the time pair `(t, P0)` used by the
/// extended phase space.
#[derive(Debug, Clone)]
pub struct GeneratorTable {
    info: BTreeMap<Generator, GeneratorInfo>,
    by_name: HashMap<String, Generator>,
    counters: [u32; 5],
    coordinates: Vec<CoordinateHandle>,
    parameters: Vec<Generator>,
    time: Generator,
    time_momentum: Generator,
}

impl Default for GeneratorTable {
    fn default() -> Self {
        Self::new()
    }
}

impl GeneratorTable {
    pub fn new() -> Self {
        let mut table = GeneratorTable {
            info: BTreeMap::new(),
            by_name: HashMap::new(),
            counters: [0; 5],
            coordinates: Vec::new(),
            parameters: Vec::new(),
            time: Generator { kind: Kind::Coordinate, seq: 0, parity: Parity::Even },
            time_momentum: Generator { kind: Kind::Momentum, seq: 0, parity: Parity::Even },
        };
        let t = table.push("t", Kind::Coordinate, Parity::Even, None, None).unwrap();
        let p0 = table.push("P0", Kind::Momentum, Parity::Even, None, Some(t)).unwrap();
        table.time = t;
        table.time_momentum = p0;
        table
    }

    fn push(
        &mut self,
        name: &str,
        kind: Kind,
        parity: Parity,
        family: Option<(String, i64)>,
        coordinate: Option<Generator>,
    ) -> Result<Generator, AlgebraError> {
        if self.by_name.contains_key(name) {
            return Err(AlgebraError::DuplicateGenerator(name.to_string()));
        }
        let slot = &mut self.counters[kind as usize];
        let g = Generator { kind, seq: *slot, parity };
        *slot += 1;
        self.info.insert(g, GeneratorInfo { name: name.to_string(), family, coordinate });
        self.by_name.insert(name.to_string(), g);
        Ok(g)
    }

    /// Declares a coordinate together with its velocity, conjugate momentum
    /// and Lagrange multiplier, all of the same parity.
    pub fn declare_coordinate(
        &mut self,
        name: &str,
        parity: Parity,
        family: Option<(String, i64)>,
    ) -> Result<CoordinateHandle, AlgebraError> {
        let q = self.push(name, Kind::Coordinate, parity, family.clone(), None)?;
        let v = self.push(&format!("dot({name})"), Kind::Velocity, parity, family.clone(), Some(q))?;
        let p = self.push(&format!("p({name})"), Kind::Momentum, parity, family.clone(), Some(q))?;
        let l = self.push(&format!("v({name})"), Kind::Auxiliary, parity, family, Some(q))?;
        let handle = CoordinateHandle { coordinate: q, velocity: v, momentum: p, multiplier: l };
        self.coordinates.push(handle);
        Ok(handle)
    }

    /// Declares a constant symbol such as a mass or a coupling.
    pub fn declare_parameter(&mut self, name: &str, parity: Parity) -> Result<Generator, AlgebraError> {
        let g = self.push(name, Kind::Parameter, parity, None, None)?;
        self.parameters.push(g);
        Ok(g)
    }

    /// Declares a free-standing auxiliary symbol (test inputs, scratch).
    pub fn declare_auxiliary(&mut self, name: &str, parity: Parity) -> Result<Generator, AlgebraError> {
        self.push(name, Kind::Auxiliary, parity, None, None)
    }

    pub fn name(&self, g: Generator) -> &str {
        self.info.get(&g).map(|i| i.name.as_str()).unwrap_or("?")
    }

    pub fn info(&self, g: Generator) -> Option<&GeneratorInfo> {
        self.info.get(&g)
    }

    pub fn lookup(&self, name: &str) -> Option<Generator> {
        self.by_name.get(name).copied()
    }

    pub fn coordinates(&self) -> &[CoordinateHandle] {
        &self.coordinates
    }

    pub fn parameters(&self) -> &[Generator] {
        &self.parameters
    }

    pub fn coordinate_handle(&self, g: Generator) -> Option<&CoordinateHandle> {
        self.coordinates
            .iter()
            .find(|h| h.coordinate == g || h.velocity == g || h.momentum == g || h.multiplier == g)
    }

    pub fn time(&self) -> Generator {
        self.time
    }

    pub fn time_momentum(&self) -> Generator {
        self.time_momentum
    }

    pub fn generators(&self) -> impl Iterator<Item = Generator> + '_ {
        self.info.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.info.len()
    }

    pub fn is_empty(&self) -> bool {
        self.info.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("expression mixes even and odd terms")]
    MixedParity,
    #[error("substitution {generator} -> expression changes parity")]
    ParityMismatch { generator: String },
    #[error("generator `{0}` declared twice")]
    DuplicateGenerator(String),
    #[error("matrix body is singular")]
    SingularBody,
    #[error("matrix entry has a non-numeric body (an even, non-constant term)")]
    NonNumericBody,
    #[error("matrix dimensions do not match: {0}")]
    Shape(String),
}
