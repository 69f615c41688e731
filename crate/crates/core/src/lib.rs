//! Symbolic analysis of singular Lagrangian systems over even and odd
//! variables: Legendre map, Dirac constraint algorithm, Hamilton-Jacobi
//! integrability and numeric multi-time flows in a finite Grassmann algebra.

pub mod brackets;
pub mod dirac;
pub mod frontend;
pub mod hamilton_jacobi;
pub mod legendre;
pub mod numeric_flow;
pub mod superalgebra;

pub use superalgebra::{GaussianRational, Generator, GeneratorTable, Kind, Parity, Rational, SuperPoly};

/// Polynomial with exact complex-rational coefficients.
pub type Poly = SuperPoly<GaussianRational>;
/// Polynomial with exact real-rational coefficients.
pub type RealPoly = SuperPoly<Rational>;
/// Numeric values in a finite Grassmann algebra with complex coefficients.
pub type Lambda = numeric_flow::GrassmannValue<num_complex::Complex<f64>>;
