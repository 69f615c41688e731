//! Model description language: lexer, parser, elaboration into a
//! [`LagrangianModel`](crate::legendre::LagrangianModel), and reports.

pub mod ast;
pub mod elaborate;
pub mod lexer;
pub mod parser;
pub mod report;

use thiserror::Error;

use crate::dirac::DiracError;
use crate::hamilton_jacobi::HjError;
use crate::legendre::{LagrangianModel, LegendreError};
use crate::numeric_flow::FlowError;
use crate::superalgebra::AlgebraError;

pub use ast::ModelDocument;
pub use elaborate::elaborate;
pub use parser::parse_model;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrontendError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("unknown symbol `{name}` at {line}:{col}")]
    UnknownSymbol { name: String, line: usize, col: usize },
    #[error("index {index} of `{name}` out of range at {line}:{col}")]
    IndexOutOfRange { name: String, index: i64, line: usize, col: usize },
    #[error("expression is not a numeric constant: {0}")]
    UnboundConstant(String),
    #[error("lagrangian is not even")]
    MixedParity,
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Model(LegendreError),
    #[error(transparent)]
    Dirac(#[from] DiracError),
    #[error(transparent)]
    HamiltonJacobi(#[from] HjError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("cannot read `{path}`: {message}")]
    Io { path: String, message: String },
}

impl From<LegendreError> for FrontendError {
    fn from(e: LegendreError) -> Self {
        match e {
            LegendreError::OddLagrangian => FrontendError::MixedParity,
            other => FrontendError::Model(other),
        }
    }
}

/// Parses and elaborates a model file in one step.
pub fn load_model(src: &str) -> Result<LagrangianModel, FrontendError> {
    elaborate(&parse_model(src)?)
}

impl FrontendError {
    /// Stable machine-readable name of the error.
    pub fn kind(&self) -> &'static str {
        match self {
            FrontendError::Syntax { .. } => "syntax",
            FrontendError::UnknownSymbol { .. } => "unknown_symbol",
            FrontendError::IndexOutOfRange { .. } => "index_out_of_range",
            FrontendError::UnboundConstant(_) => "unbound_constant",
            FrontendError::MixedParity => "mixed_parity",
            FrontendError::Algebra(_) => "algebra",
            FrontendError::Model(_) => "model",
            FrontendError::Dirac(DiracError::Inconsistent { .. })
            | FrontendError::HamiltonJacobi(HjError::Inconsistent { .. })
            | FrontendError::HamiltonJacobi(HjError::Reduction(DiracError::Inconsistent { .. })) => "inconsistent",
            FrontendError::Dirac(_) => "dirac",
            FrontendError::HamiltonJacobi(_) => "hamilton_jacobi",
            FrontendError::Flow(_) => "flow",
            FrontendError::Io { .. } => "io",
        }
    }

    /// True for contradictions found by the analysis, as opposed to
    /// malformed or unsupported input.
    pub fn is_inconsistency(&self) -> bool {
        self.kind() == "inconsistent"
    }
}
