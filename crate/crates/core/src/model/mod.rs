//! Optimization models written in the line-oriented model language.
//!
//! A [`LinearModel`] is produced by [`parse_model`], printed back by
//! [`render_model`] and lowered to the minimization-oriented
//! [`StandardFormLP`] by [`to_standard_form`].

mod expr;
pub(crate) mod parse;
mod render;
mod standard;

pub use parse::parse_model;
pub use render::{format_number, render_model};
pub use standard::{to_standard_form, SparseRow, StandardFormLP};

use thiserror::Error;

/// Marker opening the data region (parameter insertions).
pub const DATA_BEGIN: &str = "# EOR DATA BEGIN";
/// Marker closing the data region.
pub const DATA_END: &str = "# EOR DATA END";
/// Marker opening the editable constraint region.
pub const CONSTRAINT_BEGIN: &str = "# EOR CONSTRAINT BEGIN";
/// Marker closing the editable constraint region.
pub const CONSTRAINT_END: &str = "# EOR CONSTRAINT END";

/// The four marker lines in their required order.
pub const MARKERS: [&str; 4] = [DATA_BEGIN, DATA_END, CONSTRAINT_BEGIN, CONSTRAINT_END];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Whether a constraint sits between the constraint markers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Fixed,
    Editable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableDef {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub objective_coeff: f64,
    pub is_integer: bool,
    pub ordinal: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintDef {
    pub name: String,
    /// Nonzero coefficients keyed by variable name, in variable ordinal order.
    pub terms: Vec<(String, f64)>,
    pub lower: f64,
    pub upper: f64,
    pub region: Region,
    pub ordinal: usize,
}

impl ConstraintDef {
    pub fn coefficient(&self, variable: &str) -> f64 {
        self.terms
            .iter()
            .find(|(name, _)| name == variable)
            .map_or(0.0, |&(_, c)| c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamDef {
    pub name: String,
    pub value: f64,
    pub ordinal: usize,
}

#[derive(Debug, Clone)]
pub struct LinearModel {
    pub sense: Sense,
    pub description: String,
    pub params: Vec<ParamDef>,
    pub variables: Vec<VariableDef>,
    pub constraints: Vec<ConstraintDef>,
    pub source_text: String,
}

impl LinearModel {
    /// Value of the last definition of `name`.
    pub fn param(&self, name: &str) -> Option<f64> {
        self.params
            .iter()
            .rev()
            .find(|p| p.name == name)
            .map(|p| p.value)
    }

    pub fn variable(&self, name: &str) -> Option<&VariableDef> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn constraint(&self, name: &str) -> Option<&ConstraintDef> {
        self.constraints.iter().find(|c| c.name == name)
    }

    pub fn integer_mask(&self) -> Vec<bool> {
        self.variables.iter().map(|v| v.is_integer).collect()
    }

    /// Equality on everything except the original source text.
    pub fn same_semantics(&self, other: &LinearModel) -> bool {
        self.sense == other.sense
            && self.description == other.description
            && self.params == other.params
            && self.variables == other.variables
            && self.constraints == other.constraints
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: undeclared variable `{name}`")]
    UndeclaredVariable { line: usize, name: String },
    #[error("line {line}, column {column}: nonlinear term (product or quotient of variables)")]
    Nonlinear { line: usize, column: usize },
    #[error("marker error: {0}")]
    Marker(String),
    #[error("line {line}: unresolvable parameter reference `{name}`")]
    UnresolvedParam { line: usize, name: String },
    #[error("line {line}: duplicate constraint name `{name}`")]
    DuplicateConstraint { line: usize, name: String },
    #[error("line {line}: `{name}` has lower bound {lower} above upper bound {upper}")]
    InvalidBounds {
        line: usize,
        name: String,
        lower: f64,
        upper: f64,
    },
}

impl ModelError {
    pub fn line(&self) -> Option<usize> {
        match self {
            ModelError::Syntax { line, .. }
            | ModelError::UndeclaredVariable { line, .. }
            | ModelError::Nonlinear { line, .. }
            | ModelError::UnresolvedParam { line, .. }
            | ModelError::DuplicateConstraint { line, .. }
            | ModelError::InvalidBounds { line, .. } => Some(*line),
            ModelError::Marker(_) => None,
        }
    }
}
