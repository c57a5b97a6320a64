//! Reading and writing the PPDDL subset.
//!
//! The supported input language is STRIPS with typing, conjunctive
//! preconditions of literals and (in)equalities, effects built from
//! conjunction, `not`, `when` with a conjunctive condition, and one
//! level of `probabilistic`, plus a probabilistic `:init`. Constructs
//! outside the subset (`forall`, disjunctions, nested `probabilistic`)
//! are rejected with the offending source position; reward bookkeeping
//! is skipped with a warning so unedited competition-style files load.

mod parser;
pub mod plan_text;
mod printer;
pub mod sexpr;

use std::fmt;

use crate::domain::{ActionSchema, AtomTable, GroundLit, InitialDistribution};
use crate::search::TerminationCriteria;
use crate::symbols::SymbolTable;

pub use plan_text::{document_to_plan, read_plan, write_incremental, write_plan, PlanDocument};
pub use printer::print_domain;
use sexpr::Pos;

#[derive(Debug, Clone, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unsupported construct: {0}")]
    Unsupported(String),
    #[error("error: {0}")]
    Semantic(String),
}

/// A parse failure with the position it was detected at.
#[derive(Debug, Clone, thiserror::Error)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: u32,
    pub col: u32,
}

impl ParseError {
    pub(crate) fn new(kind: ParseErrorKind, pos: Pos) -> Self {
        ParseError {
            kind,
            line: pos.line,
            col: pos.col,
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.kind)
    }
}

/// A non-fatal note produced while parsing, e.g. an ignored reward
/// update.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warning {
    pub message: String,
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: warning: {}", self.line, self.col, self.message)
    }
}

/// A parsed domain: symbol tables plus normalized action schemas.
#[derive(Debug, Clone)]
pub struct SourceDomain {
    pub name: String,
    pub table: SymbolTable,
    pub schemas: Vec<ActionSchema>,
    pub warnings: Vec<Warning>,
}

impl SourceDomain {
    pub fn schema_by_name(&self, name: &str) -> Option<&ActionSchema> {
        self.schemas.iter().find(|s| s.name == name)
    }
}

/// A parsed, type-checked problem. The symbol table extends the
/// domain's with the problem objects, so constant ids carry over.
#[derive(Debug, Clone)]
pub struct SourceProblem {
    pub name: String,
    pub domain_name: String,
    pub table: SymbolTable,
    pub atoms: AtomTable,
    pub init: InitialDistribution,
    pub goal: Vec<GroundLit>,
    pub criteria: TerminationCriteria,
    pub warnings: Vec<Warning>,
}

pub fn parse_domain(text: &str) -> Result<SourceDomain, ParseError> {
    parser::domain(text)
}

pub fn parse_problem(text: &str, domain: &SourceDomain) -> Result<SourceProblem, ParseError> {
    parser::problem(text, domain)
}
