//! Task formulas: syntax, parsing and quantitative semantics.

mod formula;
pub mod parser;
mod robustness;

use thiserror::Error;

pub use formula::{Comparison, Formula, Predicate, StateSample, Trace, RHO_MAX};
pub use parser::{parse_formula, parse_formula_with, Macros, ParseError, ParseErrorKind};
pub use robustness::{predicate_robustness, robustness, robustness_signal, satisfies};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LogicError {
    #[error("sample is missing feature `{0}`")]
    MissingFeature(String),
    #[error("predicate has no nonzero coefficient")]
    DegeneratePredicate,
    #[error("non-finite constant in predicate")]
    NonFiniteConstant,
    #[error("trace is empty")]
    EmptyTrace,
    #[error("trace sample {0} has a different feature set")]
    InconsistentTrace(usize),
    #[error("start index {t} outside trace of length {len}")]
    TimeOutOfRange { t: usize, len: usize },
    #[error("negation applied above predicate level")]
    NegationNotAtPredicate,
    #[error("conjunction/disjunction needs at least two operands")]
    BadArity,
}
