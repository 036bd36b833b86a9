//! Task automata: translation by progression, products, guards and DOT output.

mod dot;
mod fsa;
mod guard;
mod product;
mod progression;

use thiserror::Error;

use crate::logic::LogicError;

pub use dot::to_dot;
pub use fsa::{translate, Edge, Fsa, MAX_ALPHABET};
pub use guard::{Assignment, Cube, Guard, Literal};
pub use product::{product, ProductFsa};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AutomatonError {
    #[error("{0} atomic predicates exceed the enumeration limit")]
    AlphabetOverflow(usize),
    #[error("state {state} has {hits} matching edges for assignment {assignment:#b}")]
    NotDeterministic { state: usize, assignment: u64, hits: usize },
    #[error("malformed automaton: {0}")]
    Malformed(String),
    #[error(transparent)]
    Logic(#[from] LogicError),
}
