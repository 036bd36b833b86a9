//! Skill composition for conjunctions of tasks through the product automaton,
//! using only experience recorded while learning the individual tasks.

mod decomposition;
mod relabel;
mod skills;

use thiserror::Error;

use crate::logic::LogicError;

pub use decomposition::{
    decomposition_check, DecompositionReport, DecompositionSettings, StartPoint, StartReport, TermEstimate,
};
pub use relabel::{relabel, ProductLabeler, RelabeledTransition};
pub use skills::{compose_skills, CompositionJob, CompositionResult, Stage};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ComposeError {
    #[error("replay buffer is empty but stage {0} needs stored experience")]
    EmptyBuffer(Stage),
    #[error("mismatched inputs: {0}")]
    Mismatch(String),
    #[error("state features do not cover the automaton predicates: {0}")]
    FeatureMismatch(#[from] LogicError),
    #[error("transition refers to state {0} outside the state table")]
    StateOutOfRange(usize),
    #[error("need at least {needed} rollouts per term, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
}
