//! Tabular Q-learning over automaton-augmented MDPs.

mod oracle;
mod qlearning;
mod qtable;
mod replay;

use thiserror::Error;

pub use oracle::value_iteration_oracle;
pub use qlearning::{q_learning_train, q_learning_train_with, Exploration, TrainConfig};
pub use qtable::{QMeta, QTable};
pub use replay::{ReplayBuffer, TransitionRecord};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnError {
    #[error("environment does not expose an exact transition matrix")]
    MissingTransitionMatrix,
    #[error("table maximum {0} is not positive; nothing to normalize")]
    NonPositiveMax(f64),
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("malformed table: {0}")]
    Malformed(String),
}
