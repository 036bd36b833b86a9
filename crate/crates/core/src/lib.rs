//! Automata-guided reinforcement learning for temporal-logic tasks.
//!
//! Task formulas are compiled into deterministic automata, the automata are
//! layered over discrete MDPs to give dense progress rewards, tabular
//! Q-learning solves the augmented problem, and learned skills for two tasks
//! are composed through the product automaton using stored experience only.

pub mod automaton;
pub mod compose;
pub mod env;
pub mod learner;
pub mod logic;
mod hashing;

pub use hashing::json_hash;
pub use automaton::{product, to_dot, translate, Fsa, Guard, ProductFsa};
pub use env::{DiscreteMdp, FsaAugmentedMdp, GridWorld};
pub use learner::{QTable, ReplayBuffer, TrainConfig};
pub use logic::{parse_formula, parse_formula_with, Formula, Macros, Predicate, StateSample, Trace};
