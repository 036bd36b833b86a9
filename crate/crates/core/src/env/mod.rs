//! Discrete MDPs and the automaton-augmented wrapper that supplies task rewards.

mod augmented;
mod config;
mod grid;

use rand::{Rng, RngCore};
use thiserror::Error;

use crate::logic::{LogicError, StateSample};

pub use augmented::{evaluate_satisfaction, Episode, EvalReport, FsaAugmentedMdp, StepOutcome};
pub use config::{EnvConfig, StartSpec};
pub use grid::{ChainWorld, GridAction, GridWorld};

/// Finite MDP with an index <-> feature-sample bijection over states.
pub trait DiscreteMdp: Sync {
    fn num_states(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn feature_names(&self) -> Vec<String>;
    /// Features of state `s`.
    fn sample(&self, s: usize) -> StateSample;
    fn reset(&self, rng: &mut dyn RngCore) -> usize;
    fn step(&self, s: usize, action: usize, rng: &mut dyn RngCore) -> usize;
    /// Exact `p(s' | s, a)` as `(s', probability)` pairs, when known.
    fn transition_probs(&self, _s: usize, _action: usize) -> Option<Vec<(usize, f64)>> {
        None
    }
    /// Stable fingerprint of the MDP's configuration.
    fn config_hash(&self) -> String;
}

/// Action choice given the MDP state index and the automaton state.
pub trait Policy: Sync {
    fn action(&self, s: usize, q: usize, rng: &mut dyn RngCore) -> usize;
}

/// Picks actions uniformly at random.
#[derive(Debug, Clone, Copy)]
pub struct UniformPolicy {
    pub num_actions: usize,
}

impl Policy for UniformPolicy {
    fn action(&self, _s: usize, _q: usize, rng: &mut dyn RngCore) -> usize {
        rng.gen_range(0..self.num_actions)
    }
}

/// Deterministic policy from a plain function of `(s, q)`.
pub struct FnPolicy<F>(pub F);

impl<F: Fn(usize, usize) -> usize + Sync> Policy for FnPolicy<F> {
    fn action(&self, s: usize, q: usize, _rng: &mut dyn RngCore) -> usize {
        (self.0)(s, q)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("episode already finished")]
    EpisodeFinished,
    #[error("action {action} out of range ({num_actions} actions)")]
    InvalidAction { action: usize, num_actions: usize },
    #[error("automaton predicates cannot be evaluated on MDP states: {0}")]
    FeatureMismatch(#[from] LogicError),
    #[error("invalid environment configuration: {0}")]
    Config(String),
}
