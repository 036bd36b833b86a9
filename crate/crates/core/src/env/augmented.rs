use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::automaton::{Fsa, Guard};

use super::{DiscreteMdp, EnvError, Policy};

/// MDP × automaton with reward 1 exactly when the automaton leaves its
/// current state for a non-trap state.
///
/// The automaton reads the post-transition MDP state: `q' = δ(q, s')`, and the
/// reward is `1(ρ(s', D^q) > 0)`. Successors and rewards for every `(q, s')`
/// are tabulated at construction.
#[derive(Debug, Clone)]
pub struct FsaAugmentedMdp<M> {
    mdp: M,
    fsa: Fsa,
    horizon: usize,
    successor: Vec<usize>,
    progress: Vec<bool>,
}

/// Mutable state of one episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Episode {
    pub s: usize,
    pub q: usize,
    pub t: usize,
    pub done: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub s: usize,
    pub q: usize,
    pub reward: f64,
    pub done: bool,
}

impl<M: DiscreteMdp> FsaAugmentedMdp<M> {
    pub fn new(mdp: M, fsa: Fsa, horizon: usize) -> Result<Self, EnvError> {
        let ns = mdp.num_states();
        let nq = fsa.num_states();
        let disjunctions: Vec<Guard> = (0..nq).map(|q| fsa.outgoing_disjunction(q)).collect();
        let mut successor = vec![0; nq * ns];
        let mut progress = vec![false; nq * ns];
        for s in 0..ns {
            let bits = fsa.assignment(&mdp.sample(s))?;
            for q in 0..nq {
                successor[q * ns + s] = fsa.step_assignment(q, bits);
                progress[q * ns + s] = disjunctions[q].matches(bits);
            }
        }
        Ok(FsaAugmentedMdp {
            mdp,
            fsa,
            horizon,
            successor,
            progress,
        })
    }

    pub fn mdp(&self) -> &M {
        &self.mdp
    }

    pub fn fsa(&self) -> &Fsa {
        &self.fsa
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.mdp.num_states()
    }

    pub fn num_automaton_states(&self) -> usize {
        self.fsa.num_states()
    }

    pub fn num_actions(&self) -> usize {
        self.mdp.num_actions()
    }

    /// Automaton successor and intrinsic reward after the MDP lands in `s_next`.
    pub fn transition(&self, q: usize, s_next: usize) -> (usize, f64) {
        let i = q * self.mdp.num_states() + s_next;
        (self.successor[i], if self.progress[i] { 1.0 } else { 0.0 })
    }

    pub fn is_terminal(&self, q: usize) -> bool {
        self.fsa.is_terminal(q)
    }

    /// `(s, q)` can occur as a decision point: `q` is live and stable at `s`.
    pub fn is_consistent(&self, s: usize, q: usize) -> bool {
        !self.is_terminal(q) && self.transition(q, s).0 == q
    }

    /// Draws `s0` and lets the automaton read it before the first action.
    pub fn reset(&self, rng: &mut dyn RngCore) -> Episode {
        let s = self.mdp.reset(rng);
        let (q, _) = self.transition(self.fsa.initial(), s);
        Episode {
            s,
            q,
            t: 0,
            done: self.is_terminal(q) || self.horizon == 0,
        }
    }

    /// An episode positioned at an arbitrary augmented state.
    pub fn episode_at(&self, s: usize, q: usize) -> Episode {
        Episode {
            s,
            q,
            t: 0,
            done: self.is_terminal(q) || self.horizon == 0,
        }
    }

    pub fn step(&self, ep: &mut Episode, action: usize, rng: &mut dyn RngCore) -> Result<StepOutcome, EnvError> {
        if ep.done {
            return Err(EnvError::EpisodeFinished);
        }
        if action >= self.num_actions() {
            return Err(EnvError::InvalidAction {
                action,
                num_actions: self.num_actions(),
            });
        }
        let s_next = self.mdp.step(ep.s, action, rng);
        let (q_next, reward) = self.transition(ep.q, s_next);
        ep.s = s_next;
        ep.q = q_next;
        ep.t += 1;
        ep.done = self.is_terminal(q_next) || ep.t >= self.horizon;
        Ok(StepOutcome {
            s: s_next,
            q: q_next,
            reward,
            done: ep.done,
        })
    }
}

/// Greedy-evaluation summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub episodes: usize,
    pub success_rate: f64,
    /// Mean steps among successful episodes; `None` without successes.
    pub mean_steps_to_accept: Option<f64>,
    /// Mean length over all episodes.
    pub mean_episode_len: f64,
    pub mean_return: f64,
}

struct EpisodeResult {
    accepted: bool,
    steps: usize,
    ret: f64,
}

/// Runs `episodes` independent episodes of `policy` and reports the fraction
/// that reach an accepting automaton state within the horizon.
///
/// Episode `i` draws from its own stream of a generator seeded by `seed`, so
/// the report does not depend on how episodes are spread across threads.
pub fn evaluate_satisfaction<M: DiscreteMdp, P: Policy + ?Sized>(
    env: &FsaAugmentedMdp<M>,
    policy: &P,
    episodes: usize,
    seed: u64,
) -> EvalReport {
    let results: Vec<EpisodeResult> = (0..episodes)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            run_episode(env, policy, &mut rng)
        })
        .collect();
    let successes: Vec<&EpisodeResult> = results.iter().filter(|r| r.accepted).collect();
    let n = episodes.max(1) as f64;
    EvalReport {
        episodes,
        success_rate: successes.len() as f64 / n,
        mean_steps_to_accept: if successes.is_empty() {
            None
        } else {
            Some(successes.iter().map(|r| r.steps as f64).sum::<f64>() / successes.len() as f64)
        },
        mean_episode_len: results.iter().map(|r| r.steps as f64).sum::<f64>() / n,
        mean_return: results.iter().map(|r| r.ret).sum::<f64>() / n,
    }
}

fn run_episode<M: DiscreteMdp, P: Policy + ?Sized>(
    env: &FsaAugmentedMdp<M>,
    policy: &P,
    rng: &mut ChaCha8Rng,
) -> EpisodeResult {
    let mut ep = env.reset(rng);
    let mut ret = 0.0;
    while !ep.done {
        let a = policy.action(ep.s, ep.q, rng);
        ret += env.step(&mut ep, a, rng).expect("episode is live").reward;
    }
    EpisodeResult {
        accepted: env.fsa().is_accepting(ep.q),
        steps: ep.t,
        ret,
    }
}
