use crate::env::{DiscreteMdp, FsaAugmentedMdp};

use super::qtable::{QMeta, QTable};
use super::LearnError;

/// Sup-norm change below which value iteration stops.
pub const TOLERANCE: f64 = 1e-9;
const MAX_SWEEPS: usize = 1_000_000;

/// Bellman-optimal Q for the discounted augmented MDP, by value iteration on
/// the exact transition matrix. Terminal automaton rows stay zero.
pub fn value_iteration_oracle<M: DiscreteMdp>(
    env: &FsaAugmentedMdp<M>,
    gamma: f64,
    meta: QMeta,
) -> Result<QTable, LearnError> {
    let ns = env.num_states();
    let nq = env.num_automaton_states();
    let na = env.num_actions();
    let mut model: Vec<Vec<(usize, f64)>> = Vec::with_capacity(ns * na);
    for s in 0..ns {
        for a in 0..na {
            model.push(
                env.mdp()
                    .transition_probs(s, a)
                    .ok_or(LearnError::MissingTransitionMatrix)?,
            );
        }
    }
    let mut q = QTable::zeros(ns, nq, na, meta);
    let mut next = q.clone();
    let mut sweeps = 0;
    loop {
        let mut delta: f64 = 0.0;
        for qa in (0..nq).filter(|&qa| !env.is_terminal(qa)) {
            for s in 0..ns {
                for a in 0..na {
                    let v: f64 = model[s * na + a]
                        .iter()
                        .map(|&(s2, p)| {
                            let (q2, r) = env.transition(qa, s2);
                            let future = if env.is_terminal(q2) { 0.0 } else { q.max_value(s2, q2) };
                            p * (r + gamma * future)
                        })
                        .sum();
                    delta = delta.max((v - q.get(s, qa, a)).abs());
                    next.set(s, qa, a, v);
                }
            }
        }
        std::mem::swap(&mut q, &mut next);
        sweeps += 1;
        if delta < TOLERANCE || sweeps >= MAX_SWEEPS {
            return Ok(q);
        }
    }
}
