use rayon::prelude::*;

use crate::automaton::ProductFsa;
use crate::learner::ReplayBuffer;
use crate::logic::StateSample;

use super::ComposeError;

/// Per-(product state, landing state) automaton bookkeeping.
///
/// Guards read only the landing state, so a single raw transition can be
/// replayed under every product state.
#[derive(Debug, Clone)]
pub struct ProductLabeler {
    states: usize,
    automaton_states: usize,
    next: Vec<usize>,
    left_progress: Vec<bool>,
    right_progress: Vec<bool>,
    terminal: Vec<bool>,
}

/// Outcome of landing in some MDP state while the product sits at `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductLabel {
    pub q_next: usize,
    /// 1(ρ(s', D_1^{q1}) > 0)
    pub left: bool,
    /// 1(ρ(s', D_2^{q2}) > 0)
    pub right: bool,
}

impl ProductLabel {
    /// r_{q1∧q2}
    pub fn overlap_reward(&self) -> f64 {
        f64::from(u8::from(self.left && self.right))
    }

    /// r_q = r1 + r2 - r_{q1∧q2}
    pub fn composed_reward(&self) -> f64 {
        f64::from(u8::from(self.left)) + f64::from(u8::from(self.right)) - self.overlap_reward()
    }
}

impl ProductLabeler {
    pub fn new(pf: &ProductFsa, samples: &[StateSample]) -> Result<Self, ComposeError> {
        let fsa = pf.fsa();
        let (left, right) = (pf.left(), pf.right());
        let nq = fsa.num_states();
        let ns = samples.len();
        let d_left: Vec<_> = (0..left.num_states()).map(|q| left.outgoing_disjunction(q)).collect();
        let d_right: Vec<_> = (0..right.num_states()).map(|q| right.outgoing_disjunction(q)).collect();
        let mut next = vec![0; nq * ns];
        let mut left_progress = vec![false; nq * ns];
        let mut right_progress = vec![false; nq * ns];
        for (s, sample) in samples.iter().enumerate() {
            let bits = fsa.assignment(sample)?;
            let bl = left.assignment(sample)?;
            let br = right.assignment(sample)?;
            for q in 0..nq {
                let (q1, q2) = pf.pair(q);
                let i = q * ns + s;
                next[i] = fsa.step_assignment(q, bits);
                left_progress[i] = d_left[q1].matches(bl);
                right_progress[i] = d_right[q2].matches(br);
            }
        }
        Ok(ProductLabeler {
            states: ns,
            automaton_states: nq,
            next,
            left_progress,
            right_progress,
            terminal: (0..nq).map(|q| fsa.is_terminal(q)).collect(),
        })
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn automaton_states(&self) -> usize {
        self.automaton_states
    }

    pub fn is_terminal(&self, q: usize) -> bool {
        self.terminal[q]
    }

    pub fn label(&self, q: usize, s_next: usize) -> ProductLabel {
        let i = q * self.states + s_next;
        ProductLabel {
            q_next: self.next[i],
            left: self.left_progress[i],
            right: self.right_progress[i],
        }
    }
}

/// A raw transition replayed under one product state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelabeledTransition {
    pub s: usize,
    pub action: usize,
    pub s_next: usize,
    pub q: usize,
    pub q_next: usize,
    pub left: bool,
    pub right: bool,
    /// r_{q1∧q2}
    pub overlap_reward: f64,
    /// r_q
    pub composed_reward: f64,
    /// `q_next` is accepting or trap: no bootstrap.
    pub terminal: bool,
}

/// Replays every stored transition under every non-terminal product state.
/// Output order: buffer order, then product-state index.
pub fn relabel(
    buffer: &ReplayBuffer,
    pf: &ProductFsa,
    samples: &[StateSample],
) -> Result<Vec<RelabeledTransition>, ComposeError> {
    let labeler = ProductLabeler::new(pf, samples)?;
    relabel_with(buffer, &labeler)
}

pub(crate) fn relabel_with(
    buffer: &ReplayBuffer,
    labeler: &ProductLabeler,
) -> Result<Vec<RelabeledTransition>, ComposeError> {
    let live: Vec<usize> = (0..labeler.automaton_states())
        .filter(|&q| !labeler.is_terminal(q))
        .collect();
    let chunks: Result<Vec<Vec<RelabeledTransition>>, ComposeError> = buffer
        .records
        .par_iter()
        .map(|r| {
            for s in [r.s, r.s_next] {
                if s >= labeler.states() {
                    return Err(ComposeError::StateOutOfRange(s));
                }
            }
            Ok(live
                .iter()
                .map(|&q| {
                    let l = labeler.label(q, r.s_next);
                    RelabeledTransition {
                        s: r.s,
                        action: r.action,
                        s_next: r.s_next,
                        q,
                        q_next: l.q_next,
                        left: l.left,
                        right: l.right,
                        overlap_reward: l.overlap_reward(),
                        composed_reward: l.composed_reward(),
                        terminal: labeler.is_terminal(l.q_next),
                    }
                })
                .collect())
        })
        .collect();
    Ok(chunks?.into_iter().flatten().collect())
}
