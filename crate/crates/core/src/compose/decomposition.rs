use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{DiscreteMdp, Policy};

use super::relabel::{ProductLabel, ProductLabeler};
use super::ComposeError;

/// Product state-action pair at which the decomposition is tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StartPoint {
    pub s: usize,
    pub q: usize,
    pub action: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermEstimate {
    pub mean: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartReport {
    pub start: StartPoint,
    /// Return of the composed reward.
    pub composed: TermEstimate,
    pub left: TermEstimate,
    pub right: TermEstimate,
    pub overlap: TermEstimate,
    /// `composed - (left + right - overlap)`
    pub difference: f64,
    /// Standard error of `difference` (terms are estimated independently).
    pub std_err: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub rollouts: usize,
    pub gamma: f64,
    pub horizon: usize,
    /// Allowed |difference| in standard errors.
    pub sigmas: f64,
    pub starts: Vec<StartReport>,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct DecompositionSettings {
    pub rollouts: usize,
    pub gamma: f64,
    pub horizon: usize,
    pub sigmas: f64,
    pub seed: u64,
}

#[derive(Clone, Copy)]
enum Term {
    Composed,
    Left,
    Right,
    Overlap,
}

impl Term {
    const ALL: [Term; 4] = [Term::Composed, Term::Left, Term::Right, Term::Overlap];

    fn reward(self, l: &ProductLabel) -> f64 {
        match self {
            Term::Composed => l.composed_reward(),
            Term::Left => f64::from(u8::from(l.left)),
            Term::Right => f64::from(u8::from(l.right)),
            Term::Overlap => l.overlap_reward(),
        }
    }
}

/// Monte Carlo check that the return of the composed reward equals
/// left + right − overlap under one fixed policy.
///
/// Each of the four terms gets its own independent rollouts, so agreement
/// is a statistical statement, judged at `sigmas` standard errors.
pub fn decomposition_check<M: DiscreteMdp, P: Policy + ?Sized>(
    mdp: &M,
    labeler: &ProductLabeler,
    policy: &P,
    starts: &[StartPoint],
    settings: DecompositionSettings,
) -> Result<DecompositionReport, ComposeError> {
    if settings.rollouts < 2 {
        return Err(ComposeError::InsufficientSamples {
            needed: 2,
            got: settings.rollouts,
        });
    }
    if labeler.states() != mdp.num_states() {
        return Err(ComposeError::Mismatch("labeler and MDP disagree on the state count".into()));
    }
    for st in starts {
        if st.s >= mdp.num_states() {
            return Err(ComposeError::StateOutOfRange(st.s));
        }
        if st.q >= labeler.automaton_states() || st.action >= mdp.num_actions() {
            return Err(ComposeError::Mismatch(format!("start point {st:?} is out of range")));
        }
    }
    let reports: Vec<StartReport> = starts
        .par_iter()
        .enumerate()
        .map(|(k, &start)| {
            let est = |ti: usize, term: Term| {
                let returns: Vec<f64> = (0..settings.rollouts)
                    .map(|i| {
                        let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
                        rng.set_stream((((k * 4 + ti) as u64) << 32) | i as u64);
                        rollout(mdp, labeler, policy, start, term, &settings, &mut rng)
                    })
                    .collect();
                mean_and_se(&returns)
            };
            let [composed, left, right, overlap] = Term::ALL.map(|t| est(t as usize, t));
            let difference = composed.mean - (left.mean + right.mean - overlap.mean);
            let std_err = [composed, left, right, overlap]
                .iter()
                .map(|e| e.std_err * e.std_err)
                .sum::<f64>()
                .sqrt();
            StartReport {
                start,
                composed,
                left,
                right,
                overlap,
                difference,
                std_err,
                // A zero-variance estimate must match exactly (up to rounding).
                pass: difference.abs() <= settings.sigmas * std_err + 1e-9,
            }
        })
        .collect();
    Ok(DecompositionReport {
        rollouts: settings.rollouts,
        gamma: settings.gamma,
        horizon: settings.horizon,
        sigmas: settings.sigmas,
        pass: reports.iter().all(|r| r.pass),
        starts: reports,
    })
}

fn rollout<M: DiscreteMdp, P: Policy + ?Sized>(
    mdp: &M,
    labeler: &ProductLabeler,
    policy: &P,
    start: StartPoint,
    term: Term,
    settings: &DecompositionSettings,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let (mut s, mut q, mut a) = (start.s, start.q, start.action);
    let mut ret = 0.0;
    let mut discount = 1.0;
    for _ in 0..settings.horizon {
        if labeler.is_terminal(q) {
            break;
        }
        let s_next = mdp.step(s, a, rng);
        let label = labeler.label(q, s_next);
        ret += discount * term.reward(&label);
        discount *= settings.gamma;
        s = s_next;
        q = label.q_next;
        a = policy.action(s, q, rng);
    }
    ret
}

fn mean_and_se(xs: &[f64]) -> TermEstimate {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    TermEstimate {
        mean,
        std_err: (var / n).sqrt(),
    }
}
