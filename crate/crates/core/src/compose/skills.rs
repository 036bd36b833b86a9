use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::automaton::ProductFsa;
use crate::learner::{QMeta, QTable, ReplayBuffer};
use crate::logic::StateSample;

use super::relabel::{relabel_with, ProductLabeler, RelabeledTransition};
use super::ComposeError;

/// How much of the composition procedure to run. Stages are cumulative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    /// Sum of the two normalized tables.
    C1,
    /// Minus the learned overlap correction.
    C2,
    /// Plus off-policy fine-tuning on the composed reward.
    C3,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::C1 => "c1",
            Stage::C2 => "c2",
            Stage::C3 => "c3",
        })
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "c1" => Ok(Stage::C1),
            "c2" => Ok(Stage::C2),
            "c3" => Ok(Stage::C3),
            other => Err(format!("unknown stage `{other}` (expected c1, c2 or c3)")),
        }
    }
}

/// Inputs to [`compose_skills`]. There is deliberately no environment
/// handle: composition only replays `buffer`.
#[derive(Debug, Clone, Copy)]
pub struct CompositionJob<'a> {
    pub q1: &'a QTable,
    pub q2: &'a QTable,
    pub product: &'a ProductFsa,
    pub buffer: &'a ReplayBuffer,
    /// Features of every MDP state, indexed like the tables.
    pub state_samples: &'a [StateSample],
    pub stage: Stage,
    /// Off-policy updates per learning stage (c2 and c3 each).
    pub updates: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompositionResult {
    /// Table after each stage up to the requested one, in order.
    pub stages: Vec<(Stage, QTable)>,
    /// Learned overlap correction (stage c2 and later).
    pub correction: Option<QTable>,
    pub relabeled: usize,
}

impl CompositionResult {
    pub fn final_table(&self) -> &QTable {
        &self.stages.last().expect("at least stage c1").1
    }

    pub fn table(&self, stage: Stage) -> Option<&QTable> {
        self.stages.iter().find(|(s, _)| *s == stage).map(|(_, t)| t)
    }
}

fn check(job: &CompositionJob<'_>) -> Result<(), ComposeError> {
    let mismatch = |m: String| Err(ComposeError::Mismatch(m));
    let (q1, q2, pf) = (job.q1, job.q2, job.product);
    if q1.meta.env_hash != q2.meta.env_hash {
        return mismatch("the two tables were trained on different environments".into());
    }
    if q1.meta.fsa_fingerprint != pf.left().fingerprint() {
        return mismatch("first table does not belong to the product's left automaton".into());
    }
    if q2.meta.fsa_fingerprint != pf.right().fingerprint() {
        return mismatch("second table does not belong to the product's right automaton".into());
    }
    let ns = job.state_samples.len();
    for (name, t, fsa) in [("first", q1, pf.left()), ("second", q2, pf.right())] {
        if t.states() != ns || t.automaton_states() != fsa.num_states() {
            return mismatch(format!("{name} table dimensions do not match the inputs"));
        }
    }
    if q1.actions() != q2.actions() {
        return mismatch("action counts differ".into());
    }
    if job.stage >= Stage::C2 {
        if job.buffer.is_empty() {
            return Err(ComposeError::EmptyBuffer(job.stage));
        }
        if job.buffer.env_hash != q1.meta.env_hash {
            return mismatch("replay buffer was recorded on a different environment".into());
        }
    }
    Ok(())
}

/// Divides by the global maximum; an all-zero table (task satisfied on
/// entry, nothing to learn) passes through unchanged.
fn normalize_for_sum(t: &QTable) -> Result<QTable, ComposeError> {
    if t.values().iter().all(|&v| v == 0.0) {
        return Ok(t.clone());
    }
    t.normalized()
        .map_err(|e| ComposeError::Mismatch(format!("cannot normalize input table: {e}")))
}

/// Builds Q for the conjunction from the two learned tables and the stored
/// experience, without stepping any environment.
pub fn compose_skills(job: &CompositionJob<'_>) -> Result<CompositionResult, ComposeError> {
    check(job)?;
    let pf = job.product;
    let fsa = pf.fsa();
    let q1 = normalize_for_sum(job.q1)?;
    let q2 = normalize_for_sum(job.q2)?;
    let (ns, nq, na) = (job.state_samples.len(), fsa.num_states(), q1.actions());
    let meta = QMeta {
        formula: format!("({}) & ({})", job.q1.meta.formula, job.q2.meta.formula),
        components: Some((job.q1.meta.formula.clone(), job.q2.meta.formula.clone())),
        fsa_fingerprint: fsa.fingerprint(),
        env_hash: job.q1.meta.env_hash.clone(),
        config_hash: None,
    };

    let mut summed = QTable::zeros(ns, nq, na, meta.clone());
    for q in (0..nq).filter(|&q| !fsa.is_terminal(q)) {
        let (a, b) = pf.pair(q);
        for s in 0..ns {
            for act in 0..na {
                summed.set(s, q, act, q1.get(s, a, act) + q2.get(s, b, act));
            }
        }
    }
    let mut result = CompositionResult {
        stages: vec![(Stage::C1, summed.clone())],
        correction: None,
        relabeled: 0,
    };
    if job.stage == Stage::C1 {
        return Ok(result);
    }

    let labeler = ProductLabeler::new(pf, job.state_samples)?;
    let batch = relabel_with(job.buffer, &labeler)?;
    result.relabeled = batch.len();

    // Overlap term, evaluated for the policy greedy in the summed table.
    let mut correction = QTable::zeros(ns, nq, na, meta.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(job.seed);
    rng.set_stream(2);
    for _ in 0..job.updates {
        let tr = &batch[rng.gen_range(0..batch.len())];
        let future = if tr.terminal {
            0.0
        } else {
            correction.get(tr.s_next, tr.q_next, summed.greedy_action(tr.s_next, tr.q_next))
        };
        td_update(&mut correction, tr, tr.overlap_reward, future, job);
    }
    let mut corrected = summed.clone();
    for (v, c) in corrected.values_mut().iter_mut().zip(correction.values()) {
        *v -= c;
    }
    result.stages.push((Stage::C2, corrected.clone()));
    result.correction = Some(correction);
    if job.stage == Stage::C2 {
        return Ok(result);
    }

    let mut tuned = corrected;
    let mut rng = ChaCha8Rng::seed_from_u64(job.seed);
    rng.set_stream(3);
    for _ in 0..job.updates {
        let tr = &batch[rng.gen_range(0..batch.len())];
        let future = if tr.terminal { 0.0 } else { tuned.max_value(tr.s_next, tr.q_next) };
        td_update(&mut tuned, tr, tr.composed_reward, future, job);
    }
    result.stages.push((Stage::C3, tuned));
    Ok(result)
}

fn td_update(table: &mut QTable, tr: &RelabeledTransition, reward: f64, future: f64, job: &CompositionJob<'_>) {
    let old = table.get(tr.s, tr.q, tr.action);
    let target = reward + job.gamma * future;
    table.set(tr.s, tr.q, tr.action, (1.0 - job.alpha) * old + job.alpha * target);
}
