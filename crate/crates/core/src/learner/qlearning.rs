use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{DiscreteMdp, FsaAugmentedMdp};

use super::qtable::{QMeta, QTable};
use super::replay::{ReplayBuffer, TransitionRecord};
use super::LearnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exploration {
    #[default]
    UniformRandom,
}

/// Learning hyperparameters. `budget` counts update steps: one environment
/// transition plus one table update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default)]
    pub exploration: Exploration,
    #[serde(default)]
    pub seed: u64,
}

fn default_gamma() -> f64 {
    0.95
}

fn default_alpha() -> f64 {
    0.1
}

fn default_budget() -> usize {
    50_000
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            gamma: default_gamma(),
            alpha: default_alpha(),
            budget: default_budget(),
            exploration: Exploration::UniformRandom,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), LearnError> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(LearnError::Config(format!("gamma {} outside (0, 1]", self.gamma)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(LearnError::Config(format!("alpha {} outside (0, 1]", self.alpha)));
        }
        Ok(())
    }
}

/// Consecutive resets that land in a finished episode before training gives up.
const MAX_DEAD_RESETS: usize = 10_000;

pub fn q_learning_train<M: DiscreteMdp>(
    env: &FsaAugmentedMdp<M>,
    cfg: &TrainConfig,
    meta: QMeta,
) -> Result<(QTable, ReplayBuffer), LearnError> {
    q_learning_train_with(env, cfg, meta, 0, |_, _| {})
}

/// Q-learning under uniform exploration. When `checkpoint_every > 0`,
/// `on_checkpoint(step, table)` runs after every that many updates.
pub fn q_learning_train_with<M: DiscreteMdp>(
    env: &FsaAugmentedMdp<M>,
    cfg: &TrainConfig,
    meta: QMeta,
    checkpoint_every: usize,
    mut on_checkpoint: impl FnMut(usize, &QTable),
) -> Result<(QTable, ReplayBuffer), LearnError> {
    cfg.validate()?;
    let na = env.num_actions();
    let mut q = QTable::zeros(env.num_states(), env.num_automaton_states(), na, meta);
    let mut buffer = ReplayBuffer::new(env.mdp().config_hash());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut episode_id = 0;
    let mut ep = env.reset(&mut rng);
    let mut dead_resets = 0;
    let mut step = 0;
    while step < cfg.budget {
        if ep.done {
            ep = env.reset(&mut rng);
            episode_id += 1;
            if ep.done {
                dead_resets += 1;
                if dead_resets >= MAX_DEAD_RESETS {
                    break;
                }
                continue;
            }
        }
        dead_resets = 0;
        let (s, qa, t) = (ep.s, ep.q, ep.t);
        let a = match cfg.exploration {
            Exploration::UniformRandom => rng.gen_range(0..na),
        };
        let out = env.step(&mut ep, a, &mut rng).expect("episode is live");
        let future = if env.is_terminal(out.q) {
            0.0
        } else {
            q.max_value(out.s, out.q)
        };
        let target = out.reward + cfg.gamma * future;
        let old = q.get(s, qa, a);
        q.set(s, qa, a, (1.0 - cfg.alpha) * old + cfg.alpha * target);
        buffer.push(TransitionRecord {
            s,
            action: a,
            s_next: out.s,
            episode: episode_id,
            t,
        });
        step += 1;
        if checkpoint_every > 0 && step % checkpoint_every == 0 {
            on_checkpoint(step, &q);
        }
    }
    Ok((q, buffer))
}
