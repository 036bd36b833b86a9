//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tlcompose::automaton::translate;
use tlcompose::env::{DiscreteMdp, EnvConfig, FsaAugmentedMdp, GridWorld};
use tlcompose::learner::{q_learning_train, QMeta, QTable, ReplayBuffer, TrainConfig};
use tlcompose::logic::{parse_formula_with, Formula, Predicate, StateSample, Trace};

pub const PHI1: &str = "F a & F b";
pub const PHI2: &str = "F c";
pub const CONJ: &str = "(F a & F b) & F c";

pub fn formula(cfg: &EnvConfig, text: &str) -> Formula {
    parse_formula_with(text, &cfg.features(), &cfg.parsed_macros().unwrap()).unwrap()
}

pub fn task(cfg: &EnvConfig, text: &str) -> FsaAugmentedMdp<GridWorld> {
    let fsa = translate(&formula(cfg, text)).unwrap();
    FsaAugmentedMdp::new(cfg.grid().unwrap(), fsa, cfg.horizon).unwrap()
}

pub fn meta_for<M: DiscreteMdp>(env: &FsaAugmentedMdp<M>, text: &str) -> QMeta {
    QMeta {
        formula: text.to_string(),
        components: None,
        fsa_fingerprint: env.fsa().fingerprint(),
        env_hash: env.mdp().config_hash(),
        config_hash: None,
    }
}

pub fn train<M: DiscreteMdp>(env: &FsaAugmentedMdp<M>, text: &str, budget: usize, seed: u64) -> (QTable, ReplayBuffer) {
    let cfg = TrainConfig {
        budget,
        seed,
        ..TrainConfig::default()
    };
    q_learning_train(env, &cfg, meta_for(env, text)).unwrap()
}

pub fn grid_samples(grid: &GridWorld) -> Vec<StateSample> {
    (0..grid.num_states()).map(|s| grid.sample(s)).collect()
}

/// Random formulas over at most `max_preds` distinct predicates on features
/// `x`, `y` with integer thresholds, so half-integer samples avoid every
/// predicate boundary.
pub struct FormulaGen {
    pub max_preds: usize,
    pub max_depth: usize,
}

impl FormulaGen {
    pub fn features() -> BTreeSet<String> {
        ["x", "y"].iter().map(|s| s.to_string()).collect()
    }

    pub fn generate(&self, rng: &mut ChaCha8Rng) -> Formula {
        let n = rng.gen_range(1..=self.max_preds);
        let preds: Vec<Predicate> = (0..n)
            .map(|_| {
                let feat = if rng.gen_bool(0.5) { "x" } else { "y" };
                let c = rng.gen_range(-2..=2) as f64;
                if rng.gen_bool(0.5) {
                    Predicate::less(feat, c)
                } else {
                    Predicate::greater(feat, c)
                }
            })
            .collect();
        let depth = rng.gen_range(1..=self.max_depth);
        self.node(rng, &preds, depth)
    }

    fn node(&self, rng: &mut ChaCha8Rng, preds: &[Predicate], depth: usize) -> Formula {
        if depth <= 1 {
            let p = preds[rng.gen_range(0..preds.len())].clone();
            return match rng.gen_range(0..6) {
                0 => Formula::not_pred(p),
                1 if depth == 1 && rng.gen_bool(0.2) => Formula::True,
                _ => Formula::pred(p),
            };
        }
        let d = depth - 1;
        match rng.gen_range(0..7) {
            0 => Formula::and([self.node(rng, preds, d), self.node(rng, preds, d)]),
            1 => Formula::or([self.node(rng, preds, d), self.node(rng, preds, d)]),
            2 => Formula::eventually(self.node(rng, preds, d)),
            3 => Formula::next(self.node(rng, preds, d)),
            4 => Formula::until(self.node(rng, preds, d), self.node(rng, preds, d)),
            5 => Formula::then(self.node(rng, preds, d), self.node(rng, preds, d)),
            _ => Formula::pred(preds[rng.gen_range(0..preds.len())].clone()),
        }
    }
}

/// Trace of length 1..=10 with coordinates in {-2.5, ..., 2.5}.
pub fn random_trace(rng: &mut ChaCha8Rng) -> Trace {
    let len = rng.gen_range(1..=10);
    let samples = (0..len)
        .map(|_| {
            StateSample::new()
                .with("x", rng.gen_range(-3..=2) as f64 + 0.5)
                .with("y", rng.gen_range(-3..=2) as f64 + 0.5)
        })
        .collect();
    Trace::new(samples).unwrap()
}

/// Boolean finite-trace semantics by direct structural recursion; shares no
/// code with the robustness evaluator or the automaton.
pub fn holds(trace: &Trace, f: &Formula, t: usize) -> bool {
    let n = trace.len();
    let s = &trace.samples()[t];
    match f {
        Formula::True => true,
        Formula::Pred(p) => {
            let v: f64 = p.terms().iter().map(|(k, w)| w * s.get(k).unwrap()).sum();
            match p.comparison() {
                tlcompose::logic::Comparison::Less => v < p.threshold(),
                tlcompose::logic::Comparison::Greater => v > p.threshold(),
            }
        }
        Formula::Not(c) => !holds(trace, c, t),
        Formula::And(cs) => cs.iter().all(|c| holds(trace, c, t)),
        Formula::Or(cs) => cs.iter().any(|c| holds(trace, c, t)),
        Formula::Eventually(c) => (t..n).any(|k| holds(trace, c, k)),
        Formula::Next(c) => t + 1 < n && holds(trace, c, t + 1),
        Formula::Until(l, r) => (t..n).any(|k| holds(trace, r, k) && (t..k).all(|j| holds(trace, l, j))),
        Formula::Then(l, r) => (t..n).any(|k| holds(trace, l, k) && (k + 1..n).any(|j| holds(trace, r, j))),
    }
}
