mod common;

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tlcompose::automaton::translate;
use tlcompose::env::{evaluate_satisfaction, ChainWorld, DiscreteMdp, EnvConfig, FsaAugmentedMdp, GridAction};
use tlcompose::learner::{value_iteration_oracle, QTable};
use tlcompose::logic::parse_formula;

use common::{meta_for, task, train, PHI1, PHI2};

/// Upper 0.999 quantile of chi-square with `df` degrees of freedom
/// (Wilson–Hilferty approximation).
fn chi2_critical(df: usize) -> f64 {
    let k = df as f64;
    let z = 3.090;
    k * (1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt()).powi(3)
}

#[test]
fn augmented_transitions_factorize() {
    let cfg = EnvConfig::standard_grid();
    let env = task(&cfg, PHI1);
    let grid = env.mdp();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (s, q, a) = (grid.index(2, 3), env.fsa().initial(), GridAction::Down.index());
    let n = 10_000;
    let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
    for _ in 0..n {
        let mut ep = env.episode_at(s, q);
        let out = env.step(&mut ep, a, &mut rng).unwrap();
        *counts.entry((out.s, out.q)).or_default() += 1;
    }
    let probs = grid.transition_probs(s, a).unwrap();
    let mut chi2 = 0.0;
    let mut cells = 0;
    for (s2, p) in probs {
        let q2 = env.fsa().step(q, &grid.sample(s2)).unwrap();
        let expected = p * n as f64;
        let observed = counts.remove(&(s2, q2)).unwrap_or(0) as f64;
        chi2 += (observed - expected).powi(2) / expected;
        cells += 1;
    }
    assert!(counts.is_empty(), "impossible outcomes observed: {counts:?}");
    assert!(chi2 < chi2_critical(cells - 1), "chi2 {chi2} over {cells} cells");
}

#[test]
fn training_is_bit_reproducible() {
    let env = task(&EnvConfig::standard_grid(), PHI1);
    let (a, ba) = train(&env, PHI1, 5_000, 9);
    let (b, bb) = train(&env, PHI1, 5_000, 9);
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(ba, bb);
    let (c, _) = train(&env, PHI1, 5_000, 10);
    assert_ne!(a, c);
}

#[test]
fn zero_budget_leaves_zero_table() {
    let env = task(&EnvConfig::standard_grid(), PHI2);
    let (q, buffer) = train(&env, PHI2, 0, 1);
    assert!(q.values().iter().all(|&v| v == 0.0));
    assert!(buffer.is_empty());
    assert_eq!(q.greedy_action(5, 0), 0);
}

#[test]
fn values_stay_within_progress_bound() {
    let env = task(&EnvConfig::standard_grid(), PHI1);
    let (q, _) = train(&env, PHI1, 20_000, 2);
    // At most two progress edges on any path of the four-state automaton.
    assert!(q.values().iter().all(|&v| (0.0..=2.0).contains(&v)));
}

#[test]
fn chain_values_match_closed_form() {
    let fsa = translate(&parse_formula("F (x > 1)", &["x".to_string()].into()).unwrap()).unwrap();
    let env = FsaAugmentedMdp::new(ChainWorld::new(3), fsa, 200).unwrap();
    let meta = meta_for(&env, "F (x > 1)");
    let oracle = value_iteration_oracle(&env, 0.95, meta.clone()).unwrap();
    let q0 = env.fsa().initial();
    assert!((oracle.get(0, q0, 0) - 0.95).abs() < 1e-12);
    assert!((oracle.get(1, q0, 0) - 1.0).abs() < 1e-12);
    for q in (0..env.num_automaton_states()).filter(|&q| env.is_terminal(q)) {
        for s in 0..3 {
            assert_eq!(oracle.get(s, q, 0), 0.0);
        }
    }
    // Myopic limit: one-step expected reward.
    let myopic = value_iteration_oracle(&env, 0.0, meta).unwrap();
    assert_eq!(myopic.get(0, q0, 0), 0.0);
    assert_eq!(myopic.get(1, q0, 0), 1.0);
}

#[test]
fn oracle_myopic_grid_equals_expected_reward() {
    let env = task(&EnvConfig::standard_grid(), PHI2);
    let oracle = value_iteration_oracle(&env, 0.0, meta_for(&env, PHI2)).unwrap();
    let grid = env.mdp();
    let q0 = env.fsa().initial();
    for s in 0..grid.num_states() {
        for a in 0..5 {
            let expect: f64 = grid
                .transition_probs(s, a)
                .unwrap()
                .iter()
                .map(|&(s2, p)| p * env.transition(q0, s2).1)
                .sum();
            assert!((oracle.get(s, q0, a) - expect).abs() < 1e-12);
        }
    }
}

#[test]
fn trained_policy_points_toward_goal_next_to_it() {
    let env = task(&EnvConfig::standard_grid(), PHI2);
    let (q, _) = train(&env, PHI2, 50_000, 0);
    let grid = env.mdp();
    let q0 = env.fsa().initial();
    // c sits at (2, 7).
    assert_eq!(q.greedy_action(grid.index(3, 7), q0), GridAction::Left.index());
    assert_eq!(q.greedy_action(grid.index(1, 7), q0), GridAction::Right.index());
    assert_eq!(q.greedy_action(grid.index(2, 6), q0), GridAction::Up.index());
    let map = q.extract_subpolicy(q0);
    assert_eq!(map.len(), grid.num_states());
    assert_eq!(map[grid.index(3, 7)], GridAction::Left.index());
}

#[test]
fn normalization_scales_to_unit_max_and_keeps_argmax() {
    let cfg = EnvConfig::standard_grid();
    for text in [PHI1, PHI2] {
        let env = task(&cfg, text);
        let (q, _) = train(&env, text, 20_000, 4);
        let n = q.normalized().unwrap();
        assert_eq!(n.global_max(), 1.0);
        for s in 0..q.states() {
            for qa in 0..q.automaton_states() {
                assert_eq!(q.greedy_action(s, qa), n.greedy_action(s, qa));
            }
        }
    }
    let env = task(&cfg, PHI2);
    assert!(QTable::zeros(80, 2, 5, meta_for(&env, PHI2)).normalized().is_err());
}

#[test]
fn success_does_not_drop_with_budget() {
    let env = task(&EnvConfig::standard_grid(), PHI1);
    let budgets = [500, 2_000, 10_000, 50_000];
    let mean: Vec<f64> = budgets
        .iter()
        .map(|&b| {
            (0..5)
                .map(|seed| evaluate_satisfaction(&env, &train(&env, PHI1, b, seed).0, 100, 99).success_rate)
                .sum::<f64>()
                / 5.0
        })
        .collect();
    for w in mean.windows(2) {
        assert!(w[1] >= w[0] - 0.05, "{mean:?}");
    }
}
