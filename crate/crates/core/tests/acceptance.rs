//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use tlcompose::automaton::{product, translate};
use tlcompose::compose::{
    compose_skills, decomposition_check, relabel, CompositionJob, DecompositionSettings, ProductLabeler, StartPoint,
    Stage,
};
use tlcompose::env::{evaluate_satisfaction, ChainWorld, EnvConfig, FsaAugmentedMdp, UniformPolicy};
use tlcompose::learner::{value_iteration_oracle, QTable, ReplayBuffer};
use tlcompose::logic::{parse_formula, robustness, Formula};

use common::*;

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const BUDGET: usize = 50_000;
const EVAL_EPISODES: usize = 100;
const MIN_SUCCESS: f64 = 0.9;
const RUNTIME_LIMIT_S: f64 = 60.0;
const SUCCESS_SLACK: f64 = 0.05;
const ORACLE_SUP_NORM: f64 = 0.05;
/// Updates used to compare against the oracle; the criterion sets no budget.
const ORACLE_BUDGET: usize = 400_000;
const CHAIN_TOL: f64 = 1e-3;
const FORMULAS: usize = 200;
const TRACES_PER_FORMULA: usize = 100;
const DECOMPOSITION_SIGMAS: f64 = 3.0;
const DECOMPOSITION_ROLLOUTS: usize = 4000;
const COMPOSE_UPDATES: usize = 200_000;
const EVAL_SEED: u64 = 7_000;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn eval(env: &FsaAugmentedMdp<tlcompose::GridWorld>, q: &QTable, seed: u64) -> f64 {
    evaluate_satisfaction(env, q, EVAL_EPISODES, EVAL_SEED + seed).success_rate
}

fn grid_reproduction() -> Outcome {
    let cfg = EnvConfig::standard_grid();
    let mut details = Vec::new();
    let mut pass = true;
    for text in [PHI1, PHI2] {
        let env = task(&cfg, text);
        let runs: Vec<(f64, f64)> = SEEDS
            .iter()
            .map(|&seed| {
                let start = Instant::now();
                let (q, _) = train(&env, text, BUDGET, seed);
                let rate = eval(&env, &q, seed);
                (rate, start.elapsed().as_secs_f64())
            })
            .collect();
        let ok = runs.iter().all(|&(r, t)| r >= MIN_SUCCESS && t < RUNTIME_LIMIT_S);
        pass &= ok;
        let rates: Vec<String> = runs.iter().map(|(r, _)| format!("{r:.2}")).collect();
        let slowest = runs.iter().map(|r| r.1).fold(0.0, f64::max);
        details.push(format!("`{text}` success [{}] slowest {slowest:.2}s", rates.join(", ")));
    }
    Outcome {
        pass,
        detail: format!(
            "{} (need >= {MIN_SUCCESS} on {} seeds, budget {BUDGET}, < {RUNTIME_LIMIT_S}s)",
            details.join("; "),
            SEEDS.len()
        ),
    }
}

struct Composed {
    c1: f64,
    c2: f64,
    c3: f64,
    scratch: f64,
    correction_max: f64,
}

fn compose_run(cfg: &EnvConfig, seed: u64, stage: Stage) -> Composed {
    let env1 = task(cfg, PHI1);
    let env2 = task(cfg, PHI2);
    let (q1, b1) = train(&env1, PHI1, BUDGET, seed);
    let (q2, b2) = train(&env2, PHI2, BUDGET, seed + 100);
    let pf = product(env1.fsa(), env2.fsa());
    let buffer = ReplayBuffer::merged([&b1, &b2]).unwrap();
    let samples = grid_samples(env1.mdp());
    let job = CompositionJob {
        q1: &q1,
        q2: &q2,
        product: &pf,
        buffer: &buffer,
        state_samples: &samples,
        stage,
        updates: COMPOSE_UPDATES,
        gamma: 0.95,
        alpha: 0.1,
        seed,
    };
    let result = compose_skills(&job).unwrap();
    let penv = FsaAugmentedMdp::new(cfg.grid().unwrap(), pf.fsa().clone(), cfg.horizon).unwrap();
    let rate = |s: Stage| result.table(s).map_or(f64::NAN, |t| eval(&penv, t, seed));
    let conj = task(cfg, CONJ);
    let (scratch, _) = train(&conj, CONJ, BUDGET, seed + 200);
    Composed {
        c1: rate(Stage::C1),
        c2: rate(Stage::C2),
        c3: rate(Stage::C3),
        scratch: eval(&conj, &scratch, seed),
        correction_max: result
            .correction
            .as_ref()
            .map_or(f64::NAN, |c| c.values().iter().fold(0.0, |m, v| f64::max(m, v.abs()))),
    }
}

fn composition_c1() -> Outcome {
    let r = compose_run(&EnvConfig::standard_grid(), 0, Stage::C2);
    let pass = r.c1 >= r.scratch - SUCCESS_SLACK && r.correction_max == 0.0;
    Outcome {
        pass,
        detail: format!(
            "c1 success {:.2} vs from-scratch {:.2} (slack {SUCCESS_SLACK}); max |correction| {}",
            r.c1, r.scratch, r.correction_max
        ),
    }
}

fn corpus() -> Vec<Formula> {
    let gen = FormulaGen { max_preds: 4, max_depth: 4 };
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..FORMULAS).map(|_| gen.generate(&mut rng)).collect()
}

fn language_equivalence() -> Outcome {
    let formulas = corpus();
    let (agree, total, boolean, accepted): (usize, usize, usize, usize) = formulas
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let fsa = translate(f).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
            let mut counts = (0, 0, 0, 0);
            for _ in 0..TRACES_PER_FORMULA {
                let trace = random_trace(&mut rng);
                let rho = robustness(&trace, f, 0).unwrap();
                let accepted = fsa.accepts(&trace).unwrap();
                counts.0 += usize::from(accepted == (rho > 0.0));
                counts.1 += 1;
                counts.2 += usize::from(holds(&trace, f, 0) == (rho > 0.0));
                counts.3 += usize::from(accepted);
            }
            counts
        })
        .reduce(|| (0, 0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2, a.3 + b.3));
    Outcome {
        pass: agree == total && boolean == total,
        detail: format!(
            "automaton vs robustness {agree}/{total}; robustness vs independent Boolean semantics {boolean}/{total}; {accepted} accepted"
        ),
    }
}

fn product_soundness() -> Outcome {
    let formulas = corpus();
    let (agree, total) = (0..formulas.len())
        .into_par_iter()
        .map(|i| {
            let (f, g) = (&formulas[i], &formulas[(i + 1) % formulas.len()]);
            let (a, b) = (translate(f).unwrap(), translate(g).unwrap());
            let pf = product(&a, &b);
            let mut rng = ChaCha8Rng::seed_from_u64(10_000 + i as u64);
            let mut ok = 0;
            for _ in 0..TRACES_PER_FORMULA {
                let trace = random_trace(&mut rng);
                let both = a.accepts(&trace).unwrap() && b.accepts(&trace).unwrap();
                ok += usize::from(pf.fsa().accepts(&trace).unwrap() == both);
            }
            (ok, TRACES_PER_FORMULA)
        })
        .reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1));
    let cfg = EnvConfig::standard_grid();
    let grid = product(&translate(&formula(&cfg, PHI1)).unwrap(), &translate(&formula(&cfg, PHI2)).unwrap());
    let states = grid.num_states();
    let accepting = grid.fsa().accepting_states().count();
    Outcome {
        pass: agree == total && states == 8 && accepting == 1,
        detail: format!("product vs factor acceptance {agree}/{total}; grid product {states} states, {accepting} accepting"),
    }
}

fn bellman_oracle() -> Outcome {
    let cfg = EnvConfig::standard_grid();
    let env = task(&cfg, PHI2);
    let (q, _) = train(&env, PHI2, ORACLE_BUDGET, 0);
    let oracle = value_iteration_oracle(&env, 0.95, q.meta.clone()).unwrap();
    let sup = q.sup_distance(&oracle, |s, qa| env.is_consistent(s, qa));

    let chain_text = "F (x > 1)";
    let fsa = translate(&parse_formula(chain_text, &["x".to_string()].into()).unwrap()).unwrap();
    let chain = FsaAugmentedMdp::new(ChainWorld::new(3), fsa, 200).unwrap();
    let (cq, _) = train(&chain, chain_text, 2_000, 0);
    let co = value_iteration_oracle(&chain, 0.95, cq.meta.clone()).unwrap();
    let q0 = chain.fsa().initial();
    let (learned, exact) = (cq.get(0, q0, 0), co.get(0, q0, 0));
    let closed_form = 0.95;
    let pass = sup <= ORACLE_SUP_NORM && (learned - closed_form).abs() <= CHAIN_TOL && (exact - closed_form).abs() <= CHAIN_TOL;
    Outcome {
        pass,
        detail: format!(
            "`{PHI2}` sup-norm to oracle {sup:.4} (<= {ORACLE_SUP_NORM}, {ORACLE_BUDGET} updates); chain Q learned {learned:.5}, oracle {exact:.5}, closed form {closed_form} (tol {CHAIN_TOL})"
        ),
    }
}

fn decomposition() -> Outcome {
    let cfg = EnvConfig::overlap_grid();
    let env1 = task(&cfg, PHI1);
    let env2 = task(&cfg, PHI2);
    let pf = product(env1.fsa(), env2.fsa());
    let grid = cfg.grid().unwrap();
    let samples = grid_samples(&grid);
    let labeler = ProductLabeler::new(&pf, &samples).unwrap();

    let starts: Vec<StartPoint> = [(0, 0), (1, 1), (3, 3), (2, 3), (9, 7)]
        .iter()
        .flat_map(|&(x, y)| {
            let s = grid.index(x, y);
            (0..pf.num_states())
                .filter(|&q| !pf.fsa().is_terminal(q))
                .map(move |q| StartPoint { s, q, action: (x + q) % 5 })
        })
        .collect();
    let policy = UniformPolicy { num_actions: 5 };
    let settings = DecompositionSettings {
        rollouts: DECOMPOSITION_ROLLOUTS,
        gamma: 0.95,
        horizon: cfg.horizon,
        sigmas: DECOMPOSITION_SIGMAS,
        seed: 11,
    };
    let report = decomposition_check(&grid, &labeler, &policy, &starts, settings).unwrap();
    let passed = report.starts.iter().filter(|r| r.pass).count();
    let overlap_nonzero = report.starts.iter().any(|r| r.overlap.mean > 0.0);

    let (_, b1) = train(&env1, PHI1, 10_000, 3);
    let (_, b2) = train(&env2, PHI2, 10_000, 4);
    let buffer = ReplayBuffer::merged([&b1, &b2]).unwrap();
    let batch = relabel(&buffer, &pf, &samples).unwrap();
    let exact = batch
        .iter()
        .filter(|t| t.composed_reward + t.overlap_reward == f64::from(u8::from(t.left)) + f64::from(u8::from(t.right)))
        .count();
    let overlaps = batch.iter().filter(|t| t.overlap_reward > 0.0).count();
    Outcome {
        pass: report.pass && overlap_nonzero && exact == batch.len(),
        detail: format!(
            "{passed}/{} start points within {DECOMPOSITION_SIGMAS} SE ({DECOMPOSITION_ROLLOUTS} rollouts per term); inclusion-exclusion exact on {exact}/{} relabeled transitions ({overlaps} with overlap)",
            report.starts.len(),
            batch.len()
        ),
    }
}

fn stage_monotonicity() -> Outcome {
    let cfg = EnvConfig::overlap_grid();
    let runs: Vec<Composed> = SEEDS.par_iter().map(|&s| compose_run(&cfg, s, Stage::C3)).collect();
    let mut pass = true;
    let mut rows = Vec::new();
    for (seed, r) in SEEDS.iter().zip(&runs) {
        let ok = r.correction_max > 0.0
            && r.c1 <= r.c2 + SUCCESS_SLACK && r.c2 <= r.c3 + SUCCESS_SLACK && r.c3 >= r.scratch - SUCCESS_SLACK;
        pass &= ok;
        rows.push(format!(
            "seed {seed}: c1 {:.2} c2 {:.2} c3 {:.2} scratch {:.2} max |correction| {:.3}",
            r.c1, r.c2, r.c3, r.scratch, r.correction_max
        ));
    }
    Outcome {
        pass,
        detail: format!("{} (slack {SUCCESS_SLACK})", rows.join("; ")),
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("grid-world reproduction", grid_reproduction),
        ("composition c1 sufficiency", composition_c1),
        ("language equivalence", language_equivalence),
        ("product soundness", product_soundness),
        ("Bellman oracle equivalence", bellman_oracle),
        ("decomposition identity", decomposition),
        ("stage monotonicity", stage_monotonicity),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = check();
        let tag = if out.pass { "PASS" } else { "FAIL" };
        failures += usize::from(!out.pass);
        println!("{tag} [{}] {name}: {} ({:.1}s)", i + 1, out.detail, start.elapsed().as_secs_f64());
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
