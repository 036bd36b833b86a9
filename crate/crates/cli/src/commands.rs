use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tlcompose::automaton::{product, to_dot, translate, Fsa, ProductFsa};
use tlcompose::compose::{
    compose_skills, decomposition_check, CompositionJob, ComposeError, DecompositionReport, DecompositionSettings,
    ProductLabeler, StartPoint, Stage,
};
use tlcompose::env::{evaluate_satisfaction, DiscreteMdp, EvalReport, FsaAugmentedMdp, GridWorld, Policy, UniformPolicy};
use tlcompose::learner::{q_learning_train_with, QMeta, QTable, ReplayBuffer};
use tlcompose::StateSample;

use crate::config::{read_json, write_json, write_text, Artifact, ExperimentConfig};
use crate::error::{Failure, ResultExt};
use crate::render::render_table;

/// Evaluation streams are decoupled from the training stream.
const EVAL_SEED_OFFSET: u64 = 0x5eed_0000;

#[derive(Debug, Serialize, Deserialize)]
pub struct AutomatonFile {
    pub automaton: Fsa,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReplayFile {
    pub buffer: ReplayBuffer,
}

/// Automaton a table was learned on, rebuilt from the formulas in its metadata.
pub enum TaskAutomaton {
    Single(Fsa),
    Product(Box<ProductFsa>),
}

impl TaskAutomaton {
    pub fn fsa(&self) -> &Fsa {
        match self {
            TaskAutomaton::Single(f) => f,
            TaskAutomaton::Product(p) => p.fsa(),
        }
    }

    /// Rebuilds the automaton and checks it against the table's fingerprint.
    pub fn for_table(cfg: &ExperimentConfig, meta: &QMeta) -> Result<Self, Failure> {
        let task = match &meta.components {
            Some((l, r)) => {
                let (l, r) = (build_fsa(cfg, l)?, build_fsa(cfg, r)?);
                TaskAutomaton::Product(Box::new(product(&l, &r)))
            }
            None => TaskAutomaton::Single(build_fsa(cfg, &meta.formula)?),
        };
        if task.fsa().fingerprint() != meta.fsa_fingerprint {
            return Err(Failure::verification(format!(
                "automaton rebuilt from `{}` does not match the table's fingerprint (different macros?)",
                meta.formula
            )));
        }
        Ok(task)
    }
}

fn build_fsa(cfg: &ExperimentConfig, text: &str) -> Result<Fsa, Failure> {
    translate(&cfg.parse(text)?).config_err(|| format!("cannot translate `{text}`"))
}

fn grid(cfg: &ExperimentConfig) -> Result<GridWorld, Failure> {
    cfg.environment.grid().config_err(|| "invalid environment".to_string())
}

fn augmented(cfg: &ExperimentConfig, fsa: Fsa) -> Result<FsaAugmentedMdp<GridWorld>, Failure> {
    FsaAugmentedMdp::new(grid(cfg)?, fsa, cfg.environment.horizon).config_err(|| "automaton does not fit the environment".to_string())
}

fn check_env(cfg: &ExperimentConfig, what: &str, env_hash: &str) -> Result<(), Failure> {
    if grid(cfg)?.config_hash() != env_hash {
        return Err(Failure::verification(format!("{what} was produced on a different environment")));
    }
    Ok(())
}

fn load_table(path: &Path) -> Result<QTable, Failure> {
    let text = std::fs::read_to_string(path).config_err(|| format!("cannot read {}", path.display()))?;
    QTable::from_json(&text).config_err(|| format!("malformed table {}", path.display()))
}

fn write_table(path: &Path, table: &QTable) -> Result<(), Failure> {
    write_text(path, &format!("{}\n", table.to_json()))
}

fn dot_with_header(fsa: &Fsa, formula: &str, config_hash: &str) -> String {
    format!("// formula: {formula}\n// config_hash: {config_hash}\n{}", to_dot(fsa))
}

fn summary(fsa: &Fsa) -> String {
    format!(
        "states {} edges {} accepting {} trap {}",
        fsa.num_states(),
        fsa.edges().len(),
        fsa.accepting_states().count(),
        if fsa.trap().is_some() { "yes" } else { "no" }
    )
}

pub fn translate_cmd(cfg: &ExperimentConfig, out: &Path) -> Result<(), Failure> {
    let text = cfg.formula_text()?;
    let fsa = build_fsa(cfg, text)?;
    let hash = cfg.hash();
    write_json(
        &out.join("automaton.json"),
        &Artifact {
            formula: text.to_string(),
            config_hash: hash.clone(),
            body: AutomatonFile { automaton: fsa.clone() },
        },
    )?;
    write_text(&out.join("automaton.dot"), &dot_with_header(&fsa, text, &hash))?;
    println!("{}", summary(&fsa));
    Ok(())
}

pub fn train_cmd(cfg: &ExperimentConfig, out: &Path) -> Result<(), Failure> {
    let text = cfg.formula_text()?;
    let fsa = build_fsa(cfg, text)?;
    let env = augmented(cfg, fsa)?;
    let hash = cfg.hash();
    let meta = QMeta {
        formula: text.to_string(),
        components: None,
        fsa_fingerprint: env.fsa().fingerprint(),
        env_hash: env.mdp().config_hash(),
        config_hash: Some(hash.clone()),
    };
    let spec = &cfg.evaluation;
    let eval_seed = cfg.train.seed.wrapping_add(EVAL_SEED_OFFSET);
    let mut rows: Vec<(usize, EvalReport)> = Vec::new();
    let (table, buffer) = q_learning_train_with(&env, &cfg.train, meta, spec.every, |step, q| {
        rows.push((step, evaluate_satisfaction(&env, q, spec.episodes, eval_seed)));
    })
    .config_err(|| "invalid training settings".to_string())?;
    if rows.last().map(|r| r.0) != Some(cfg.train.budget) {
        rows.push((cfg.train.budget, evaluate_satisfaction(&env, &table, spec.episodes, eval_seed)));
    }

    let mut csv = format!("# formula: {text}\n# config_hash: {hash}\nstep,success_rate,mean_episode_len,mean_return\n");
    for (step, r) in &rows {
        let _ = writeln!(csv, "{step},{},{},{}", r.success_rate, r.mean_episode_len, r.mean_return);
    }
    write_text(&out.join("metrics.csv"), &csv)?;
    write_table(&out.join("qtable.json"), &table)?;
    write_json(
        &out.join("replay.json"),
        &Artifact {
            formula: text.to_string(),
            config_hash: hash.clone(),
            body: ReplayFile { buffer },
        },
    )?;
    write_json(
        &out.join("automaton.json"),
        &Artifact {
            formula: text.to_string(),
            config_hash: hash,
            body: AutomatonFile {
                automaton: env.fsa().clone(),
            },
        },
    )?;
    let last = &rows.last().expect("final checkpoint").1;
    println!(
        "trained `{text}` for {} steps: success {:.3} over {} episodes",
        cfg.train.budget, last.success_rate, last.episodes
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct EvaluationFile<'a> {
    formula: &'a str,
    config_hash: String,
    table_config_hash: Option<&'a str>,
    seed: u64,
    #[serde(flatten)]
    report: &'a EvalReport,
}

pub fn evaluate_cmd(
    cfg: &ExperimentConfig,
    table_path: &Path,
    seed: u64,
    min_success: Option<f64>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let table = load_table(table_path)?;
    check_env(cfg, "table", &table.meta.env_hash)?;
    let task = TaskAutomaton::for_table(cfg, &table.meta)?;
    let env = augmented(cfg, task.fsa().clone())?;
    let report = evaluate_satisfaction(&env, &table, cfg.evaluation.episodes, seed);
    let file = EvaluationFile {
        formula: &table.meta.formula,
        config_hash: cfg.hash(),
        table_config_hash: table.meta.config_hash.as_deref(),
        seed,
        report: &report,
    };
    let text = serde_json::to_string_pretty(&file).expect("report serializes");
    println!("{text}");
    if let Some(path) = out {
        write_text(path, &format!("{text}\n"))?;
    }
    if let Some(min) = min_success {
        if report.success_rate < min {
            return Err(Failure::verification(format!(
                "success rate {} below required {min}",
                report.success_rate
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct StageRate {
    stage: Stage,
    success_rate: f64,
    mean_episode_len: f64,
}

#[derive(Debug, Serialize)]
struct ComposeReport {
    formula: String,
    components: (String, String),
    config_hash: String,
    seed: u64,
    stage: Stage,
    updates: usize,
    episodes: usize,
    stages: Vec<StageRate>,
    correction_max_abs: Option<f64>,
    product_states: usize,
    product_accepting: usize,
    buffer_transitions: usize,
    relabeled_transitions: usize,
}

pub struct ComposeArgs<'a> {
    pub q1: &'a Path,
    pub q2: &'a Path,
    pub buffers: &'a [PathBuf],
    pub seed: u64,
    pub out: &'a Path,
}

pub fn compose_cmd(cfg: &ExperimentConfig, args: ComposeArgs<'_>) -> Result<(), Failure> {
    let q1 = load_table(args.q1)?;
    let q2 = load_table(args.q2)?;
    check_env(cfg, "first table", &q1.meta.env_hash)?;
    check_env(cfg, "second table", &q2.meta.env_hash)?;
    let f1 = TaskAutomaton::for_table(cfg, &q1.meta)?;
    let f2 = TaskAutomaton::for_table(cfg, &q2.meta)?;
    let pf = product(f1.fsa(), f2.fsa());
    let grid = grid(cfg)?;

    let mut loaded = Vec::new();
    for path in args.buffers {
        let file: Artifact<ReplayFile> = read_json(path)?;
        check_env(cfg, &format!("buffer {}", path.display()), &file.body.buffer.env_hash)?;
        loaded.push(file.body.buffer);
    }
    let buffer = ReplayBuffer::merged(&loaded).unwrap_or_else(|| ReplayBuffer::new(grid.config_hash()));
    let samples: Vec<StateSample> = (0..grid.num_states()).map(|s| grid.sample(s)).collect();
    let stage = cfg.composition.stage;
    let job = CompositionJob {
        q1: &q1,
        q2: &q2,
        product: &pf,
        buffer: &buffer,
        state_samples: &samples,
        stage,
        updates: cfg.composition.updates,
        gamma: cfg.train.gamma,
        alpha: cfg.train.alpha,
        seed: args.seed,
    };
    let result = compose_skills(&job).map_err(|e| match e {
        ComposeError::Mismatch(_) => Failure::Verification(e.into()),
        other => Failure::Config(other.into()),
    })?;

    let hash = cfg.hash();
    let env = augmented(cfg, pf.fsa().clone())?;
    let eval_seed = args.seed.wrapping_add(EVAL_SEED_OFFSET);
    let stages = result
        .stages
        .iter()
        .map(|(s, t)| {
            let r = evaluate_satisfaction(&env, t, cfg.evaluation.episodes, eval_seed);
            StageRate {
                stage: *s,
                success_rate: r.success_rate,
                mean_episode_len: r.mean_episode_len,
            }
        })
        .collect::<Vec<_>>();
    let mut table = result.final_table().clone();
    table.meta.config_hash = Some(hash.clone());
    let components = table.meta.components.clone().expect("composed tables name their factors");
    let report = ComposeReport {
        formula: table.meta.formula.clone(),
        components,
        config_hash: hash.clone(),
        seed: args.seed,
        stage,
        updates: cfg.composition.updates,
        episodes: cfg.evaluation.episodes,
        correction_max_abs: result
            .correction
            .as_ref()
            .map(|c| c.values().iter().fold(0.0, |m: f64, v| m.max(v.abs()))),
        product_states: pf.num_states(),
        product_accepting: pf.fsa().accepting_states().count(),
        buffer_transitions: buffer.len(),
        relabeled_transitions: result.relabeled,
        stages,
    };
    write_table(&args.out.join("composed_qtable.json"), &table)?;
    write_json(&args.out.join("compose_report.json"), &report)?;
    write_json(
        &args.out.join("product.json"),
        &Artifact {
            formula: table.meta.formula.clone(),
            config_hash: hash.clone(),
            body: &pf,
        },
    )?;
    write_text(&args.out.join("product.dot"), &dot_with_header(pf.fsa(), &table.meta.formula, &hash))?;
    for s in &report.stages {
        println!("{}: success {:.3}", s.stage, s.success_rate);
    }
    println!("product {}", summary(pf.fsa()));
    Ok(())
}

pub fn render_cmd(cfg: &ExperimentConfig, table_path: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let table = load_table(table_path)?;
    check_env(cfg, "table", &table.meta.env_hash)?;
    let task = TaskAutomaton::for_table(cfg, &table.meta)?;
    let text = render_table(cfg, &grid(cfg)?, task.fsa(), &table)?;
    print!("{text}");
    if let Some(path) = out {
        write_text(path, &text)?;
    }
    Ok(())
}

pub struct DecompositionArgs<'a> {
    pub table: Option<&'a Path>,
    pub left: Option<&'a str>,
    pub right: Option<&'a str>,
    pub seed: u64,
    pub rollouts: usize,
    pub starts: usize,
    pub sigmas: f64,
    pub out: Option<&'a Path>,
}

#[derive(Debug, Serialize)]
struct DecompositionFile<'a> {
    components: (&'a str, &'a str),
    config_hash: String,
    policy: &'a str,
    seed: u64,
    #[serde(flatten)]
    report: &'a DecompositionReport,
}

pub fn check_decomposition_cmd(cfg: &ExperimentConfig, args: DecompositionArgs<'_>) -> Result<(), Failure> {
    let table = args.table.map(load_table).transpose()?;
    let (left, right) = match (&table, args.left, args.right) {
        (Some(t), None, None) => {
            check_env(cfg, "table", &t.meta.env_hash)?;
            t.meta
                .components
                .clone()
                .ok_or_else(|| Failure::config("table is not a composed table; pass --left and --right"))?
        }
        (None, Some(l), Some(r)) => (l.to_string(), r.to_string()),
        _ => return Err(Failure::config("pass either --qtable or both --left and --right")),
    };
    let pf = product(&build_fsa(cfg, &left)?, &build_fsa(cfg, &right)?);
    if let Some(t) = &table {
        if t.meta.fsa_fingerprint != pf.fsa().fingerprint() || t.automaton_states() != pf.num_states() {
            return Err(Failure::verification("table does not belong to the rebuilt product automaton"));
        }
    }
    let grid = grid(cfg)?;
    let samples: Vec<StateSample> = (0..grid.num_states()).map(|s| grid.sample(s)).collect();
    let labeler = ProductLabeler::new(&pf, &samples).config_err(|| "automaton does not fit the environment".to_string())?;

    let live: Vec<usize> = (0..pf.num_states()).filter(|&q| !pf.fsa().is_terminal(q)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let starts: Vec<StartPoint> = if live.is_empty() {
        Vec::new()
    } else {
        (0..args.starts)
            .map(|_| StartPoint {
                s: rng.gen_range(0..grid.num_states()),
                q: live[rng.gen_range(0..live.len())],
                action: rng.gen_range(0..grid.num_actions()),
            })
            .collect()
    };
    let settings = DecompositionSettings {
        rollouts: args.rollouts,
        gamma: cfg.train.gamma,
        horizon: cfg.environment.horizon,
        sigmas: args.sigmas,
        seed: args.seed,
    };
    let uniform = UniformPolicy {
        num_actions: grid.num_actions(),
    };
    let policy: &dyn Policy = match &table {
        Some(t) => t,
        None => &uniform,
    };
    let report = decomposition_check(&grid, &labeler, policy, &starts, settings)
        .config_err(|| "decomposition check could not run".to_string())?;
    let file = DecompositionFile {
        components: (&left, &right),
        config_hash: cfg.hash(),
        policy: if table.is_some() { "greedy" } else { "uniform" },
        seed: args.seed,
        report: &report,
    };
    let text = serde_json::to_string_pretty(&file).expect("report serializes");
    if let Some(path) = args.out {
        write_text(path, &format!("{text}\n"))?;
    }
    for r in &report.starts {
        println!(
            "s={} q={} a={}: Q={:.4} Q1={:.4} Q2={:.4} Q12={:.4} diff={:+.4} se={:.4} {}",
            r.start.s,
            r.start.q,
            r.start.action,
            r.composed.mean,
            r.left.mean,
            r.right.mean,
            r.overlap.mean,
            r.difference,
            r.std_err,
            if r.pass { "ok" } else { "FAIL" }
        );
    }
    if !report.pass {
        return Err(Failure::verification(format!(
            "decomposition differs by more than {} standard errors",
            args.sigmas
        )));
    }
    Ok(())
}
