//! `tlcompose`: translate task formulas, train and evaluate tabular skills,
//! compose them, and render or verify the results.

mod commands;
mod config;
mod error;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tlcompose::compose::Stage;

use commands::{ComposeArgs, DecompositionArgs};
use config::ExperimentConfig;
use error::{Failure, ResultExt};

#[derive(Parser)]
#[command(name = "tlcompose", version, about = "Automata-guided skill learning and composition for temporal-logic tasks")]
struct Cli {
    /// Worker threads for evaluation and rollouts (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Task formula; overrides the config's `formula`.
    #[arg(long, short)]
    formula: Option<String>,
    /// Extra macro binding `name=body`; may repeat.
    #[arg(long = "macro", value_name = "NAME=BODY")]
    macros: Vec<String>,
    /// Output directory; overrides the config's `output_dir`.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a formula into an automaton (JSON + DOT).
    Translate(Common),
    /// Learn a Q-table with uniform exploration.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: u64,
        /// Update-step budget.
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Success rate of the greedy policy of a table.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        qtable: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        episodes: Option<usize>,
        /// Exit with status 3 below this success rate.
        #[arg(long)]
        min_success: Option<f64>,
    },
    /// Compose two learned tables for the conjunction of their tasks.
    Compose {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        q1: PathBuf,
        #[arg(long)]
        q2: PathBuf,
        /// Replay buffers recorded while training; may repeat.
        #[arg(long = "buffer")]
        buffers: Vec<PathBuf>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        stage: Option<Stage>,
        #[arg(long)]
        updates: Option<usize>,
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Print greedy-action grids, one per automaton state.
    Render {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        qtable: PathBuf,
    },
    /// Monte Carlo check that composed returns split into factor and overlap terms.
    CheckDecomposition {
        #[command(flatten)]
        common: Common,
        /// Composed table whose greedy policy is evaluated (default: uniform policy).
        #[arg(long)]
        qtable: Option<PathBuf>,
        #[arg(long)]
        left: Option<String>,
        #[arg(long)]
        right: Option<String>,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 2000)]
        rollouts: usize,
        /// Number of random (state, automaton state, action) start points.
        #[arg(long, default_value_t = 10)]
        starts: usize,
        #[arg(long, default_value_t = 3.0)]
        sigmas: f64,
    },
}

fn prepare(common: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::load(common.config.as_deref())?;
    if let Some(f) = &common.formula {
        cfg.formula = Some(f.clone());
    }
    for binding in &common.macros {
        let (name, body) = binding
            .split_once('=')
            .ok_or_else(|| Failure::config(format!("macro `{binding}` is not NAME=BODY")))?;
        cfg.environment.macros.insert(name.trim().to_string(), body.trim().to_string());
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .config_err(|| "cannot size the worker pool".to_string())?;
    }
    match cli.command {
        Command::Translate(common) => {
            let cfg = prepare(&common)?;
            cfg.validate()?;
            commands::translate_cmd(&cfg, &cfg.output_dir)
        }
        Command::Train { common, seed, budget } => {
            let mut cfg = prepare(&common)?;
            cfg.seed = Some(seed);
            cfg.train.seed = seed;
            if let Some(b) = budget {
                cfg.train.budget = b;
            }
            cfg.validate()?;
            commands::train_cmd(&cfg, &cfg.output_dir)
        }
        Command::Evaluate {
            common,
            qtable,
            seed,
            episodes,
            min_success,
        } => {
            let mut cfg = prepare(&common)?;
            if let Some(n) = episodes {
                cfg.evaluation.episodes = n;
            }
            cfg.validate()?;
            let out = common.out.as_ref().map(|d| d.join("evaluation.json"));
            commands::evaluate_cmd(&cfg, &qtable, seed, min_success, out.as_deref())
        }
        Command::Compose {
            common,
            q1,
            q2,
            buffers,
            seed,
            stage,
            updates,
            episodes,
        } => {
            let mut cfg = prepare(&common)?;
            cfg.seed = Some(seed);
            if let Some(s) = stage {
                cfg.composition.stage = s;
            }
            if let Some(u) = updates {
                cfg.composition.updates = u;
            }
            if let Some(n) = episodes {
                cfg.evaluation.episodes = n;
            }
            cfg.validate()?;
            let out = cfg.output_dir.clone();
            commands::compose_cmd(
                &cfg,
                ComposeArgs {
                    q1: &q1,
                    q2: &q2,
                    buffers: &buffers,
                    seed,
                    out: &out,
                },
            )
        }
        Command::Render { common, qtable } => {
            let cfg = prepare(&common)?;
            cfg.validate()?;
            let out = common.out.as_ref().map(|d| d.join("policy.txt"));
            commands::render_cmd(&cfg, &qtable, out.as_deref())
        }
        Command::CheckDecomposition {
            common,
            qtable,
            left,
            right,
            seed,
            rollouts,
            starts,
            sigmas,
        } => {
            let cfg = prepare(&common)?;
            cfg.validate()?;
            let out = common.out.as_ref().map(|d| d.join("decomposition.json"));
            commands::check_decomposition_cmd(
                &cfg,
                DecompositionArgs {
                    table: qtable.as_deref(),
                    left: left.as_deref(),
                    right: right.as_deref(),
                    seed,
                    rollouts,
                    starts,
                    sigmas,
                    out: out.as_deref(),
                },
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}
