//! Command-line harness: training runs, length sweeps, ablations and dataset
//! generation.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error, 3 training diverged.

pub mod commands;
pub mod config;
pub mod metrics;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use qrag_core::inference::{BeamConfig, DecodeMode};
use qrag_core::train::Ablation;

use commands::{cmd_eval, cmd_gen, cmd_sweep, cmd_train, format_table, EvalOptions, TrainOptions};
use config::{parse_lengths, EvalMode, RunConfig};

/// Bad flags or configuration; maps to exit code 1.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "qrag", version, about = "Train and evaluate multi-step retrieval agents")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (train, sweep) or file (gen, eval table).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalFlags {
    /// Decoding: `greedy` or `beam:k`.
    #[arg(long)]
    mode: Option<EvalMode>,
    /// Shorthand for `--mode beam:k`.
    #[arg(long, value_name = "K", conflicts_with = "mode")]
    beam: Option<usize>,
    /// Comma-separated evaluation lengths.
    #[arg(long)]
    lengths: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a training job.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        eval: EvalFlags,
        #[arg(long)]
        ablation: Option<String>,
        /// Total number of updates.
        #[arg(long)]
        steps: Option<u64>,
        /// Continue from a checkpoint file.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Stop after this many updates in this invocation (writes a checkpoint).
        #[arg(long)]
        stop_after: Option<u64>,
    },
    /// Evaluate a checkpoint at one or more context lengths.
    Eval {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        eval: EvalFlags,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Write generated instances as JSONL.
    Gen {
        #[command(flatten)]
        common: Common,
        #[arg(short = 'n', long, default_value_t = 100)]
        n: u64,
        /// Context length override.
        #[arg(long)]
        length: Option<usize>,
    },
    /// Train every ablation for every seed and tabulate the results.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        eval: EvalFlags,
        /// Comma-separated ablation modes.
        #[arg(long, default_value = "none,no_target")]
        ablations: String,
        /// Comma-separated seeds.
        #[arg(long, default_value = "0,1,2")]
        seeds: String,
        #[arg(long)]
        steps: Option<u64>,
    },
}

fn load_config(common: &Common) -> anyhow::Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn parse_ablation(s: &str) -> Result<Ablation, UsageError> {
    s.trim().parse().map_err(|e: qrag_core::Error| UsageError(e.to_string()))
}

fn decode_mode(flags: &EvalFlags) -> Result<Option<DecodeMode>, UsageError> {
    match (flags.mode, flags.beam) {
        (_, Some(0)) => Err(UsageError("beam width must be at least 1".into())),
        (_, Some(width)) => Ok(Some(DecodeMode::Beam(BeamConfig {
            width,
            oracle_depth: false,
        }))),
        (Some(m), None) => Ok(Some(m.0)),
        (None, None) => Ok(None),
    }
}

fn apply_eval_flags(cfg: &mut RunConfig, flags: &EvalFlags) -> anyhow::Result<()> {
    if let Some(m) = decode_mode(flags)? {
        cfg.eval.mode = EvalMode(m);
    }
    if let Some(l) = &flags.lengths {
        cfg.eval.lengths = parse_lengths(l)?;
    }
    Ok(())
}

fn run(cli: Cli, argv: Vec<String>) -> anyhow::Result<()> {
    match cli.cmd {
        Command::Train {
            common,
            eval,
            ablation,
            steps,
            resume,
            stop_after,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(o) = common.out {
                cfg.out_dir = o;
            }
            if let Some(a) = ablation {
                cfg.ablation = parse_ablation(&a)?;
            }
            if let Some(s) = steps {
                cfg.train.total_steps = s;
            }
            apply_eval_flags(&mut cfg, &eval)?;
            cfg.resolved_train().validate()?;
            let res = cmd_train(
                &cfg,
                &TrainOptions {
                    resume,
                    stop_after,
                    command: argv,
                },
            )?;
            println!(
                "finished at update {} ({} optimizer steps), outputs in {}",
                res.final_step,
                res.optimizer_steps,
                cfg.out_dir.display()
            );
            if !res.eval.is_empty() {
                print!("{}", format_table(&res.eval));
            }
        }
        Command::Eval {
            common,
            eval,
            checkpoint,
        } => {
            let mut config = match &common.config {
                Some(_) => Some(load_config(&common)?),
                None => None,
            };
            if let (Some(c), Some(s)) = (config.as_mut(), common.seed) {
                c.seed = s;
            }
            let lengths = eval.lengths.as_deref().map(parse_lengths).transpose()?;
            let rows = cmd_eval(&EvalOptions {
                checkpoint,
                config,
                lengths,
                mode: decode_mode(&eval)?,
                out: common.out,
            })?;
            print!("{}", format_table(&rows));
        }
        Command::Gen { common, n, length } => {
            let cfg = load_config(&common)?;
            let out = common
                .out
                .ok_or_else(|| UsageError("gen needs --out FILE".into()))?;
            cmd_gen(&cfg, n, length, &out)?;
            println!("wrote {n} instances to {}", out.display());
        }
        Command::Sweep {
            common,
            eval,
            ablations,
            seeds,
            steps,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(o) = common.out {
                cfg.out_dir = o;
            }
            if let Some(s) = steps {
                cfg.train.total_steps = s;
            }
            apply_eval_flags(&mut cfg, &eval)?;
            let ablations = ablations
                .split(',')
                .map(parse_ablation)
                .collect::<Result<Vec<_>, _>>()?;
            let seeds = seeds
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<u64>()
                        .map_err(|_| UsageError(format!("bad seed {s:?}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            print!("{}", cmd_sweep(&cfg, &ablations, &seeds, argv)?);
        }
    }
    Ok(())
}

/// Maps an error to the documented exit code.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<UsageError>().is_some() {
        return EXIT_USAGE;
    }
    match err.downcast_ref::<qrag_core::Error>() {
        Some(qrag_core::Error::Divergence(_)) => EXIT_DIVERGED,
        Some(qrag_core::Error::Config(_)) => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).try_init();
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let argv = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli, argv) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
