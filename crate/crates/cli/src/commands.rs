//! The four subcommands.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use qrag_core::checkpoint::{load_trainer, save_trainer};
use qrag_core::inference::{evaluate, mean_std, DecodeMode, EvalSummary};
use qrag_core::seeding::{derive_seed, NS_EVAL, NS_GEN};
use qrag_core::taskgen::{to_json_line, TaskSpec};
use qrag_core::train::{Ablation, TaskSource, Trainer};
use qrag_core::{EncoderParams, EnvConfig, QModel};

use crate::config::{RunConfig, Task, TaskConfig};
use crate::metrics::{MetricsRow, MetricsWriter};
use crate::UsageError;

/// One evaluation setting: a generated length or the held-out dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
enum EvalTarget {
    Length(usize),
    Dataset,
}

impl EvalTarget {
    fn label(&self) -> String {
        match self {
            Self::Length(m) => m.to_string(),
            Self::Dataset => "data".into(),
        }
    }
}

fn eval_targets(cfg: &RunConfig, task: &Task) -> Vec<EvalTarget> {
    match task {
        Task::Generated(_) => cfg.eval_lengths(task).into_iter().map(EvalTarget::Length).collect(),
        Task::Dataset { .. } => vec![EvalTarget::Dataset],
    }
}

/// Metrics at one target, mean ± std over evaluation seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub target: String,
    pub n: usize,
    pub recall: (f64, f64),
    pub precision: (f64, f64),
    pub f1: (f64, f64),
    pub em: (f64, f64),
    pub wallclock: f64,
}

fn summarise(target: String, per_seed: &[EvalSummary], wallclock: f64) -> EvalRow {
    let stat = |f: fn(&EvalSummary) -> f64| mean_std(&per_seed.iter().map(f).collect::<Vec<_>>());
    EvalRow {
        target,
        n: per_seed.iter().map(|s| s.n).sum(),
        recall: stat(|s| s.recall),
        precision: stat(|s| s.precision),
        f1: stat(|s| s.f1),
        em: stat(|s| s.em),
        wallclock,
    }
}

struct Evaluator<'a> {
    cfg: &'a RunConfig,
    task: &'a Task,
    env_cfg: EnvConfig,
    mode: DecodeMode,
}

impl Evaluator<'_> {
    /// Instance seeds live in the evaluation namespace, so they never coincide
    /// with training seeds.
    fn run(&self, model: &QModel, params: &EncoderParams, target: EvalTarget) -> anyhow::Result<EvalRow> {
        let start = Instant::now();
        let seeds = self.cfg.eval.seeds.max(1);
        let mut per_seed = Vec::new();
        match (target, self.task) {
            (EvalTarget::Length(m), Task::Generated(spec)) => {
                let spec = spec.with_num_chunks(m);
                for e in 0..seeds {
                    let ids: Vec<u64> = (0..self.cfg.eval.instances)
                        .map(|i| derive_seed(self.cfg.seed, &[NS_EVAL, m as u64, e, i]))
                        .collect();
                    per_seed.push(evaluate(model, params, &spec, &ids, self.env_cfg, self.mode)?);
                }
            }
            (_, Task::Dataset { eval, .. }) => {
                // Fixed data: split it into `seeds` disjoint folds.
                let n = eval.instances.len() as u64;
                for e in 0..seeds.min(n) {
                    let ids: Vec<u64> = (e..n).step_by(seeds as usize).collect();
                    per_seed.push(evaluate(model, params, eval, &ids, self.env_cfg, self.mode)?);
                }
            }
            (EvalTarget::Dataset, Task::Generated(_)) => unreachable!("dataset target on a generated task"),
        }
        Ok(summarise(target.label(), &per_seed, start.elapsed().as_secs_f64()))
    }
}

fn write_eval_table(path: &Path, rows: &[EvalRow]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "target", "n", "recall", "recall_std", "precision", "precision_std", "f1", "f1_std", "em",
        "em_std", "wallclock",
    ])?;
    for r in rows {
        let mut rec = vec![r.target.clone(), r.n.to_string()];
        for (m, s) in [r.recall, r.precision, r.f1, r.em] {
            rec.push(m.to_string());
            rec.push(s.to_string());
        }
        rec.push(r.wallclock.to_string());
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn format_table(rows: &[EvalRow]) -> String {
    let mut s = format!(
        "{:<8} {:>6}  {:<15} {:<15} {:<15} {:<15} {:>9}\n",
        "length", "n", "recall", "precision", "f1", "em", "time_s"
    );
    let pm = |(m, sd): (f64, f64)| format!("{m:.3} ± {sd:.3}");
    for r in rows {
        s.push_str(&format!(
            "{:<8} {:>6}  {:<15} {:<15} {:<15} {:<15} {:>9.2}\n",
            r.target,
            r.n,
            pm(r.recall),
            pm(r.precision),
            pm(r.f1),
            pm(r.em),
            r.wallclock
        ));
    }
    s
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    seed: u64,
    ablation: Ablation,
    version: &'a str,
    command: Vec<String>,
    resumed_from: Option<String>,
}

/// What a checkpoint needs besides the trainer to be evaluated later.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct CheckpointExtra {
    run: RunConfig,
}

pub struct TrainOptions {
    pub resume: Option<PathBuf>,
    /// Stop (with a checkpoint) after this many updates in this invocation.
    pub stop_after: Option<u64>,
    pub command: Vec<String>,
}

pub struct TrainOutcome {
    pub final_step: u64,
    pub optimizer_steps: u64,
    pub eval: Vec<EvalRow>,
}

fn checkpoint_path(out: &Path, step: u64) -> PathBuf {
    out.join(format!("ckpt_{step}"))
}

pub fn cmd_train(cfg: &RunConfig, opts: &TrainOptions) -> anyhow::Result<TrainOutcome> {
    let task = cfg.task.load()?;
    let out = &cfg.out_dir;
    fs::create_dir_all(out)?;

    let mut trainer = match &opts.resume {
        Some(path) => {
            let (t, header) = load_trainer(path)?;
            if header.train != cfg.resolved_train() {
                warn!("training settings differ from {}; using the checkpoint's", path.display());
            }
            info!("resuming from {} at update {}", path.display(), t.step());
            t
        }
        None => Trainer::new(QModel::new(cfg.encoder)?, cfg.resolved_train())?,
    };

    fs::write(out.join("config.toml"), cfg.to_toml()?)?;
    let manifest = Manifest {
        seed: trainer.config().seed,
        ablation: trainer.config().ablation,
        version: env!("CARGO_PKG_VERSION"),
        command: opts.command.clone(),
        resumed_from: opts.resume.as_ref().map(|p| p.display().to_string()),
    };
    fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;

    let targets = eval_targets(cfg, &task);
    let labels: Vec<String> = targets.iter().map(EvalTarget::label).collect();
    let (mut metrics, wall0) = if opts.resume.is_some() {
        MetricsWriter::resume(out, labels, trainer.step())?
    } else {
        (MetricsWriter::create(out, labels)?, 0.0)
    };

    let extra = serde_json::to_value(CheckpointExtra { run: cfg.clone() })?;
    let evaluator = Evaluator {
        cfg,
        task: &task,
        env_cfg: trainer.config().env_config(),
        mode: cfg.eval.mode.0,
    };
    let source = task.train_source();
    let total = trainer.config().total_steps;
    let start = Instant::now();
    let mut done_here = 0u64;

    while !trainer.is_finished() {
        if opts.stop_after.is_some_and(|n| done_here >= n) {
            break;
        }
        let stats = trainer.update(source)?;
        done_here += 1;
        let completed = trainer.step();
        let interval = cfg.eval.interval;
        let eval_now = interval > 0 && completed % interval == 0;
        let eval_f1 = if eval_now {
            targets
                .iter()
                .map(|&t| Ok(Some(evaluator.run(trainer.model(), trainer.params(), t)?.f1.0)))
                .collect::<anyhow::Result<Vec<_>>>()?
        } else {
            vec![None; targets.len()]
        };
        metrics.write(&MetricsRow {
            step: stats.step,
            loss: stats.loss,
            mean_return: stats.mean_return,
            rollout_recall: stats.rollout_recall,
            eval_f1,
            lr: stats.lr,
            alpha: stats.alpha,
            grad_norm: stats.grad_norm,
            wallclock: wall0 + start.elapsed().as_secs_f64(),
        })?;
        if completed % 100 == 0 || completed == total {
            metrics.flush()?;
            info!(
                "update {completed}/{total} loss {:.4} return {:.3} recall {:.3}",
                stats.loss, stats.mean_return, stats.rollout_recall
            );
        }
        if cfg.checkpoint_every > 0 && completed % cfg.checkpoint_every == 0 {
            save_trainer(checkpoint_path(out, completed), &trainer, extra.clone())?;
        }
    }
    metrics.flush()?;
    let final_step = trainer.step();
    let last = checkpoint_path(out, final_step);
    if !last.exists() {
        save_trainer(&last, &trainer, extra)?;
    }
    if trainer.skipped_steps() > 0 {
        warn!("{} updates were skipped for non-finite gradients", trainer.skipped_steps());
    }

    let mut eval = Vec::new();
    if trainer.is_finished() {
        for &t in &targets {
            eval.push(evaluator.run(trainer.model(), trainer.params(), t)?);
        }
        write_eval_table(&out.join("eval.csv"), &eval)?;
    }
    Ok(TrainOutcome {
        final_step,
        optimizer_steps: trainer.optimizer().step,
        eval,
    })
}

pub struct EvalOptions {
    pub checkpoint: PathBuf,
    /// Overrides the run configuration stored in the checkpoint.
    pub config: Option<RunConfig>,
    pub lengths: Option<Vec<usize>>,
    pub mode: Option<DecodeMode>,
    pub out: Option<PathBuf>,
}

pub fn cmd_eval(opts: &EvalOptions) -> anyhow::Result<Vec<EvalRow>> {
    let (trainer, header) = load_trainer(&opts.checkpoint)?;
    let mut cfg = match &opts.config {
        Some(c) => c.clone(),
        None => serde_json::from_value::<CheckpointExtra>(header.extra.clone())
            .map(|e| e.run)
            .map_err(|_| UsageError("checkpoint carries no run configuration; pass --config".into()))?,
    };
    if let Some(l) = &opts.lengths {
        cfg.eval.lengths = l.clone();
    }
    if let Some(m) = opts.mode {
        cfg.eval.mode.0 = m;
    }
    let task = cfg.task.load()?;
    let evaluator = Evaluator {
        cfg: &cfg,
        task: &task,
        env_cfg: trainer.config().env_config(),
        mode: cfg.eval.mode.0,
    };
    let rows = eval_targets(&cfg, &task)
        .into_iter()
        .map(|t| evaluator.run(trainer.model(), trainer.params(), t))
        .collect::<anyhow::Result<Vec<_>>>()?;
    if let Some(p) = &opts.out {
        write_eval_table(p, &rows)?;
    }
    Ok(rows)
}

/// Writes `n` instances of a generated task as JSONL.
pub fn cmd_gen(cfg: &RunConfig, n: u64, length: Option<usize>, out: &Path) -> anyhow::Result<()> {
    let spec = match &cfg.task {
        TaskConfig::Niah(s) => TaskSpec::Niah(s.clone()),
        TaskConfig::FactChain(s) => TaskSpec::FactChain(s.clone()),
        TaskConfig::Jsonl { .. } => return Err(UsageError("gen needs a niah or fact_chain task".into()).into()),
    };
    let spec = match length {
        Some(m) => spec.with_num_chunks(m),
        None => spec,
    };
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut w = std::io::BufWriter::new(fs::File::create(out)?);
    for i in 0..n {
        let inst = spec.instance(derive_seed(cfg.seed, &[NS_GEN, i]))?;
        writeln!(w, "{}", to_json_line(&inst)?)?;
    }
    w.flush()?;
    Ok(())
}

/// Trains every (ablation, seed) pair into `{out}/{ablation}_s{seed}` and
/// collects the final evaluations.
pub fn cmd_sweep(
    base: &RunConfig,
    ablations: &[Ablation],
    seeds: &[u64],
    command: Vec<String>,
) -> anyhow::Result<String> {
    let out = base.out_dir.clone();
    fs::create_dir_all(&out)?;
    let mut w = csv::Writer::from_path(out.join("sweep.csv"))?;
    w.write_record(["ablation", "seed", "target", "n", "recall", "precision", "f1", "em"])?;
    let mut finals: Vec<(Ablation, EvalRow)> = Vec::new();
    for &ablation in ablations {
        for &seed in seeds {
            let name = format!("{}_s{seed}", ablation_name(ablation));
            info!("sweep run {name}");
            let cfg = RunConfig {
                seed,
                ablation,
                out_dir: out.join(&name),
                ..base.clone()
            };
            let res = cmd_train(
                &cfg,
                &TrainOptions {
                    resume: None,
                    stop_after: None,
                    command: command.clone(),
                },
            )?;
            for r in res.eval {
                w.write_record([
                    ablation_name(ablation).to_string(),
                    seed.to_string(),
                    r.target.clone(),
                    r.n.to_string(),
                    r.recall.0.to_string(),
                    r.precision.0.to_string(),
                    r.f1.0.to_string(),
                    r.em.0.to_string(),
                ])?;
                finals.push((ablation, r));
            }
            w.flush()?;
        }
    }

    // Cross-seed spread per ablation and target.
    let mut report = format!("{:<10} {:<8} {:<15} {:<15}\n", "ablation", "length", "recall", "f1");
    for &ablation in ablations {
        let mut targets: Vec<String> = Vec::new();
        for (_, r) in finals.iter().filter(|(a, _)| *a == ablation) {
            if !targets.contains(&r.target) {
                targets.push(r.target.clone());
            }
        }
        for t in targets {
            let pick = |f: fn(&EvalRow) -> f64| {
                let xs: Vec<f64> = finals
                    .iter()
                    .filter(|(a, r)| *a == ablation && r.target == t)
                    .map(|(_, r)| f(r))
                    .collect();
                mean_std(&xs)
            };
            let (rm, rs) = pick(|r| r.recall.0);
            let (fm, fs) = pick(|r| r.f1.0);
            report.push_str(&format!(
                "{:<10} {:<8} {:<15} {:<15}\n",
                ablation_name(ablation),
                t,
                format!("{rm:.3} ± {rs:.3}"),
                format!("{fm:.3} ± {fs:.3}")
            ));
        }
    }
    Ok(report)
}

pub fn ablation_name(a: Ablation) -> &'static str {
    match a {
        Ablation::None => "none",
        Ablation::NoTarget => "no_target",
        Ablation::NoSoftQ => "no_soft_q",
        Ablation::Sft => "sft",
        Ablation::NoFt => "no_ft",
    }
}
