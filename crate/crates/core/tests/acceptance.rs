//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits non-zero if any gating
//! criterion fails.

use std::cell::OnceCell;
use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qrag_core::features::FeatureConfig;
use qrag_core::inference::{beam_search, evaluate, greedy_retrieve, mean_std, BeamConfig, DecodeMode};
use qrag_core::qfunc::{action_positions, q_reencoded, score_state, ContentCache, PreparedTask};
use qrag_core::relpos::{RelPosMap, DEFAULT_DELTA, DEFAULT_ELL};
use qrag_core::rope::{frequencies, rope, rotation_matrix};
use qrag_core::seeding::{derive_seed, NS_EVAL};
use qrag_core::taskgen::{FactChainSpec, TaskSpec};
use qrag_core::train::loss::td_loss_and_grad;
use qrag_core::train::{
    compute_targets, Ablation, EnvTrajectory, StepRecord, TrainConfig, Trainer, TrajectoryBatch,
};
use qrag_core::{Action, EncoderConfig, EnvConfig, EpisodeState, PositionMode, QModel, TaskInstance};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

struct Suite {
    filter: Option<String>,
    failures: Vec<&'static str>,
}

impl Suite {
    fn run(&mut self, name: &'static str, budget: Duration, gating: bool, f: impl FnOnce() -> Outcome) {
        if self.filter.as_ref().is_some_and(|p| !name.contains(p.as_str())) {
            return;
        }
        let start = Instant::now();
        let out = f();
        let took = start.elapsed();
        let in_time = took <= budget;
        let pass = out.pass && in_time;
        let tag = match (pass, gating) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "ADVISORY-FAIL",
        };
        let late = if in_time { String::new() } else { format!(" (over the {budget:?} budget)") };
        println!("{tag:13} {name}: {} [{:.1}s]{late}", out.detail, took.as_secs_f64());
        if !pass && gating {
            self.failures.push(name);
        }
    }
}

// ---------------------------------------------------------------------------
// λ-returns

/// `G_{t:n}`: n rewards then the (masked) value n steps ahead.
fn n_step(r: &[f64], v: &[f64], done: &[bool], gamma: f64, t: usize, n: usize) -> f64 {
    let mut g = 0.0;
    for k in 0..n {
        g += gamma.powi(k as i32) * r[t + k];
        if done[t + k] {
            return g;
        }
    }
    g + gamma.powi(n as i32) * v[t + n]
}

/// Forward view: a λ-weighted mixture of n-step returns, with the remaining
/// weight on the longest one.
fn forward_view(r: &[f64], v: &[f64], done: &[bool], gamma: f64, lambda: f64) -> Vec<f64> {
    let len = r.len();
    (0..len)
        .map(|t| {
            let horizon = len - t;
            let mut g = 0.0;
            for n in 1..horizon {
                g += (1.0 - lambda) * lambda.powi(n as i32 - 1) * n_step(r, v, done, gamma, t, n);
            }
            g + lambda.powi(horizon as i32 - 1) * n_step(r, v, done, gamma, t, horizon)
        })
        .collect()
}

fn lambda_returns() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let len = rng.random_range(1..=8);
        let gamma = rng.random_range(0.0..=1.0);
        let lambda = rng.random_range(0.0..=1.0);
        let r: Vec<f64> = (0..len).map(|_| if rng.random_bool(0.3) { rng.random_range(-1.0..1.0) } else { 0.0 }).collect();
        let v: Vec<f64> = (0..=len).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut done = vec![false; len];
        if rng.random_bool(0.8) {
            done[len - 1] = true;
        }
        let backward = compute_targets(&r, &v, &done, gamma, lambda).unwrap();
        let forward = forward_view(&r, &v, &done, gamma, lambda);
        for (a, b) in backward.iter().zip(&forward) {
            worst = worst.max((a - b).abs());
        }
    }
    outcome(worst <= 1e-10, format!("max |backward - forward| = {worst:.2e} over 1000 trajectories"))
}

// ---------------------------------------------------------------------------
// Gradients

fn gradient_check() -> Outcome {
    let model = QModel::new(EncoderConfig {
        dim: 16,
        hidden: 8,
        features: FeatureConfig {
            buckets: 32,
            ..FeatureConfig::default()
        },
        ..EncoderConfig::default()
    })
    .unwrap();
    let params = model.init_params(5);
    let target = model.init_params(6);
    let tasks: Vec<PreparedTask> = (0..2)
        .map(|k| {
            let chunks = (0..6).map(|i| format!("token{i} group{} shared", (i + k) % 3)).collect();
            let inst = TaskInstance::new(format!("{k}"), format!("find group{k}"), chunks, [2, 5], "").unwrap();
            PreparedTask::new(&model, inst)
        })
        .collect();
    // Hand-picked episodes so that both towers and the Stop vector enter the loss.
    let plans = [vec![Action::Select(2), Action::Select(5)], vec![Action::Select(4), Action::Stop]];
    let env_cfg = EnvConfig {
        stop_enabled: true,
        ..EnvConfig::with_budget(2)
    };
    let mut envs = Vec::new();
    for (k, plan) in plans.iter().enumerate() {
        let inst = &tasks[k].instance;
        let cache = ContentCache::build(&model, &target, &tasks[k]);
        let mut state = EpisodeState::reset_with(inst, env_cfg).unwrap();
        let (mut steps, mut values) = (Vec::new(), Vec::new());
        for &a in plan {
            let (actions, rhos) = action_positions(&model, &state).unwrap();
            let idx = actions.iter().position(|&x| x == a).unwrap();
            let q = score_state(&model, &target, &tasks[k], &cache, &state).unwrap().q;
            values.push(qrag_core::train::soft_value(&q, 0.05).unwrap());
            let tr = state.step(inst, a).unwrap();
            steps.push(StepRecord {
                selected_before: state.selected().to_vec(),
                action: a,
                rho: rhos[idx],
                reward: tr.reward,
                done: tr.done,
                q_behavior: 0.0,
            });
            state = tr.state;
        }
        values.push(0.0);
        envs.push(EnvTrajectory {
            task: k,
            steps,
            values,
            final_selected: state.selected().to_vec(),
        });
    }
    let batch = TrajectoryBatch { envs };
    let targets: Vec<Vec<f64>> = batch
        .envs
        .iter()
        .map(|e| compute_targets(&e.rewards(), &e.values, &e.dones(), 0.99, 0.5).unwrap())
        .collect();
    let (_, grads) = td_loss_and_grad(&model, &params, &tasks, &batch, &targets).unwrap();

    let h = 1e-5;
    let loss_at = |p: &qrag_core::EncoderParams| td_loss_and_grad(&model, p, &tasks, &batch, &targets).unwrap().0;
    let mut probe = params.clone();
    let (mut worst, mut bad, mut nonzero) = (0.0f64, 0usize, 0usize);
    for i in 0..params.len() {
        let w = params.values[i];
        probe.values[i] = w + h;
        let up = loss_at(&probe);
        probe.values[i] = w - h;
        let down = loss_at(&probe);
        probe.values[i] = w;
        let fd = (up - down) / (2.0 * h);
        let g = grads[i];
        if g != 0.0 {
            nonzero += 1;
        }
        let rel = (g - fd).abs() / g.abs().max(fd.abs()).max(1e-6);
        worst = worst.max(rel);
        if rel >= 1e-4 {
            bad += 1;
        }
    }
    outcome(
        bad == 0,
        format!(
            "{} weights ({nonzero} with non-zero gradient), {bad} above 1e-4, worst rel err {worst:.2e}",
            params.len()
        ),
    )
}

// ---------------------------------------------------------------------------
// Tabular soft dynamic programming

const TAB_ALPHA: f64 = 0.5;
const TAB_GAMMA: f64 = 0.99;

/// Soft-optimal Q* of every reachable (state, action) pair by exhaustive recursion.
fn soft_dp(inst: &TaskInstance, state: &EpisodeState, out: &mut Vec<(EpisodeState, Action, f64)>) -> f64 {
    let mut qs = Vec::new();
    for a in state.legal_actions() {
        let tr = state.step(inst, a).unwrap();
        let future = if tr.done { 0.0 } else { soft_dp(inst, &tr.state, out) };
        let q = tr.reward + TAB_GAMMA * future;
        out.push((state.clone(), a, q));
        qs.push(q);
    }
    let mx = qs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    mx + TAB_ALPHA * qs.iter().map(|q| ((q - mx) / TAB_ALPHA).exp()).sum::<f64>().ln()
}

fn tabular() -> Outcome {
    let words = ["apple", "river", "stone", "cloud", "maple"];
    let chunks: Vec<String> = words.iter().map(|w| w.to_string()).collect();
    let inst = TaskInstance::new("tab", "query", chunks, [2, 4], "").unwrap();
    let features = FeatureConfig {
        buckets: 4096,
        word_ngrams: 1,
        ..FeatureConfig::default()
    };
    let enc = EncoderConfig {
        dim: 16,
        hidden: 32,
        features,
        ..EncoderConfig::default()
    };
    let model = QModel::new(enc).unwrap();
    let env_cfg = EnvConfig::with_budget(2);

    // Every word and every slot-tagged word must own a private bucket.
    let task = PreparedTask::new(&model, inst.clone());
    let mut buckets = BTreeSet::new();
    let mut count = 0;
    for w in words.iter().chain(["query"].iter()) {
        for (b, _) in model.featurizer().featurize(w).entries() {
            buckets.insert(*b);
            count += 1;
        }
    }
    for i in 1..=5 {
        let sf = task.state_features(&model, &[i]);
        for (b, _) in sf.entries() {
            if !model.featurizer().featurize("query").entries().iter().any(|(q, _)| q == b) {
                buckets.insert(*b);
                count += 1;
            }
        }
    }
    if buckets.len() != count {
        return outcome(false, "hashed features collide; pick other words".into());
    }

    let mut exact = Vec::new();
    let s0 = EpisodeState::reset_with(&inst, env_cfg).unwrap();
    soft_dp(&inst, &s0, &mut exact);

    let mut worst_overall: f64 = 0.0;
    let mut passes = 0;
    for seed in 0..3 {
        let cfg = TrainConfig {
            seed,
            gamma: TAB_GAMMA,
            alpha0: TAB_ALPHA,
            anneal_alpha: false,
            lambda: 0.0,
            tau: 0.05,
            num_envs: 16,
            budget: 2,
            lr0: 3e-3,
            warmup_steps: 50,
            total_steps: 3000,
            decay_floor_frac: 0.1,
            ..TrainConfig::desk()
        };
        let mut trainer = Trainer::new(model.clone(), cfg).unwrap();
        let source = |_: u64| Ok(inst.clone());
        while !trainer.is_finished() {
            trainer.update(&source).unwrap();
        }
        let cache = ContentCache::build(&model, trainer.params(), &task);
        let mut worst: f64 = 0.0;
        for (state, a, q_star) in &exact {
            let scored = score_state(&model, trainer.params(), &task, &cache, state).unwrap();
            let i = scored.actions.iter().position(|x| x == a).unwrap();
            worst = worst.max((scored.q[i] - q_star).abs());
        }
        worst_overall = worst_overall.max(worst);
        if worst <= 0.05 {
            passes += 1;
        }
    }
    outcome(
        passes == 3,
        format!(
            "{} reachable pairs, {passes}/3 seeds within 0.05, worst |Q - Q*| = {worst_overall:.4}",
            exact.len()
        ),
    )
}

// ---------------------------------------------------------------------------
// Rotary embeddings

fn rope_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dim = 16;
    let freqs = frequencies(dim, 10000.0).unwrap();
    let mut worst = [0.0f64; 4];

    let id = rotation_matrix(0.0, &freqs);
    for (i, row) in id.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            worst[0] = worst[0].max((x - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    for _ in 0..200 {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
        let w: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
        let t1 = rng.random_range(-50.0..50.0);
        let t2 = rng.random_range(-50.0..50.0);
        let norm = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>().sqrt();
        let rv = rope(&v, t1, &freqs).unwrap();
        worst[1] = worst[1].max((norm(&rv) - norm(&v)).abs());
        let twice = rope(&rv, t2, &freqs).unwrap();
        let once = rope(&v, t1 + t2, &freqs).unwrap();
        for (a, b) in twice.iter().zip(&once) {
            worst[2] = worst[2].max((a - b).abs());
        }

        // Kronecker identity on a pair of 2-blocks (a, b): in the basis P the
        // product of the rotated blocks is the product of the unrotated ones
        // rotated by the summed and by the differenced angles.
        let a = rng.random_range(0..dim / 2);
        let b = rng.random_range(0..dim / 2);
        let rw = rope(&w, t1, &freqs).unwrap();
        let kron = |x: &[f64], y: &[f64]| [x[0] * y[0], x[0] * y[1], x[1] * y[0], x[1] * y[1]];
        let basis = |k: [f64; 4]| {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            [s * (k[0] - k[3]), s * (k[1] + k[2]), s * (k[0] + k[3]), s * (k[2] - k[1])]
        };
        let lhs = basis(kron(&rv[2 * a..2 * a + 2], &rw[2 * b..2 * b + 2]));
        let base = basis(kron(&v[2 * a..2 * a + 2], &w[2 * b..2 * b + 2]));
        let rot = |x: f64, y: f64, ang: f64| [ang.cos() * x - ang.sin() * y, ang.sin() * x + ang.cos() * y];
        let sum = rot(base[0], base[1], (freqs[a] + freqs[b]) * t1);
        let diff = rot(base[2], base[3], (freqs[a] - freqs[b]) * t1);
        for (x, y) in lhs.iter().zip(sum.iter().chain(diff.iter())) {
            worst[3] = worst[3].max((x - y).abs());
        }
    }
    outcome(
        worst.iter().all(|&e| e <= 1e-12),
        format!(
            "identity {:.1e}, norm {:.1e}, composition {:.1e}, kronecker {:.1e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

// ---------------------------------------------------------------------------
// Relative positions

fn relpos_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut checked = 0usize;
    for &m in &[10usize, 1_000, 1_000_000] {
        for _ in 0..3 {
            let k = rng.random_range(0..=5.min(m));
            let mut sel: Vec<usize> = rand::seq::index::sample(&mut rng, m, k).into_iter().map(|i| i + 1).collect();
            sel.sort_unstable();
            let map = RelPosMap::new(&sel, m, DEFAULT_DELTA, DEFAULT_ELL).unwrap();
            let bound = k as f64 * DEFAULT_DELTA + DEFAULT_ELL;
            let mut prev = f64::NEG_INFINITY;
            for i in 1..=m {
                let r = map.rho(i).unwrap();
                let j = map.interval(i).unwrap();
                if r <= prev || !(0.0..bound).contains(&r) || (r / DEFAULT_DELTA).floor() as usize != j {
                    return outcome(false, format!("m={m} i={i} rho={r} interval={j}"));
                }
                prev = r;
                checked += 1;
            }
            for (j, &s) in sel.iter().enumerate() {
                if map.rho(s).unwrap() != (j + 1) as f64 * DEFAULT_DELTA {
                    return outcome(false, format!("selected chunk {s} not at {}δ", j + 1));
                }
            }
        }
    }
    outcome(true, format!("{checked} positions monotone, bounded and interval-consistent"))
}

// ---------------------------------------------------------------------------
// Learning and length generalisation

const EVAL_INSTANCES: u64 = 300;
const LONG_EVAL_INSTANCES: u64 = 150;

fn fact_task() -> TaskSpec {
    TaskSpec::FactChain(FactChainSpec::default())
}

fn eval_seeds(seed: u64, m: usize, n: u64) -> Vec<u64> {
    (0..n).map(|i| derive_seed(seed, &[NS_EVAL, m as u64, i])).collect()
}

/// The 64-wide default leaves one or two entities unlearned on most seeds
/// of this task; 128 learns all of them.
fn desk_encoder() -> EncoderConfig {
    EncoderConfig {
        dim: 128,
        hidden: 128,
        ..EncoderConfig::default()
    }
}

fn train_desk(seed: u64, ablation: Ablation) -> Trainer {
    let cfg = TrainConfig {
        seed,
        ablation,
        ..TrainConfig::desk()
    };
    let model = QModel::new(desk_encoder()).unwrap();
    let mut t = Trainer::new(model, cfg).unwrap();
    let task = fact_task();
    while !t.is_finished() {
        t.update(&task).unwrap();
    }
    t
}

fn recall_at(t: &Trainer, seed: u64, m: usize, n: u64) -> f64 {
    let task = fact_task().with_num_chunks(m);
    evaluate(
        t.model(),
        t.params(),
        &task,
        &eval_seeds(seed, m, n),
        t.config().env_config(),
        DecodeMode::Greedy,
    )
    .unwrap()
    .recall
}

// ---------------------------------------------------------------------------
// Beam search

fn brute_force(model: &QModel, params: &qrag_core::EncoderParams, inst: &TaskInstance, state: &EpisodeState) -> f64 {
    if state.is_done() {
        return 0.0;
    }
    state
        .legal_actions()
        .into_iter()
        .map(|a| {
            let q = q_reencoded(model, params, inst, state, a).unwrap();
            q + brute_force(model, params, inst, &state.step(inst, a).unwrap().state)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn beam_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut exhaustive = 0;
    for m in 1..=6 {
        for t in 1..=3 {
            for stop in [false, true] {
                for pos in [PositionMode::Relative, PositionMode::Absolute] {
                    for rep in 0..4 {
                        let model = QModel::new(EncoderConfig {
                            dim: 8,
                            hidden: 8,
                            position: pos,
                            features: FeatureConfig {
                                buckets: 256,
                                ..FeatureConfig::default()
                            },
                            ..EncoderConfig::default()
                        })
                        .unwrap();
                        let params = model.init_params(rng.random());
                        let chunks = (0..m).map(|i| format!("c{i} r{}", rng.random_range(0..4))).collect();
                        let inst = TaskInstance::new("b", format!("r{rep}"), chunks, [1], "").unwrap();
                        let cfg = EnvConfig {
                            stop_enabled: stop,
                            ..EnvConfig::with_budget(t)
                        };
                        let s0 = EpisodeState::reset_with(&inst, cfg).unwrap();
                        let best = brute_force(&model, &params, &inst, &s0);
                        let task = PreparedTask::new(&model, inst);
                        let width = (m + 1usize).pow(t as u32);
                        let got = beam_search(&model, &params, &task, cfg, BeamConfig { width, oracle_depth: false }).unwrap();
                        if (got.score - best).abs() > 1e-9 {
                            return outcome(false, format!("m={m} T={t}: beam {} vs brute force {best}", got.score));
                        }
                        exhaustive += 1;
                    }
                }
            }
        }
    }
    for n in 0..1000 {
        let m = rng.random_range(1..40);
        let t = rng.random_range(1..5);
        let model = QModel::new(EncoderConfig {
            dim: 8,
            hidden: 8,
            features: FeatureConfig {
                buckets: 256,
                ..FeatureConfig::default()
            },
            ..EncoderConfig::default()
        })
        .unwrap();
        let params = model.init_params(n);
        let chunks = (0..m).map(|i| format!("w{} w{}", i % 7, rng.random_range(0..9))).collect();
        let inst = TaskInstance::new("g", format!("w{}", n % 7), chunks, [1], "").unwrap();
        let task = PreparedTask::new(&model, inst);
        let cfg = EnvConfig {
            stop_enabled: rng.random_bool(0.3),
            ..EnvConfig::with_budget(t)
        };
        let g = greedy_retrieve(&model, &params, &task, cfg).unwrap();
        let b = beam_search(&model, &params, &task, cfg, BeamConfig { width: 1, oracle_depth: false }).unwrap();
        if g != b {
            return outcome(false, format!("instance {n}: width 1 {:?} vs greedy {:?}", b.actions, g.actions));
        }
    }
    outcome(true, format!("{exhaustive} exhaustive instances optimal, width 1 = greedy on 1000"))
}

fn main() {
    // Like libtest: the first non-flag argument selects criteria by substring.
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut suite = Suite {
        filter,
        failures: Vec::new(),
    };
    let secs = Duration::from_secs;

    suite.run("lambda-return equivalence", secs(1), true, lambda_returns);
    suite.run("gradient finite differences", secs(30), true, gradient_check);
    suite.run("tabular soft-DP oracle", secs(300), true, tabular);
    suite.run("RoPE identities", secs(1), true, rope_suite);
    suite.run("relative position mapping", secs(10), true, relpos_suite);
    suite.run("beam-search exactness", secs(60), true, beam_suite);

    let seeds = [0u64, 1, 2];
    // Trained once, shared by the learning, length and ablation criteria.
    let trained: OnceCell<(Vec<Trainer>, Vec<f64>)> = OnceCell::new();
    let trained_models = || {
        trained.get_or_init(|| {
            let start = Instant::now();
            let trainers: Vec<Trainer> = seeds.iter().map(|&s| train_desk(s, Ablation::None)).collect();
            println!("  trained {} seeds in {:.0}s", seeds.len(), start.elapsed().as_secs_f64());
            let recall = trainers
                .iter()
                .zip(&seeds)
                .map(|(t, &s)| recall_at(t, s, 64, EVAL_INSTANCES))
                .collect();
            (trainers, recall)
        })
    };
    suite.run("desk-scale learning", secs(7200), true, || {
        let mut lines = Vec::new();
        let (trainers, full) = trained_models();
        let baseline: Vec<f64> = seeds
            .iter()
            .map(|&s| {
                let model = QModel::new(desk_encoder()).unwrap();
                let cfg = TrainConfig { seed: s, ablation: Ablation::NoFt, ..TrainConfig::desk() };
                let t = Trainer::new(model, cfg).unwrap();
                recall_at(&t, s, 64, EVAL_INSTANCES)
            })
            .collect();
        let ok = full.iter().all(|&r| r >= 0.9) && baseline.iter().all(|&r| r <= 0.5);
        lines.push(format!("recall {full:.3?} after {} updates", trainers[0].step()));
        lines.push(format!("no-FT {baseline:.3?}"));
        outcome(ok, lines.join(", "))
    });

    suite.run("length generalisation", secs(1800), true, || {
        let mut ok = true;
        let mut parts = Vec::new();
        let (trainers, full) = trained_models();
        for ((t, &s), &base) in trainers.iter().zip(&seeds).zip(full) {
            let long: Vec<f64> = [256, 1024, 4096].iter().map(|&m| recall_at(t, s, m, LONG_EVAL_INSTANCES)).collect();
            let loss = (base - long[2]) / base.max(1e-12);
            ok &= loss <= 0.10;
            parts.push(format!("seed {s}: 64→{base:.3} 256→{:.3} 1024→{:.3} 4096→{:.3}", long[0], long[1], long[2]));
        }
        outcome(ok, parts.join("; "))
    });

    suite.run("no-target ablation spread (advisory)", secs(7200), false, || {
        let ablated: Vec<f64> = seeds
            .iter()
            .map(|&s| recall_at(&train_desk(s, Ablation::NoTarget), s, 64, EVAL_INSTANCES))
            .collect();
        let (fm, fs) = mean_std(&trained_models().1);
        let (am, as_) = mean_std(&ablated);
        outcome(as_ > fs, format!("full {fm:.3} ± {fs:.3}, no-target {am:.3} ± {as_:.3}"))
    });

    if suite.failures.is_empty() {
        println!("all gating criteria passed");
    } else {
        println!("failed: {}", suite.failures.join(", "));
        std::process::exit(1);
    }
}
