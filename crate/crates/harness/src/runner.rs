//! Replication runner.
//!
//! Every (algorithm, replication) pair is an independent job: it builds its
//! own rng streams from `mix_seed(base_seed, rep)` and owns all of its
//! state, so jobs can run on any number of threads and the collected
//! results, which keep job order, do not depend on the thread count.
//! Algorithms share replication seeds, so they see common contexts until
//! their decisions diverge.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use rayon::prelude::*;

use ldp_bandit_core::rng::mix_seed;
use ldp_bandit_core::{
    run_multi, run_single, EnvSpec, MultiAlgoConfig, MultiRun, PrivacyBudget, RegretTrace, RoundRecord,
    SingleAlgoConfig, SingleRun, TraceMeta,
};

use crate::config::{AlgoConfig, ExperimentConfig};
use crate::presets::build_env;
use crate::report::write_traces;

/// Environment variable that sets the default thread count.
pub const THREADS_ENV: &str = "LDP_BANDIT_THREADS";

/// Seed of replication `rep`.
pub fn replication_seed(base_seed: u64, rep: usize) -> u64 {
    mix_seed(base_seed, rep as u64)
}

/// Thread count: the explicit request, else `LDP_BANDIT_THREADS`, else the
/// number of available cores.
pub fn resolve_parallelism(requested: Option<usize>) -> usize {
    requested
        .or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()))
        .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()))
        .unwrap_or(1)
        .max(1)
}

/// Result of one algorithm run.
#[derive(Debug, Clone)]
pub enum AlgoRun {
    Single(SingleRun<f64>),
    Multi(MultiRun<f64>),
}

impl AlgoRun {
    pub fn records(&self) -> &[RoundRecord<f64>] {
        match self {
            AlgoRun::Single(r) => &r.records,
            AlgoRun::Multi(r) => &r.records,
        }
    }
}

pub fn single_config(algo: &AlgoConfig, horizon: usize) -> anyhow::Result<SingleAlgoConfig<f64>> {
    let mut cfg = SingleAlgoConfig::new(algo.kind.estimator(), budget(algo)?, horizon);
    cfg.c_tilde_override = algo.c_tilde;
    cfg.sgd_c0 = algo.sgd_c0;
    cfg.alpha = algo.alpha.unwrap_or(crate::config::DEFAULT_ALPHA);
    cfg.noiseless = algo.noiseless();
    cfg.project_unit_ball = algo.project_unit_ball.unwrap_or(false);
    Ok(cfg)
}

pub fn multi_config(algo: &AlgoConfig, horizon: usize) -> anyhow::Result<MultiAlgoConfig<f64>> {
    let h = algo.h.context("multi algorithm without a resolved h")?;
    let mut cfg = MultiAlgoConfig::new(algo.kind.estimator(), budget(algo)?, horizon, h);
    cfg.s0 = algo.s0;
    cfg.sgd_c0 = algo.sgd_c0;
    cfg.k_opt_guess = algo.k_opt_guess;
    cfg.alpha = algo.alpha.unwrap_or(crate::config::DEFAULT_ALPHA);
    cfg.noiseless = algo.noiseless();
    cfg.c_tilde_override = algo.c_tilde;
    cfg.warmup_step = algo.warmup_step.map(Into::into).unwrap_or_default();
    cfg.project_unit_ball = algo.project_unit_ball.unwrap_or(false);
    Ok(cfg)
}

fn budget(algo: &AlgoConfig) -> anyhow::Result<PrivacyBudget<f64>> {
    Ok(PrivacyBudget::new(algo.epsilon, algo.delta())?)
}

/// Runs one algorithm for `horizon` rounds from `seed`.
pub fn execute(algo: &AlgoConfig, env: &EnvSpec<f64>, horizon: usize, seed: u64) -> anyhow::Result<AlgoRun> {
    Ok(match algo.kind.mode() {
        ldp_bandit_core::Mode::SingleParam => AlgoRun::Single(run_single(&single_config(algo, horizon)?, env, seed)?),
        ldp_bandit_core::Mode::MultiParam => AlgoRun::Multi(run_multi(&multi_config(algo, horizon)?, env, seed)?),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationFailure {
    pub algo: String,
    pub epsilon: f64,
    pub delta: f64,
    pub rep: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    /// In (algo, rep) order; failed replications are absent.
    pub traces: Vec<RegretTrace>,
    pub failures: Vec<ReplicationFailure>,
}

/// Runs every (algo, replication) pair of a resolved config.
pub fn run_experiment(cfg: &ExperimentConfig, parallelism: usize) -> anyhow::Result<RunOutput> {
    let env = build_env(&cfg.env.params())?;
    let jobs: Vec<(usize, usize)> = (0..cfg.algos.len())
        .flat_map(|a| (0..cfg.replications).map(move |r| (a, r)))
        .collect();
    let run_job = |&(a, rep): &(usize, usize)| {
        let algo = &cfg.algos[a];
        let seed = replication_seed(cfg.base_seed, rep);
        let meta = TraceMeta {
            env: cfg.env.preset.as_str().to_string(),
            algo: algo.label().to_string(),
            epsilon: algo.epsilon,
            delta: algo.delta(),
            rep,
            seed,
        };
        execute(algo, &env, cfg.horizon, seed)
            .and_then(|run| Ok(RegretTrace::from_records(meta.clone(), run.records(), cfg.log_stride)?))
            .map_err(|e| ReplicationFailure {
                algo: meta.algo.clone(),
                epsilon: meta.epsilon,
                delta: meta.delta,
                rep,
                seed,
                error: format!("{e:#}"),
            })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .context("building the thread pool")?;
    let results: Vec<Result<RegretTrace, ReplicationFailure>> = pool.install(|| jobs.par_iter().map(run_job).collect());

    let mut out = RunOutput::default();
    for r in results {
        match r {
            Ok(t) => out.traces.push(t),
            Err(f) => {
                log::warn!("replication {} of {} failed: {}", f.rep, f.algo, f.error);
                out.failures.push(f);
            }
        }
    }
    Ok(out)
}

/// Paths written by [`write_outputs`].
#[derive(Debug, Clone)]
pub struct OutputFiles {
    pub regret_csv: PathBuf,
    pub config_echo: PathBuf,
    pub failures_csv: Option<PathBuf>,
}

/// Writes `regret.csv`, the resolved `config.toml` and, if any replication
/// failed, `failures.csv` into `dir`.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, out: &RunOutput) -> anyhow::Result<OutputFiles> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let regret_csv = dir.join("regret.csv");
    let file = fs::File::create(&regret_csv).with_context(|| format!("creating {}", regret_csv.display()))?;
    let mut w = std::io::BufWriter::new(file);
    write_traces(&out.traces, &mut w)?;
    w.flush()?;

    let config_echo = dir.join("config.toml");
    fs::write(&config_echo, cfg.to_toml()).with_context(|| format!("writing {}", config_echo.display()))?;

    let failures_csv = if out.failures.is_empty() {
        None
    } else {
        let path = dir.join("failures.csv");
        let mut w = csv::WriterBuilder::new().from_path(&path)?;
        w.write_record(["algo", "epsilon", "delta", "rep", "seed", "error"])?;
        for f in &out.failures {
            w.write_record([
                f.algo.clone(),
                f.epsilon.to_string(),
                f.delta.to_string(),
                f.rep.to_string(),
                f.seed.to_string(),
                f.error.clone(),
            ])?;
        }
        w.flush()?;
        Some(path)
    };
    Ok(OutputFiles {
        regret_csv,
        config_echo,
        failures_csv,
    })
}
