use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use ldp_bandit_harness::acceptance::{run_suite, suite_ids, SUITES};
use ldp_bandit_harness::config::load_config;
use ldp_bandit_harness::pricing::synth_pricing;
use ldp_bandit_harness::report::{aggregate, read_traces, write_summary};
use ldp_bandit_harness::runner::{resolve_parallelism, run_experiment, write_outputs};

#[derive(Parser)]
#[command(name = "ldp-bandit", version, about = "Locally private contextual bandit benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write regret.csv and config.toml.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `base_seed` in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: $LDP_BANDIT_THREADS, else all cores).
        #[arg(long)]
        parallelism: Option<usize>,
    },
    /// Summarize a regret CSV into per-round mean, std and ±std/2 bands.
    Aggregate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run acceptance checks: all, quick, statistical, perf or a criterion number.
    Check {
        #[arg(long, default_value = "quick")]
        suite: String,
    },
    /// Write a synthetic loan-pricing CSV in the format the pricing_csv preset reads.
    SynthPricing {
        #[arg(long, default_value_t = 20_000)]
        rows: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            parallelism,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(s) = seed {
                cfg.base_seed = s;
            }
            let dir = out.unwrap_or_else(|| PathBuf::from(&cfg.output));
            let threads = resolve_parallelism(parallelism);
            log::info!(
                "{} algorithms × {} replications, T = {}, {threads} threads",
                cfg.algos.len(),
                cfg.replications,
                cfg.horizon
            );
            let result = run_experiment(&cfg, threads)?;
            let files = write_outputs(&dir, &cfg, &result)?;
            log::info!("wrote {}", files.regret_csv.display());
            if let Some(f) = files.failures_csv {
                log::warn!("{} replications failed, see {}", result.failures.len(), f.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Aggregate { input, out } => {
            let file = File::open(&input).with_context(|| format!("opening {}", input.display()))?;
            let traces = read_traces(BufReader::new(file)).with_context(|| format!("reading {}", input.display()))?;
            let rows = aggregate(&traces)?;
            let mut w = BufWriter::new(File::create(&out).with_context(|| format!("creating {}", out.display()))?);
            write_summary(&rows, &mut w)?;
            w.flush()?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { suite } => {
            let ids = suite_ids(&suite)
                .with_context(|| format!("unknown suite `{suite}`; expected one of {SUITES:?} or a criterion number 1-10"))?;
            let outcomes = run_suite(&ids, |o| println!("{o}"));
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            println!("{} passed, {failed} failed", outcomes.len() - failed);
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::SynthPricing { rows, out, seed } => {
            let mut w = BufWriter::new(File::create(&out).with_context(|| format!("creating {}", out.display()))?);
            synth_pricing(rows, seed, &mut w)?;
            w.flush()?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
