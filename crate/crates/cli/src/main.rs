//! Command-line entry point for the risk-stratification pipeline.
//!
//! Every run is (config, seed)-deterministic: flags never carry semantics
//! of their own, they rewrite the corresponding config field before the
//! config hash is computed, so a flag-tweaked run and the equivalent TOML
//! file produce byte-identical artifacts.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data/input error,
//! 4 internal invariant violation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lfurisk_cli::artifact::Ctx;
use lfurisk_cli::commands;
use lfurisk_cli::config::{Mitigation, RunConfig};
use lfurisk_core::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "lfurisk",
    version,
    about = "Risk stratification for tuberculosis treatment adherence",
    propagate_version = true
)]
struct Cli {
    /// TOML run configuration; built-in defaults are used when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory for all artifacts (default `lfurisk-out`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<String>,

    /// Run seed; overrides the config file.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic register with known ground truth.
    Synth {
        /// Number of register rows.
        #[arg(long, value_name = "N")]
        rows: Option<usize>,
    },
    /// Load (and merge) CSV registers described by schema manifests.
    Ingest,
    /// Carve the register into modeling/train/val/test/pes splits.
    Split {
        /// Trailing months reserved for passive evaluation.
        #[arg(long = "pes-months", value_name = "M")]
        pes_months: Option<i64>,
    },
    /// Two-stage encoder-then-model selection on the modeling window.
    Select {
        /// Random-search trials per stage.
        #[arg(long, value_name = "N")]
        budget: Option<usize>,
        /// Split to select on (must have the training role).
        #[arg(long, value_name = "NAME")]
        split: Option<String>,
    },
    /// Fit the final scoring pipeline.
    Train {
        /// Encoder override (else the selection winner).
        #[arg(long, value_name = "NAME")]
        encoder: Option<String>,
        /// Model family override (else the selection winner).
        #[arg(long, value_name = "NAME")]
        family: Option<String>,
        /// Split to fit on (must have the training role).
        #[arg(long, value_name = "NAME")]
        split: Option<String>,
    },
    /// Rank metrics with bootstrap intervals against baselines.
    Evaluate {
        /// Split to evaluate.
        #[arg(long, value_name = "NAME")]
        split: Option<String>,
    },
    /// Per-cohort recall under global and local thresholds.
    Cohorts {
        /// Split to evaluate.
        #[arg(long, value_name = "NAME")]
        split: Option<String>,
    },
    /// Measure and mitigate cohort recall disparity.
    Fairness {
        /// Mitigation: shifts, augment, or reweigh.
        #[arg(long, value_name = "NAME")]
        mitigation: Option<String>,
    },
    /// Predictive-multiplicity audit over near-tied candidates.
    Multiplicity {
        /// Performance tolerance defining the candidate set.
        #[arg(long, value_name = "E")]
        epsilon: Option<f64>,
        /// Maximum candidates refitted from the trial log.
        #[arg(long, value_name = "N")]
        candidates: Option<usize>,
    },
    /// Feature importance, effect curves, and local surrogates.
    Explain {
        /// Permutation repeats per feature.
        #[arg(long, value_name = "N")]
        repeats: Option<usize>,
    },
    /// Flatten all available artifacts into review tables.
    Report,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code: u8 = match e {
                Error::Config(_) => 2,
                Error::Internal(_) => 4,
                _ => 3,
            };
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    apply_overrides(&cli, &mut config)?;
    config.resolve();
    let ctx = Ctx::new(config)?;

    if let Some(n) = ctx.config.threads {
        // A pre-existing global pool (e.g. under tests) keeps its size.
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::debug!("thread pool already initialized: {e}");
        }
    }

    match &cli.command {
        Command::Synth { .. } => commands::synth::run(&ctx),
        Command::Ingest => commands::ingest::run(&ctx),
        Command::Split { .. } => commands::split::run(&ctx),
        Command::Select { .. } => commands::select::run(&ctx),
        Command::Train { .. } => commands::train::run(&ctx),
        Command::Evaluate { .. } => commands::evaluate::run(&ctx),
        Command::Cohorts { .. } => commands::cohorts::run(&ctx),
        Command::Fairness { .. } => commands::fairness::run(&ctx),
        Command::Multiplicity { .. } => commands::multiplicity::run(&ctx),
        Command::Explain { .. } => commands::explain::run(&ctx),
        Command::Report => commands::report::run(&ctx),
    }
}

/// Fold command-line flags into the config before hashing, so a flag-tweaked
/// run is indistinguishable from the equivalent config file.
fn apply_overrides(cli: &Cli, config: &mut RunConfig) -> Result<()> {
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.out = Some(out.clone());
    }
    if let Some(threads) = cli.threads {
        config.threads = Some(threads);
    }
    match &cli.command {
        Command::Synth { rows } => {
            if let Some(rows) = rows {
                config.data.synth.rows = *rows;
            }
        }
        Command::Ingest | Command::Report => {}
        Command::Split { pes_months } => {
            if let Some(m) = pes_months {
                config.split.pes_months = *m;
            }
        }
        Command::Select { budget, split } => {
            if let Some(b) = budget {
                config.selection.budget = *b;
            }
            if let Some(s) = split {
                config.selection.split = s.clone();
            }
        }
        Command::Train { encoder, family, split } => {
            if let Some(e) = encoder {
                config.train.encoder = e.clone();
            }
            if let Some(f) = family {
                config.train.family = f.clone();
            }
            if let Some(s) = split {
                config.train.split = s.clone();
            }
        }
        Command::Evaluate { split } => {
            if let Some(s) = split {
                config.evaluate.split = s.clone();
            }
        }
        Command::Cohorts { split } => {
            if let Some(s) = split {
                config.cohorts.split = s.clone();
            }
        }
        Command::Fairness { mitigation } => {
            if let Some(m) = mitigation {
                config.fairness.mitigation = Mitigation::parse(m)?;
            }
        }
        Command::Multiplicity { epsilon, candidates } => {
            if let Some(e) = epsilon {
                config.multiplicity.epsilon = *e;
            }
            if let Some(c) = candidates {
                config.multiplicity.candidates = *c;
            }
        }
        Command::Explain { repeats } => {
            if let Some(r) = repeats {
                config.explain.repeats = *r;
            }
        }
    }
    Ok(())
}
