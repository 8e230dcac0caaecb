//! Command-line harness. Every verb reads one JSON config, computes its
//! artifacts in memory and writes them under the output directory only
//! when the whole command succeeded.

mod commands;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

pub use commands::{
    cmd_baseline, cmd_evaluate, cmd_sweep, cmd_synth, cmd_train, cmd_validate, Prepared,
};
pub use config::{BaselineSpec, DataPaths, ExperimentConfig, LtrSpec, SplitSpec, SweepSpec};
pub use output::{Artifacts, Manifest};

use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "prefweight", version, about = "Learn benchmark question weights from a target model ranking")]
pub struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for independent sweep cells.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load every input and print corpus counts.
    Validate,
    /// Learn question weights on the training side of the split.
    Train,
    /// Apply a weighted benchmark to the test side and score it.
    Evaluate {
        /// Weighted benchmark CSV (question_id,weight,normalized_weight).
        #[arg(long)]
        benchmark: PathBuf,
    },
    /// Run a comparison baseline on the test side.
    Baseline {
        #[arg(value_enum)]
        name: BaselineName,
    },
    /// Train and evaluate over nested model or question subsets.
    Sweep {
        #[arg(value_enum)]
        axis: SweepAxis,
    },
    /// Write a synthetic world with planted weights, plus a config for it.
    Synth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineName {
    #[value(name = "random")]
    Random,
    #[value(name = "metabench")]
    Metabench,
    #[value(name = "tinybenchmarks")]
    Tinybenchmarks,
    #[value(name = "no_ltr")]
    NoLtr,
}

impl BaselineName {
    pub fn as_str(self) -> &'static str {
        match self {
            BaselineName::Random => "random",
            BaselineName::Metabench => "metabench",
            BaselineName::Tinybenchmarks => "tinybenchmarks",
            BaselineName::NoLtr => "no_ltr",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepAxis {
    Models,
    Questions,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Models => "models",
            SweepAxis::Questions => "questions",
        }
    }
}

/// A loaded config plus the hash of the file it came from.
pub struct Loaded {
    pub config: ExperimentConfig,
    pub config_sha256: String,
}

fn load_config(path: &Path, seed: Option<u64>, out: Option<&Path>) -> Result<Loaded> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut config = ExperimentConfig::from_json(&text)
        .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
    config.resolve(path.parent().unwrap_or(Path::new("")));
    if let Some(s) = seed {
        config.set_seed(s);
    }
    if let Some(o) = out {
        config.output_dir = o.to_path_buf();
    }
    Ok(Loaded {
        config,
        config_sha256: output::sha256_hex(text.as_bytes()),
    })
}

/// Runs one parsed invocation. Output files are written before returning.
pub fn run(cli: &Cli) -> Result<()> {
    let jobs = cli.jobs.max(1);
    let loaded = || -> Result<Loaded> {
        let path = cli
            .config
            .as_deref()
            .ok_or_else(|| Error::invalid("--config is required for this command"))?;
        load_config(path, cli.seed, cli.out.as_deref())
    };
    match &cli.command {
        Command::Validate => {
            let report = cmd_validate(&loaded()?.config)?;
            print!("{report}");
            Ok(())
        }
        Command::Train => {
            let l = loaded()?;
            cmd_train(&l.config, &l.config_sha256)?.commit(&l.config.output_dir)
        }
        Command::Evaluate { benchmark } => {
            let l = loaded()?;
            let (artifacts, report) = cmd_evaluate(&l.config, benchmark)?;
            artifacts.commit(&l.config.output_dir)?;
            print!("{}", report.to_json());
            Ok(())
        }
        Command::Baseline { name } => {
            let l = loaded()?;
            cmd_baseline(&l.config, *name)?.commit(&l.config.output_dir)
        }
        Command::Sweep { axis } => {
            let l = loaded()?;
            cmd_sweep(&l.config, *axis, jobs)?.commit(&l.config.output_dir)
        }
        Command::Synth => {
            let config = match &cli.config {
                Some(p) => load_config(p, cli.seed, cli.out.as_deref())?.config,
                None => {
                    let mut c = ExperimentConfig::from_json(r#"{"seed": 0}"#)?;
                    if let Some(s) = cli.seed {
                        c.set_seed(s);
                    }
                    if let Some(o) = &cli.out {
                        c.output_dir = o.clone();
                    }
                    c
                }
            };
            cmd_synth(&config)?.commit(&config.output_dir)
        }
    }
}
