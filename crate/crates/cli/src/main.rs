//! `pairmix`: generate data, fit either sampler, compare the two, time them,
//! and rerun the built-in experiment presets.

mod commands;
mod config;
mod reproduce;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{Overrides, RunConfig, SamplerSetting};
use reproduce::Target;

#[derive(Parser)]
#[command(name = "pairmix", version = commands::VERSION, about = "Pairwise dependent stick-breaking mixtures for grouped data")]
struct Cli {
    #[command(flatten)]
    shared: Shared,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Shared {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Maximum number of chains run at once.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Zero wall-clock columns and drop SVG timestamps so reruns are
    /// byte-identical.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Also estimate densities by KDE of predictive draws.
    #[arg(long, global = true)]
    kde: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplerArg {
    Pdgsbp,
    Rpddp,
}

#[derive(Subcommand)]
enum Command {
    /// Write the configured dataset as `group,value` CSV.
    Generate,
    /// Fit one sampler and write its trace, densities and report.
    Fit {
        #[arg(long, value_enum)]
        sampler: Option<SamplerArg>,
    },
    /// Fit both samplers to the same data and report them side by side.
    Compare,
    /// Time both samplers on a range of group counts.
    Bench,
    /// Rebuild a table or figure from its built-in preset.
    Reproduce {
        #[arg(value_enum)]
        target: Target,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let s = cli.shared;
    let mut flags = Overrides {
        seed: s.seed,
        out: s.out,
        jobs: s.jobs,
        deterministic: s.deterministic,
        kde: s.kde,
        sampler: None,
    };
    match cli.command {
        Command::Reproduce { target } => {
            let cfg = config::resolve(reproduce::preset(target), s.config.as_deref(), &flags)?;
            reproduce::run(target, &cfg)
        }
        command => {
            if let Command::Fit { sampler: Some(k) } = command {
                flags.sampler = Some(match k {
                    SamplerArg::Pdgsbp => SamplerSetting::Pdgsbp,
                    SamplerArg::Rpddp => SamplerSetting::Rpddp,
                });
            }
            let cfg = config::resolve(RunConfig::default(), s.config.as_deref(), &flags)?;
            match command {
                Command::Generate => commands::cmd_generate(&cfg),
                Command::Fit { .. } => commands::cmd_fit(&cfg),
                Command::Compare => commands::cmd_compare(&cfg),
                Command::Bench => commands::cmd_bench(&cfg),
                Command::Reproduce { .. } => unreachable!(),
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
