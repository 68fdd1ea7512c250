//! `opgrowth`: run operator-size experiments from a TOML or JSON config.

mod commands;
mod config;
mod error;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Config;
use error::CliError;

#[derive(Parser)]
#[command(name = "opgrowth", version, about = "Operator-size dynamics of Brownian spin circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the finite-N master equation.
    Evolve(Common),
    /// Generating-function prediction through the configured 1/N order.
    Gf(Common),
    /// Leading eigenvalues over a list of sizes and their 1/N fit.
    Spectrum(Common),
    /// Monte Carlo over noise realizations, checked against the master equation.
    Mc(Common),
    /// Regenerate figure data: rho, cw or l3.
    Figures {
        name: String,
        #[command(flatten)]
        common: Common,
    },
    /// Master equation against every perturbative order.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides `mc.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write SVG line plots.
    #[arg(long)]
    svg: bool,
}

impl Common {
    fn load(&self) -> Result<Config, CliError> {
        let path = self.config.as_ref().ok_or_else(|| CliError::Config("missing --config <path>".into()))?;
        let mut cfg = Config::load(path)?;
        if let (Some(seed), Some(mc)) = (self.seed, cfg.mc.as_mut()) {
            mc.seed = seed;
        }
        Ok(cfg)
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("OPGROWTH_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("OPGROWTH_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size the worker pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let (outcome, common) = match &cli.command {
        Command::Evolve(c) => (commands::evolve(&c.load()?, c.svg)?, c),
        Command::Gf(c) => (commands::gf(&c.load()?, c.svg)?, c),
        Command::Spectrum(c) => (commands::spectrum(&c.load()?)?, c),
        Command::Mc(c) => (commands::mc(&c.load()?)?, c),
        Command::Compare(c) => (commands::compare(&c.load()?, c.svg)?, c),
        Command::Figures { name, common } => (commands::figures(name, common.svg)?, common),
    };
    for path in output::write_all(&common.out, &outcome.artifacts)? {
        println!("wrote {}", path.display());
    }
    for line in &outcome.summary {
        println!("{line}");
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("opgrowth: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
