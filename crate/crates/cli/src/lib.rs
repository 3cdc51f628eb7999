//! Batch front-end for `halfspace-scattering`: parses a run configuration,
//! sweeps the requested Bloch fibers and writes CSV/JSON tables.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use commands::Run;
use config::RunConfig;
use error::CliError;
use output::Sink;

#[derive(Debug, Parser)]
#[command(name = "halfspace", version, about = "Fiberwise spectral and scattering data of the half-space Laplacian with a periodic boundary potential")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Seed for random potentials; overrides `seed` in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Embedded eigenvalues and the σ_min scan.
    Spectrum,
    /// S-matrix scan plus limits at every threshold in the λ range.
    Smatrix,
    /// Threshold cascades, one-sided limits and consistency scans.
    Threshold,
    /// Expansions around embedded eigenvalues.
    Eigexp,
    /// HS norms, wave-operator decomposition, kernel samples and the propagation check.
    Waveop,
    /// Aggregate the outputs in --out into summary.json and summary.txt.
    Report,
}

impl Command {
    fn needs_lambda(self) -> bool {
        matches!(self, Command::Spectrum | Command::Smatrix)
    }
}

/// Runs one subcommand and returns the process exit code.
pub fn run(cli: Cli) -> Result<i32, CliError> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::Validation("--jobs must be positive".into()));
        }
        // a second call in the same process (tests) keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }

    if cli.command == Command::Report {
        let dir = match (&cli.out, &cli.config) {
            (Some(d), _) => d.clone(),
            (None, Some(c)) => RunConfig::load(c)?.0.out.unwrap_or_else(|| PathBuf::from("out")),
            (None, None) => PathBuf::from("out"),
        };
        let s = commands::report::run(&dir)?;
        print!("{}", commands::report::render(&s));
        return Ok(if s.status == commands::report::Status::Fail { 3 } else { 0 });
    }

    let path = cli.config.clone().ok_or_else(|| CliError::Validation("--config is required".into()))?;
    let (mut cfg, text) = RunConfig::load(&path)?;
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    cfg.validate(&text, cli.command.needs_lambda())?;
    let dir = cli.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let sink = Sink::new(&dir, &cfg)?;
    let mut r = Run { cfg, sink, failures: vec![] };
    match cli.command {
        Command::Spectrum => commands::spectrum::run(&mut r)?,
        Command::Smatrix => commands::smatrix::run(&mut r)?,
        Command::Threshold => commands::threshold::run(&mut r)?,
        Command::Eigexp => commands::eigexp::run(&mut r)?,
        Command::Waveop => commands::waveop::run(&mut r)?,
        Command::Report => unreachable!(),
    }
    for p in r.sink.written() {
        println!("{}", p.display());
    }
    Ok(if r.failures.is_empty() { 0 } else { 3 })
}
