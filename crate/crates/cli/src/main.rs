#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use wavelab_core::WaveError;

use config::{Format, Overrides, RunConfig};
use output::Sink;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    /// Profile, conserved quantities and gradient table
    Solve,
    /// Orientation index, modulational discriminant and cross-checks
    Indices,
    /// Spectral branches near the origin and an optional scan
    Spectrum,
    /// Index records over an (a, E, c) grid
    Sweep,
    /// Picard-Fuchs moments and the solitary-limit sequence
    Pf,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Indices => "indices",
            Command::Spectrum => "spectrum",
            Command::Sweep => "sweep",
            Command::Pf => "pf",
        }
    }
}

/// Periodic gBBM waves: profiles, stability indices and Evans spectra.
#[derive(Parser)]
#[command(name = "wavelab", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads for sweeps, scans and contour sampling
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory (default: current directory)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[command(flatten)]
    overrides: Overrides,
}

fn exit_code(e: &WaveError) -> u8 {
    if e.is_nonconvergence() {
        3
    } else {
        2
    }
}

fn run(cli: &Cli) -> Result<(), WaveError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    cfg.apply(&cli.overrides);
    if cli.jobs.is_some() {
        cfg.jobs = cli.jobs;
    }
    cfg.validate()?;
    if let Some(n) = cfg.jobs {
        // fails only if a pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let dir = cli.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("."));
    let format = cli.format.or(cfg.format).unwrap_or(Format::Json);
    let sink = Sink::new(dir, format)?;
    log::info!("running {} into {}", cli.command.name(), sink.dir.display());
    let files = match cli.command {
        Command::Solve => commands::solve(&cfg, &sink),
        Command::Indices => commands::indices(&cfg, &sink),
        Command::Spectrum => commands::spectrum(&cfg, &sink),
        Command::Sweep => commands::sweep(&cfg, &sink),
        Command::Pf => commands::pf(&cfg, &sink),
    }?;
    sink.meta(cli.command.name(), &files)?;
    for f in &files {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("WAVELAB_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            let body = serde_json::json!({ "error": e.kind(), "message": e.to_string(), "exit_code": code });
            println!("{body}");
            log::error!("{e}");
            ExitCode::from(code)
        }
    }
}
