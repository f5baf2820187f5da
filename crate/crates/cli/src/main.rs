mod commands;
mod config;
mod profile_io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Bad flags, a missing parameter or an invalid config: exit status 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "defect-forge", version, about = "Bingham-closure maps, radial defect profiles and their stability")]
struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "DEFECT_FORGE_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the moments at (f, g) as JSON.
    Moments(commands::MomentsArgs),
    /// Invert the moment map at (u, v).
    Closure(commands::ClosureArgs),
    /// CSV table of the inverse map over the physical region.
    ClosureTable(commands::TableArgs),
    /// Uniaxial critical points of the bulk potential.
    CriticalPoints(commands::AlphaArgs),
    /// CSV of the critical points over a range of alpha.
    PhaseScan(commands::ScanArgs),
    /// Solve the radial profile equations; writes profile CSV and a JSON sidecar.
    SolveProfile(commands::SolveArgs),
    /// Spectral stability report for a solved profile.
    Stability(commands::StabilityArgs),
    /// Ledger of the algebraic (and, with --profile, integral) identities.
    VerifyIdentities(commands::IdentityArgs),
}

#[derive(Args, Clone, Default)]
pub struct Common {
    /// Seed for sampled checks.
    #[arg(long)]
    seed: Option<u64>,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    match err.downcast_ref::<defect_forge::Error>() {
        Some(
            defect_forge::Error::InvalidInput(_)
            | defect_forge::Error::CapExceeded { .. }
            | defect_forge::Error::OutOfPhysicalRegion { .. },
        ) => 1,
        Some(_) => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let cfg = match config::RunConfig::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let res = match cli.command {
        Command::Moments(a) => commands::moments(cfg, a),
        Command::Closure(a) => commands::closure(cfg, a),
        Command::ClosureTable(a) => commands::closure_table(cfg, a),
        Command::CriticalPoints(a) => commands::critical_points(cfg, a),
        Command::PhaseScan(a) => commands::phase_scan(cfg, a),
        Command::SolveProfile(a) => commands::solve_profile(cfg, a),
        Command::Stability(a) => commands::stability(cfg, a),
        Command::VerifyIdentities(a) => commands::verify_identities(cfg, a),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("error: {e:#}");
            if code == 1 {
                eprintln!("run `defect-forge --help` for usage");
            }
            ExitCode::from(code)
        }
    }
}
