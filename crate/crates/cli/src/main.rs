//! qdrop2d: spectra, phase diagrams, droplet families, stability and
//! dynamics of 2D quantum droplets in a complex PT-symmetric trap.

mod commands;
mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "qdrop2d",
    about = "2D spectral solvers for quantum droplets in a PT-symmetric trap",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration file (defaults apply when omitted).
    #[arg(long, global = true)]
    config: Option<String>,

    /// Dotted-path configuration overrides, e.g. --set model.omega=0.2
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,

    /// Output directory (overrides output.dir).
    #[arg(long, global = true)]
    out: Option<String>,

    /// Worker threads (overrides QDROP2D_THREADS and config.threads).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Lowest eigenvalues of the linear trap Hamiltonian (optionally a W0 sweep).
    Spectrum,
    /// PT-breaking boundary in the (V0, W0) plane.
    PhaseDiagram,
    /// One stationary droplet from a configurable seed.
    Solve,
    /// Continue a droplet family in mu or omega.
    Continue,
    /// Linear-stability spectrum of a stored stationary state.
    Bdg,
    /// Time-evolve an initial state in the rotating frame.
    Evolve,
    /// Collision experiment from a superposed two/three-droplet input.
    Collide,
    /// Analytic droplet and its residual report.
    Exact,
}

pub enum CmdError {
    Config(Vec<String>),
    Solver(String),
    Io(String),
}

impl From<qdrop2d_core::Error> for CmdError {
    fn from(e: qdrop2d_core::Error) -> Self {
        CmdError::Solver(e.to_string())
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Io(e.to_string())
    }
}

impl From<io::SnapshotError> for CmdError {
    fn from(e: io::SnapshotError) -> Self {
        CmdError::Io(e.to_string())
    }
}

fn resolve_threads(cli: Option<usize>, cfg: usize) -> usize {
    if let Some(n) = cli {
        return n;
    }
    if let Ok(env) = std::env::var("QDROP2D_THREADS") {
        if let Ok(n) = env.parse::<usize>() {
            return n;
        }
    }
    cfg
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    let mut config = match RunConfig::load(cli.config.as_deref(), &cli.sets) {
        Ok(c) => c,
        Err(errors) => {
            eprintln!(
                "{}",
                serde_json::json!({ "error": "config", "messages": errors })
            );
            return ExitCode::from(2);
        }
    };
    if let Some(dir) = cli.out {
        config.output.dir = dir;
    }

    let threads = resolve_threads(cli.threads, config.threads);
    if threads > 0 {
        // a second initialization in the same process is fine to ignore
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    let out_dir = PathBuf::from(&config.output.dir);
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!(
            "{}",
            serde_json::json!({ "error": "io", "message": format!("cannot create {}: {e}", out_dir.display()) })
        );
        return ExitCode::from(4);
    }

    let result = match cli.command {
        Command::Spectrum => commands::spectrum(&config, &out_dir),
        Command::PhaseDiagram => commands::phase_diagram(&config, &out_dir),
        Command::Solve => commands::solve(&config, &out_dir),
        Command::Continue => commands::continue_family(&config, &out_dir),
        Command::Bdg => commands::bdg(&config, &out_dir),
        Command::Evolve => commands::evolve(&config, &out_dir),
        Command::Collide => commands::collide(&config, &out_dir),
        Command::Exact => commands::exact(&config, &out_dir),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::Config(messages)) => {
            eprintln!(
                "{}",
                serde_json::json!({ "error": "config", "messages": messages })
            );
            ExitCode::from(2)
        }
        Err(CmdError::Solver(message)) => {
            eprintln!(
                "{}",
                serde_json::json!({ "error": "solver", "message": message })
            );
            ExitCode::from(3)
        }
        Err(CmdError::Io(message)) => {
            eprintln!(
                "{}",
                serde_json::json!({ "error": "io", "message": message })
            );
            ExitCode::from(4)
        }
    }
}
