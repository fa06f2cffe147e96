use std::path::PathBuf;
use std::process::ExitCode;

use cavarea_cli::{execute, load_config, write_outputs, Command};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cavarea", version, about = "Pulse-area dynamics of an ensemble in an impedance-matched cavity")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Scenario file (`section.key = value` lines). Defaults apply without one.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Leave the generation time out of the file headers.
    #[arg(long, global = true)]
    no_timestamp: bool,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Single time-domain run: traces and diagnostics.
    Simulate,
    /// Incoming-area sweep compared with the area relation.
    SweepArea,
    /// Reflection, inverted-medium response and group delays.
    Response,
    /// Analytic area relation on a grid of incoming areas.
    AreaTheorem,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let cmd = match cli.command {
        Cmd::Simulate => Command::Simulate,
        Cmd::SweepArea => Command::SweepArea,
        Cmd::Response => Command::Response,
        Cmd::AreaTheorem => Command::AreaTheorem,
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::FAILURE;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = load_config(cli.config.as_deref())
        .and_then(|cfg| execute(cmd, &cfg, !cli.no_timestamp))
        .and_then(|files| write_outputs(&cli.out, &files));
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
