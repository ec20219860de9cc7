use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use moving_well::cli::{run, Command, Method};

/// Exact and numerical dynamics of a particle in a square well with moving walls.
#[derive(Debug, Parser)]
#[command(name = "moving-well", version)]
struct Args {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration.
    #[arg(long, global = true, default_value = "config.json")]
    config: PathBuf,

    /// Propagator used by `evolve`.
    #[arg(long, global = true, value_enum, default_value_t = Method::Both)]
    method: Method,

    /// Output directory, overriding the configured one.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(threads) = std::env::var("MOVING_WELL_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match run(args.command, &args.config, args.method, args.out.as_deref()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("moving-well: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
