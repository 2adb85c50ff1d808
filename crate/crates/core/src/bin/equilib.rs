use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use equilib::app::{self, Mode, RunConfig, EXIT_CONFIG};

#[derive(Parser)]
#[command(version, about = "Constrained equilibrium measures of the Ginibre rate functional")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate the constants, extract the measure, write the outputs
    Solve(RunArgs),
    /// Solve, then check the structural properties; exit 1 if any fails
    Verify(RunArgs),
    /// Half-plane criterion over a list of a-values
    HalfspaceScan(RunArgs),
    /// Compare the solver with a brute-force minimization on a coarse grid
    OracleCompare(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `output_dir` of the config
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Solve(a) => (Mode::Solve, a),
        Command::Verify(a) => (Mode::Verify, a),
        Command::HalfspaceScan(a) => (Mode::HalfspaceScan, a),
        Command::OracleCompare(a) => (Mode::OracleCompare, a),
    };
    if let Ok(v) = std::env::var("EQUILIB_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("warning: could not size the thread pool: {e}");
                }
            }
            _ => {
                eprintln!("error: EQUILIB_THREADS must be a positive integer, got {v:?}");
                return ExitCode::from(EXIT_CONFIG as u8);
            }
        }
    }
    let config = match RunConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    match app::run(mode, &config, args.out.as_deref()) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            if outcome.exit_code != 0 {
                eprintln!("run finished with exit code {}", outcome.exit_code);
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(app::exit_code_for(&e) as u8)
        }
    }
}
