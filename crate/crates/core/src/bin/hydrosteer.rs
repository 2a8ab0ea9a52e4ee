use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hydrosteer::config::{ExperimentConfig, ExperimentKind};
use hydrosteer::experiment::{
    error_exit_code, resolve_output, run, Outcome, RunOptions, EXIT_CONFIG, EXIT_VERIFY,
};

#[derive(Parser)]
#[command(
    name = "hydrosteer",
    version,
    about = "Steering a rigid body through an ideal fluid with vorticity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the boundary problems and write the added-mass matrices.
    Potentials(Common),
    /// Integrate the configured control and write the trajectory.
    Simulate(Common),
    /// Find a control that reaches the configured target.
    Steer(Common),
    /// Simulate, then check the PDE residuals against their thresholds.
    Verify(Common),
    /// Compare runs with the seed vorticity scaled by the configured factors.
    ScaleStudy(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker thread cap; all cores when absent.
    #[arg(long)]
    threads: Option<usize>,
    /// Directory for reusable added-mass matrices.
    #[arg(long)]
    cache: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Potentials(a) => (ExperimentKind::Potentials, a),
        Command::Simulate(a) => (ExperimentKind::Simulate, a),
        Command::Steer(a) => (ExperimentKind::Steer, a),
        Command::Verify(a) => (ExperimentKind::Verify, a),
        Command::ScaleStudy(a) => (ExperimentKind::ScaleStudy, a),
    };
    if let Some(n) = args.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot size the thread pool: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    }
    let config = match ExperimentConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(error_exit_code(&e) as u8);
        }
    };
    if let Some(k) = config.kind {
        if k != kind {
            log::warn!("config declares {k:?} but {kind:?} was requested");
        }
    }
    let opts = RunOptions {
        out: resolve_output(&config, args.out),
        cache: args.cache,
    };
    match run(kind, &config, &opts) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::VerificationFailed(names)) => {
            eprintln!("verification failed: {}", names.join(", "));
            ExitCode::from(EXIT_VERIFY as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_exit_code(&e) as u8)
        }
    }
}
