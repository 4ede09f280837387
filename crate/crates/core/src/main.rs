use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use voterdyn::experiment::{execute, Command, ExperimentConfig, ExperimentError, Overrides, EXIT_IO};

/// Voter dynamics on opinion-dependent evolving graphs: simulation and fluctuation checks.
///
/// Exit codes: 0 pass, 1 a check failed, 2 invalid configuration, 3 I/O error.
#[derive(Parser)]
#[command(name = "voterdyn", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Simulate and write pattern counts at every checkpoint.
    Simulate(Common),
    /// Gaussianity, covariance, moment and increment checks (one-way model).
    FcltCheck(Common),
    /// Disjoint-placement constants of the two-way model.
    TwoWayTable(Common),
    /// Binned edge frequencies against the type-indexed edge probability.
    GraphonCheck(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; falls back to VOTERDYN_WORKERS, then 1.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    replications: Option<usize>,
}

fn load(command: Command, args: &Common) -> Result<ExperimentConfig, ExperimentError> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
                path: path.clone(),
                source,
            })?;
            ExperimentConfig::parse(&text)?
        }
        None if command == Command::TwoWayTable => {
            ExperimentConfig::parse("[model]\nkind = two_way\n[run]\ntimes = 1, 2, 4\nreplications = 10000\n")?
        }
        None => ExperimentConfig::default(),
    };
    config.apply(&Overrides {
        seed: args.seed,
        workers: args.workers,
        output: args.out.clone(),
        replications: args.replications,
    })?;
    Ok(config)
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        Sub::Simulate(a) => (Command::Simulate, a),
        Sub::FcltCheck(a) => (Command::FcltCheck, a),
        Sub::TwoWayTable(a) => (Command::TwoWayTable, a),
        Sub::GraphonCheck(a) => (Command::GraphonCheck, a),
    };
    let result = load(command, args).and_then(|config| {
        log::info!(
            "running {} with output in {}",
            command.name(),
            config.run.output.display()
        );
        execute(command, &config)
    });
    match result {
        Ok((out, code)) => {
            print!("{}", out.report_text());
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("voterdyn {}: {e}", command.name());
            ExitCode::from(e.exit_code().clamp(0, EXIT_IO) as u8)
        }
    }
}
