use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use cqsqueeze::{runner, Error, ExperimentConfig};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    Family,
    Propagate,
    Squeeze,
    ThetaScan,
    Validate,
}

/// Bistable cubic-quintic solitons and squeezing of their quantum fluctuations.
#[derive(Debug, Parser)]
#[command(name = "cqsqueeze", version)]
struct Cli {
    command: Command,
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override a config key, e.g. `--set integrator.dz=5e-4` or `--set pulses.0.gamma=-0.1`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGED: u8 = 3;
const EXIT_VALIDATION: u8 = 4;

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Domain(_) | Error::Usage(_) => EXIT_CONFIG,
        Error::Diverged { .. } | Error::Background { .. } => EXIT_DIVERGED,
        Error::Consistency(_) => EXIT_VALIDATION,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => 1,
    }
}

fn run(cli: &Cli) -> Result<bool, Error> {
    let cfg = ExperimentConfig::load(&cli.config, &cli.overrides)?;
    let summary = match cli.command {
        Command::Family => runner::cmd_family(&cfg)?,
        Command::Propagate => runner::cmd_propagate(&cfg)?,
        Command::Squeeze => runner::cmd_squeeze(&cfg)?,
        Command::ThetaScan => runner::cmd_theta_scan(&cfg)?,
        Command::Validate => runner::cmd_validate(&cfg)?,
    };
    for path in &summary.outputs {
        println!("{}", path.display());
    }
    println!("{}", summary.manifest.display());
    Ok(summary.passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("validation failed; see the report in the output directory");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
