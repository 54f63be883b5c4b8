use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use liestab::harness::{run, Command, Format, HarnessError};
use serde_json::Value;

#[derive(Parser)]
#[command(name = "liestab", version, about = "Stability experiments for almost-homomorphisms of finite groups into matrix groups")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// JSON config file for the subcommand
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for all random streams
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads (defaults to the number of CPUs)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Multiplicativity defect of a map
    Defect,
    /// Haar-average repair of an almost-homomorphism
    Repair,
    /// Tubular projection onto a subgroup
    Project,
    /// Jordan constant of a finite group
    Jordan,
    /// Sampled relative Jordan constant of a subgroup
    RelJordan,
    /// Hausdorff distance between two finite sets
    Hausdorff,
    /// Ad-bound of a finite set of matrices
    Adbound,
    /// Defect-to-movement sweep over a catalog of groups
    SweepDelta,
}

#[derive(ValueEnum, Clone, Copy)]
enum FormatArg {
    Csv,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("liestab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: &Cli) -> Result<(), HarnessError> {
    let command = match cli.command {
        Cmd::Defect => Command::Defect,
        Cmd::Repair => Command::Repair,
        Cmd::Project => Command::Project,
        Cmd::Jordan => Command::Jordan,
        Cmd::RelJordan => Command::RelJordan,
        Cmd::Hausdorff => Command::Hausdorff,
        Cmd::Adbound => Command::Adbound,
        Cmd::SweepDelta => Command::SweepDelta,
    };
    let config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<Value>(&text)
                .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?
        }
        None if command == Command::SweepDelta => Value::Null,
        None => return Err(HarnessError::Config(format!("{} needs --config", command.name()))),
    };
    let format = cli.format.map(|f| match f {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    });

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(HarnessError::Config("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| HarnessError::Config(e.to_string()))?;
    let report = pool.install(|| run(command, &config, cli.seed, format))?;

    match &cli.out {
        Some(path) => std::fs::write(path, report).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{report}");
            Ok(())
        }
    }
}
