use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rindler_cli::config::OutputFormat;
use rindler_cli::{format, CliError, FigureOptions, RunOptions, ScenarioConfig};
use rindler_core::figures::FigureId;

/// Accelerated-observer quantum switch and Bell-protocol simulator.
#[derive(Debug, Parser)]
#[command(name = "sim", version)]
struct Cli {
    /// Seed for the CHSH optimizer's random starts (defaults to a fixed seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Execute a scenario config and emit its run record.
    Run {
        config: PathBuf,
        /// Add the elapsed wall time to the record (breaks byte equality).
        #[arg(long)]
        wall_time: bool,
    },
    /// Emit plot data for a figure as CSV.
    Figure {
        /// A2, worldlines or tau_vs_r.
        id: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = FigureOptions::default().x0)]
        x0: f64,
        #[arg(long, default_value_t = FigureOptions::default().alpha1)]
        alpha1: f64,
        #[arg(long, default_value_t = FigureOptions::default().samples)]
        samples: usize,
        #[arg(long, default_value_t = FigureOptions::default().rs)]
        rs: f64,
        #[arg(long, default_value_t = FigureOptions::default().r0)]
        r0: f64,
    },
    /// Run a config over its ranged parameters and emit one CSV row per point.
    Sweep { config: PathBuf },
    /// Parse and check a config without running it.
    Validate { config: PathBuf },
}

fn emit(contents: &str, path: Option<&std::path::Path>) -> Result<(), CliError> {
    match path {
        Some(p) => rindler_cli::write_atomic(p, contents),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let opts = RunOptions { seed: cli.seed };
    match cli.command {
        Command::Run { config, wall_time } => {
            let cfg = ScenarioConfig::load(&config)?;
            let artifacts = rindler_cli::run(&cfg, opts, wall_time)?;
            match &cfg.output {
                None => emit(artifacts.json.as_deref().unwrap_or_default(), None),
                Some(out) => {
                    let csv_path = match out.format {
                        OutputFormat::JsonCsv => out.path.with_extension("csv"),
                        _ => out.path.clone(),
                    };
                    if let Some(json) = &artifacts.json {
                        emit(json, Some(&out.path))?;
                    }
                    if let Some(csv) = &artifacts.csv {
                        emit(csv, Some(&csv_path))?;
                    }
                    Ok(())
                }
            }
        }
        Command::Figure { id, output, x0, alpha1, samples, rs, r0 } => {
            let id: FigureId = id.parse().map_err(|e: rindler_core::figures::UnknownFigure| CliError::parse(e.to_string()))?;
            let table = rindler_cli::figure(id, &FigureOptions { x0, alpha1, samples, rs, r0 })?;
            emit(&table.to_csv(), output.as_deref())
        }
        Command::Sweep { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            let table = rindler_cli::sweep(&cfg, opts)?;
            emit(&table.to_csv(), cfg.output.as_ref().map(|o| o.path.as_path()))
        }
        Command::Validate { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            let report = rindler_cli::validate(&cfg, opts)?;
            emit(&format::to_json_string(&report), None)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = format::to_json_string(&serde_json::json!({ "error": e.to_json() }));
            let _ = std::io::stderr().write_all(body.as_bytes());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
