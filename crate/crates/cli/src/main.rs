mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use qcap_core::bounds::Flag;
use qcap_core::consistency_report;
use qcap_core::sweep::{render_csv, sweep_rows, FigurePreset};

use config::{read_toml, ReportParams, SweepParams};

const EXIT_USAGE: u8 = 1;
const EXIT_CONSISTENCY: u8 = 2;
const EXIT_TRUNCATION: u8 = 3;

/// Capacity bounds for bosonic attenuators and amplifiers with arbitrary
/// environments.
#[derive(Parser, Debug)]
#[command(name = "qcap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate bounds (and optional oracles) over a grid of input energies
    Sweep {
        /// TOML file with the same keys as the flags
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        params: SweepParams,
    },
    /// Check q_l <= I_c <= min(q_u1, q_u2) over a grid of points
    Report {
        /// TOML file with the same keys as the flags
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        params: ReportParams,
    },
    /// List figure presets
    Presets,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Sweep { config, params } => sweep(config.as_deref(), params),
        Command::Report { config, params } => report(config.as_deref(), params),
        Command::Presets => {
            for p in FigurePreset::ALL {
                println!("{}\t{}\t{}", p.name(), p.channel(), p.env());
            }
            Ok(0)
        }
    }
}

fn sweep(config_path: Option<&Path>, flags: SweepParams) -> Result<u8> {
    let params = match config_path {
        Some(path) => flags.overlay(read_toml(path)?),
        None => flags,
    };
    let config = params.resolve()?;
    let rows = sweep_rows(&config)?;
    emit(params.out.as_deref(), &render_csv(&config, &rows))?;
    if !config.channel.is_attenuator() {
        return Ok(0);
    }
    let code = if rows.iter().any(|r| r.report.has_sandwich_violation()) {
        EXIT_CONSISTENCY
    } else if rows
        .iter()
        .any(|r| r.report.flags.contains(&Flag::FockTruncated))
    {
        EXIT_TRUNCATION
    } else {
        0
    };
    Ok(code)
}

fn report(config_path: Option<&Path>, flags: ReportParams) -> Result<u8> {
    let params = match config_path {
        Some(path) => flags.overlay(read_toml(path)?),
        None => flags,
    };
    let grid = params.resolve()?;
    let report = consistency_report(&grid)?;
    emit(params.out.as_deref(), &report.to_csv())?;
    eprint!("{}", report.summary());
    Ok(report.exit_code() as u8)
}

fn emit(out: Option<&Path>, csv: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, csv).with_context(|| format!("cannot write {}", path.display()))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(csv.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}
