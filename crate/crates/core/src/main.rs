use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chgeo::checks::{identity_suite, render_table, CheckOptions};
use chgeo::config::parse_config;
use chgeo::run::{append_sweep_lines, exit_status, parse_sweep_config, run_simulate, run_sweep};

#[derive(Parser)]
#[command(name = "chgeo", version, about = "Two-component Camassa-Holm geodesic solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write trajectory.csv and summary.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run the operator-identity suite and print a pass/fail table.
    Check,
    /// Run every cell of a parameter grid and append to sweep.jsonl.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn read(path: &Path) -> Result<String, ExitCode> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        ExitCode::from(1)
    })
}

fn simulate(config: &Path, out: &Path) -> Result<ExitCode, ExitCode> {
    let cfg = parse_config(&read(config)?).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(1)
    })?;
    let run = run_simulate(&cfg, out).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(1)
    })?;
    let term = run.summary.termination;
    println!("{}", serde_json::to_string(&term).unwrap_or_default());
    Ok(ExitCode::from(exit_status(&term) as u8))
}

fn check() -> ExitCode {
    match identity_suite(&CheckOptions::default()) {
        Ok(rows) => {
            print!("{}", render_table(&rows));
            if rows.iter().all(|r| r.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn sweep(config: &Path, jobs: usize, out: &Path) -> Result<ExitCode, ExitCode> {
    let plan = parse_sweep_config(&read(config)?).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(1)
    })?;
    let lines = run_sweep(&plan, jobs).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(1)
    })?;
    append_sweep_lines(&lines, out).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(1)
    })?;
    for l in &lines {
        log::info!("cell {} (s={}, a={}, kappa={}, alpha={}): {}", l.cell, l.s, l.a, l.kappa, l.alpha, l.status);
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, out } => simulate(&config, &out),
        Command::Check => Ok(check()),
        Command::Sweep { config, jobs, out } => sweep(&config, jobs, &out),
    };
    result.unwrap_or_else(|code| code)
}
