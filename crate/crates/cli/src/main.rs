//! Batch CLI for the secret-key-rate simulator: run config-driven sweeps,
//! validate configuration documents, and print the built-in defaults.

use clap::{Parser, Subcommand};
use skrsim_core::config::{parse_config, SystemConfig};
use skrsim_core::sweep::{emit_outputs, run_sweep, OutputFormats};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "skrsim",
    version,
    about = "Secret-key-rate sweeps for MIMO free-space-optical CV-QKD links"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a config file and write CSV/SVG outputs.
    Run {
        /// Path to a flat key-value config document.
        config: PathBuf,
        /// Output directory (created if missing).
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Comma-separated output formats: csv, svg.
        #[arg(long, default_value = "csv,svg")]
        formats: String,
    },
    /// Parse and validate a config file, printing its fingerprint.
    Validate { config: PathBuf },
    /// Print the default configuration document.
    Defaults,
}

fn read_config(path: &PathBuf) -> Result<SystemConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_config(&text).map_err(|e| e.to_string())
}

fn parse_formats(spec: &str) -> Result<OutputFormats, String> {
    let mut formats = OutputFormats {
        csv: false,
        svg: false,
    };
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item {
            "csv" => formats.csv = true,
            "svg" => formats.svg = true,
            other => return Err(format!("unknown format `{other}` (expected csv, svg)")),
        }
    }
    if !formats.csv && !formats.svg {
        return Err("no output formats selected".into());
    }
    Ok(formats)
}

fn run() -> Result<(), String> {
    match Cli::parse().command {
        Command::Run {
            config,
            out,
            formats,
        } => {
            let cfg = read_config(&config)?;
            let formats = parse_formats(&formats)?;
            let table = run_sweep(&cfg).map_err(|e| e.to_string())?;
            let manifest = emit_outputs(&table, &out, formats).map_err(|e| e.to_string())?;

            println!(
                "sweep {} ({} points, {} realizations/point, seed {})",
                table.axis.name(),
                table.rows.len(),
                cfg.realizations,
                cfg.seed
            );
            println!("fingerprint {}", manifest.fingerprint);
            for row in &table.rows {
                if row.failed {
                    println!("  axis {:>12.6}: FAILED", row.axis_value);
                } else {
                    println!(
                        "  axis {:>12.6}: one-way {:.6} ± {:.1e}, two-way {:.6} ± {:.1e}",
                        row.axis_value, row.skr_1way, row.se_1way, row.skr_2way, row.se_2way
                    );
                }
            }
            for entry in &manifest.entries {
                println!("wrote {} sha256={}", entry.path.display(), entry.sha256);
            }
            println!("wrote {}", manifest.manifest_path.display());
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = read_config(&config)?;
            println!("ok fingerprint={}", cfg.fingerprint());
            Ok(())
        }
        Command::Defaults => {
            print!("{}", SystemConfig::default().serialize());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
