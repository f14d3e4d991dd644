use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use instab_cli::{out_dir, presets, run, CliError, Config};

/// Runs instability experiments from a JSON configuration.
#[derive(Parser)]
#[command(name = "instab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration file or a bundled preset.
    Run {
        /// Configuration file.
        #[arg(required_unless_present = "preset", conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Bundled preset name (see `instab presets`).
        #[arg(long)]
        preset: Option<String>,
        /// Output directory; defaults to $INSTAB_OUT, then ./instab-out.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Experiments run concurrently.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// List bundled presets.
    Presets,
}

fn load(config: Option<PathBuf>, preset: Option<String>) -> Result<Config, CliError> {
    match (config, preset) {
        (_, Some(name)) => {
            let text = presets::get(&name).ok_or_else(|| CliError::Usage(format!("unknown preset {name:?}")))?;
            Config::parse(&name, text)
        }
        (Some(path), None) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            Config::parse(&path.display().to_string(), &text)
        }
        (None, None) => Err(CliError::Usage("a config path or --preset is required".into())),
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Presets => {
            for name in presets::names() {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
        Command::Run { config, preset, out, jobs } => {
            let result = load(config, preset).and_then(|cfg| run(&cfg, &out_dir(out), jobs));
            match result {
                Ok(summary) => {
                    for e in &summary.experiments {
                        let verdict = e.verdict.map_or("ERROR".to_string(), |v| format!("{v:?}"));
                        let status = if e.satisfied { "ok" } else { "UNEXPECTED" };
                        println!("{:<40} {:<20} {:<13} {status}", e.name, e.kind, verdict);
                        if let Some(err) = &e.error {
                            eprintln!("{}: {err}", e.name);
                        }
                    }
                    ExitCode::from(summary.exit_code as u8)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
    }
}
