use std::path::PathBuf;
use std::process::ExitCode;

use chiprobe_cli::config::{parse_config_with, schema_help, Command};
use chiprobe_cli::run::{execute, format_config_errors, EXIT_CONFIG, EXIT_IO};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

/// Characteristic-function reconstruction with a dispersively coupled qubit probe.
#[derive(Debug, Parser)]
#[command(name = "chiprobe", version, after_long_help = schema_help())]
struct Cli {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override one configuration key; repeatable, applied after the file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Directory for datasets and the run manifest.
    #[arg(long, global = true, value_name = "DIR", default_value = "chiprobe-out")]
    output: PathBuf,

    /// Worker threads for grid scans [default: available parallelism].
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Sub {
    /// Ideal χ, measured signal and e^(2f) over a square grid.
    Scan,
    /// Decoherence-corrected χ estimates over a square grid.
    Reconstruct,
    /// Quadrature moments from a ray of small-|β| points.
    Moments,
    /// χ of the post-selected cat state on a square grid.
    Cat,
    /// Closed-form signal against the master-equation oracle.
    OracleCheck,
    /// Shot budgets for a list of damping exponents and per period count.
    Budget,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Scan => Command::Scan,
            Sub::Reconstruct => Command::Reconstruct,
            Sub::Moments => Command::Moments,
            Sub::Cat => Command::Cat,
            Sub::OracleCheck => Command::OracleCheck,
            Sub::Budget => Command::Budget,
        }
    }
}

fn exit(code: i32) -> ExitCode {
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => exit(EXIT_CONFIG),
            };
        }
    };

    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be >= 1");
            return exit(EXIT_CONFIG);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start thread pool: {e}");
            return exit(EXIT_CONFIG);
        }
    }

    let text = match &cli.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: reading {}: {e}", path.display());
                return exit(EXIT_IO);
            }
        },
        None => String::new(),
    };
    let mut overrides = cli.set.clone();
    overrides.push(format!("command = {}", Command::from(cli.command)));
    let cfg = match parse_config_with(&text, &overrides) {
        Ok(c) => c,
        Err(errors) => {
            eprintln!("error: invalid configuration:\n{}", format_config_errors(&errors));
            return exit(EXIT_CONFIG);
        }
    };

    match execute(&cfg, &cli.output) {
        Ok(summary) => {
            for line in &summary.report {
                println!("{line}");
            }
            for f in &summary.failures {
                eprintln!("failed: {f}");
            }
            if !summary.failures.is_empty() {
                eprintln!("{} point(s) failed; see {}", summary.failures.len(), cli.output.join("manifest.txt").display());
            }
            exit(summary.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit(e.exit_code())
        }
    }
}
