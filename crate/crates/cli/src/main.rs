use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use heatlab_cli::error::{CliError, EXIT_IO};
use heatlab_cli::run::{default_out_dir, write_load_failure};
use heatlab_cli::{run, ExperimentConfig};

/// Runs one heatlab experiment described by a TOML config.
#[derive(Debug, Parser)]
#[command(name = "heatlab", version)]
struct Args {
    /// Experiment config file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 picks the number of cores.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory; defaults to the config `out` or `heatlab-<command>`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(args: &Args) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(&args.config)?;
    let mut cfg = ExperimentConfig::from_toml(&text)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    Ok(cfg)
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match load(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.reason());
            if let Some(out) = &args.out {
                if let Err(w) = write_load_failure(out, &e) {
                    eprintln!("error[{}]: cannot write report: {w}", w.reason());
                    return code(EXIT_IO);
                }
            }
            return code(e.exit_code());
        }
    };
    let out = args.out.clone().unwrap_or_else(|| default_out_dir(&cfg));
    let outcome = run(&cfg, &out);
    match outcome.report["reason"].as_str() {
        Some(reason) => eprintln!("error[{reason}]: {}", outcome.report["message"].as_str().unwrap_or("")),
        None => println!("{}", out.join(heatlab_cli::run::REPORT_FILE).display()),
    }
    code(outcome.exit_code)
}
