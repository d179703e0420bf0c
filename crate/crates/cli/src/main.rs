use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use qpspectra::config::{parse_config, ConfigError};
use qpspectra::oracle::{run_oracle, OracleName};
use qpspectra::report::{create_run_dir, write_run};
use qpspectra::run::run_experiment;
use qpspectra::{resolve_workers, WORKERS_ENV};

#[derive(Parser)]
#[command(
    name = "qpspectra",
    version,
    about = "Spectral experiments for quasi-periodic operators and their tree extensions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write a timestamped run directory.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        /// Worker threads; QPSPECTRA_WORKERS takes precedence.
        #[arg(long)]
        workers: Option<usize>,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and validate a config, listing every problem.
    Validate { config: PathBuf },
    /// Run a built-in brute-force cross-check.
    Oracle {
        #[arg(value_enum)]
        name: OracleName,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn load(path: &PathBuf) -> anyhow::Result<Result<qpspectra::config::ExperimentConfig, ConfigError>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_config(&text))
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match load(&config)? {
            Ok(cfg) => {
                println!("{}: valid {} experiment", config.display(), cfg.kind);
                Ok(ExitCode::SUCCESS)
            }
            Err(e) => {
                eprintln!("{}: {e}", config.display());
                Ok(ExitCode::from(2))
            }
        },
        Command::Run { config, out, workers, seed } => {
            let mut cfg = match load(&config)? {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("{}: {e}", config.display());
                    return Ok(ExitCode::from(2));
                }
            };
            if let Some(s) = seed {
                cfg = cfg.with_seed(s);
            }
            let env = std::env::var(WORKERS_ENV).ok();
            let n = resolve_workers(workers, env.as_deref()).map_err(anyhow::Error::msg)?;
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build()?;
            let report = pool.install(|| run_experiment(&cfg));
            let dir = create_run_dir(&out, cfg.kind.name())?;
            write_run(&report, &dir).with_context(|| format!("writing {}", dir.display()))?;
            println!("{}", dir.display());
            println!("{}", serde_json::to_string(&report.summary)?);
            for e in &report.errors {
                eprintln!("row {} (at {}): {}", e.row, e.at, e.message);
            }
            Ok(if report.failed() { ExitCode::FAILURE } else { ExitCode::SUCCESS })
        }
        Command::Oracle { name, seed } => {
            let out = run_oracle(name, seed);
            print!("{}", out.text);
            println!("# {}", if out.passed { "agree" } else { "DISAGREE" });
            Ok(if out.passed { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}
