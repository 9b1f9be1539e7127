//! `mogi`: run experiments over the benchmark corpus, analyze the
//! resulting run records, apply patches and validate benchmarks.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation or drift error,
//! 3 patched program fails to type-check.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mogi::corpus::Corpus;
use mogi::search::Algorithm;

use commands::CliError;
use config::SeedRange;

#[derive(Debug, Parser)]
#[command(
    name = "mogi",
    version,
    about = "Multi-objective genetic improvement experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run searches and write one record per benchmark, algorithm and seed.
    Run {
        /// Experiment config (JSON).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory; defaults to the config's `out`, then `runs`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Inclusive seed range, e.g. `0..19`.
        #[arg(long)]
        seed_range: Option<SeedRange>,
        /// Restrict to these benchmarks (repeatable).
        #[arg(long = "benchmark")]
        benchmarks: Vec<String>,
        /// Restrict to these algorithms (repeatable).
        #[arg(long = "algorithm")]
        algorithms: Vec<Algorithm>,
        /// Corpus root (default: the shipped benchmarks).
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Summarize a directory of run records into JSON and CSV tables.
    Analyze {
        dir: PathBuf,
        /// Where to write the report (default: the run directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a program with a patch applied.
    Apply { program: PathBuf, patch: PathBuf },
    /// Re-measure benchmarks and check their manifests.
    Validate {
        /// Benchmarks to check (default: all).
        names: Vec<String>,
        /// Rewrite manifests with the measured values instead of checking.
        #[arg(long)]
        bless: bool,
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
}

fn corpus(root: Option<PathBuf>) -> Corpus {
    root.map(Corpus::new).unwrap_or_else(Corpus::shipped)
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run {
            config,
            out,
            jobs,
            seed_range,
            benchmarks,
            algorithms,
            corpus: root,
        } => {
            let mut cfg = commands::load_config(config.as_deref())?;
            if let Some(r) = seed_range {
                cfg.seeds = r;
            }
            if !benchmarks.is_empty() {
                cfg.benchmarks = benchmarks;
            }
            if !algorithms.is_empty() {
                cfg.algorithms = algorithms;
            }
            let out = out
                .or_else(|| cfg.out.clone().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("runs"));
            let n = commands::run(&cfg, &corpus(root), &out, jobs)?;
            println!("wrote {n} records to {}", out.display());
        }
        Command::Analyze { dir, out } => {
            let out = out.unwrap_or_else(|| dir.clone());
            for p in commands::analyze_dir(&dir, &out)? {
                println!("{}", p.display());
            }
        }
        Command::Apply { program, patch } => print!("{}", commands::apply_patch(&program, &patch)?),
        Command::Validate {
            names,
            bless,
            corpus: root,
        } => {
            commands::validate(&corpus(root), &names, bless)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
