//! The four subcommands.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use mogi::corpus::{Corpus, CorpusError};
use mogi::minilang::{parse, pretty_print, LangError};
use mogi::patch::{apply, PatchParseError};
use mogi::search::{run_search, Algorithm, Problem, RunRecord, SearchError};
use mogi::stats::{analyze, fronts_csv, ReportError};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Config {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{benchmark}/{algorithm}/{seed}: {source}")]
    Search {
        benchmark: String,
        algorithm: &'static str,
        seed: u64,
        source: SearchError,
    },
    #[error("{path}: {source}")]
    Program { path: PathBuf, source: LangError },
    #[error("{path}: {source}")]
    Patch {
        path: PathBuf,
        source: PatchParseError,
    },
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{0} benchmark(s) failed validation")]
    Invalid(usize),
    #[error("patched program does not type-check")]
    ApplyFailed,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_)
            | CliError::Io { .. }
            | CliError::Config { .. }
            | CliError::Program { .. }
            | CliError::Patch { .. }
            | CliError::Report(_) => 1,
            CliError::Corpus(_) | CliError::Search { .. } | CliError::Invalid(_) => 2,
            CliError::ApplyFailed => 3,
        }
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(io(path))
}

/// Writes through a temporary sibling so readers never see half a file.
fn write_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text).map_err(io(&tmp))?;
    fs::rename(&tmp, path).map_err(io(path))
}

pub fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, CliError> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(p) => serde_json::from_str(&read(p)?).map_err(|source| CliError::Config {
            path: p.to_path_buf(),
            source,
        }),
    }
}

pub fn record_file_name(benchmark: &str, algorithm: Algorithm, seed: u64) -> String {
    format!("{benchmark}_{}_{seed}.json", algorithm.name())
}

/// Runs every (benchmark, algorithm, seed) triple. All benchmarks are
/// validated before the first run starts.
pub fn run(
    config: &ExperimentConfig,
    corpus: &Corpus,
    out: &Path,
    jobs: Option<usize>,
) -> Result<usize, CliError> {
    if config.algorithms.is_empty() {
        return Err(CliError::Usage("no algorithms configured".into()));
    }
    let names = if config.benchmarks.is_empty() {
        corpus.names()?
    } else {
        config.benchmarks.clone()
    };
    let problems: Vec<(String, Problem)> = names
        .iter()
        .map(|n| Ok((n.clone(), corpus.load(n)?.problem()?)))
        .collect::<Result<_, CliError>>()?;
    for &a in &config.algorithms {
        config
            .run_config(a, 0)
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    fs::create_dir_all(out).map_err(io(out))?;

    let mut triples = Vec::new();
    for (name, problem) in &problems {
        for &algorithm in &config.algorithms {
            for seed in config.seeds.seeds() {
                triples.push((name.as_str(), problem, algorithm, seed));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    pool.install(|| {
        triples
            .par_iter()
            .try_for_each(|&(name, problem, algorithm, seed)| {
                let record =
                    run_search(&config.run_config(algorithm, seed), problem).map_err(|source| {
                        CliError::Search {
                            benchmark: name.to_string(),
                            algorithm: algorithm.name(),
                            seed,
                            source,
                        }
                    })?;
                write_atomic(
                    &out.join(record_file_name(name, algorithm, seed)),
                    &(record.to_json() + "\n"),
                )
            })
    })?;
    Ok(triples.len())
}

/// Loads every run record in `dir`; other JSON files are skipped.
pub fn read_records(dir: &Path) -> Result<Vec<RunRecord>, CliError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut records = Vec::new();
    for p in paths {
        if let Ok(r) = RunRecord::from_json(&read(&p)?) {
            records.push(r);
        }
    }
    Ok(records)
}

pub fn analyze_dir(dir: &Path, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let records = read_records(dir)?;
    if records.is_empty() {
        return Err(CliError::Usage(format!(
            "{}: no run records found",
            dir.display()
        )));
    }
    let report = analyze(&records)?;
    let fronts_dir = out.join("fronts");
    fs::create_dir_all(&fronts_dir).map_err(io(&fronts_dir))?;
    let mut written = Vec::new();
    let mut emit = |path: PathBuf, text: String| -> Result<(), CliError> {
        write_atomic(&path, &text)?;
        written.push(path);
        Ok(())
    };
    emit(out.join("report.json"), report.to_json() + "\n")?;
    emit(out.join("hv.csv"), report.hv_csv())?;
    emit(out.join("effects.csv"), report.effects_csv())?;
    emit(out.join("improvements.csv"), report.improvements_csv())?;
    emit(out.join("cost.csv"), report.cost_csv())?;
    let mut by_benchmark: BTreeMap<&str, Vec<RunRecord>> = BTreeMap::new();
    for r in &records {
        by_benchmark
            .entry(&r.benchmark)
            .or_default()
            .push(r.clone());
    }
    for (name, rs) in by_benchmark {
        emit(fronts_dir.join(format!("{name}.csv")), fronts_csv(&rs))?;
    }
    Ok(written)
}

/// Pretty-prints the patched program, or describes why it is invalid.
pub fn apply_patch(program: &Path, patch: &Path) -> Result<String, CliError> {
    let source = read(program)?;
    let original = parse(&source).map_err(|source| CliError::Program {
        path: program.to_path_buf(),
        source,
    })?;
    let patch_text = read(patch)?;
    let patch = mogi::patch::Patch::parse(&patch_text).map_err(|source| CliError::Patch {
        path: patch.to_path_buf(),
        source,
    })?;
    let report = apply(&patch, &original);
    for i in &report.noop_edits {
        eprintln!(
            "warning: edit {} ({}) had no effect",
            i + 1,
            patch_text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .nth(*i)
                .unwrap_or("?")
                .trim()
        );
    }
    match report.result {
        Ok(p) => Ok(pretty_print(&p)),
        Err(failure) => {
            eprintln!("stage: {:?}", report.stage);
            eprintln!("error: {}", failure.error);
            eprintln!("--- patched program ---");
            eprint!("{}", pretty_print(&failure.program));
            Err(CliError::ApplyFailed)
        }
    }
}

/// Validates (or re-blesses) benchmarks and returns one line per benchmark.
pub fn validate(corpus: &Corpus, names: &[String], bless: bool) -> Result<Vec<String>, CliError> {
    let names = if names.is_empty() {
        corpus.names()?
    } else {
        names.to_vec()
    };
    let mut lines = Vec::new();
    let mut failed = 0;
    for name in &names {
        let outcome = if bless {
            corpus
                .load_unchecked(name)
                .and_then(|b| b.bless())
                .and_then(|_| corpus.load(name))
        } else {
            corpus.load(name)
        };
        match outcome {
            Ok(b) => {
                let f = b.manifest.baseline;
                lines.push(format!(
                    "{name}: ok steps={} peak_bytes={} net_bytes={}",
                    f.steps, f.peak_bytes, f.net_bytes
                ));
            }
            Err(e) => {
                failed += 1;
                lines.push(format!("{name}: FAILED {e}"));
            }
        }
    }
    for l in &lines {
        println!("{l}");
    }
    if failed > 0 {
        return Err(CliError::Invalid(failed));
    }
    Ok(lines)
}
