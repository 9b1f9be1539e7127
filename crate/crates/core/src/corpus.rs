//! The benchmark corpus: programs with seeded performance defects, their
//! fixtures, and hand-derived oracle patches with recorded fitness.
//!
//! Layout: `<root>/index.json` lists benchmark names; each benchmark lives in
//! `<root>/<name>/` with `program.mini`, `fixtures.json`, `manifest.json` and
//! `oracle/*.patch`.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interp::{run_tests_with_coverage, FitnessVector, Fixtures, TestOutcome};
use crate::minilang::{parse, walk_block, LangError, NodeId, Program};
use crate::operators::{class_cache_targets, method_cache_targets, CacheTarget};
use crate::patch::{apply, stmt_function, Edit, Patch, PatchParseError};
use crate::search::{OracleFitness, Problem, SearchError};

pub const PROGRAM_FILE: &str = "program.mini";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("unknown benchmark `{0}`")]
    UnknownBenchmark(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{benchmark}: {source}")]
    Lang {
        benchmark: String,
        source: LangError,
    },
    #[error("{benchmark}: oracle `{oracle}`: {source}")]
    PatchParse {
        benchmark: String,
        oracle: String,
        source: PatchParseError,
    },
    #[error("{benchmark}: {source}")]
    Search {
        benchmark: String,
        source: SearchError,
    },
    #[error("{benchmark}: manifest drift in `{field}`: recorded {recorded}, measured {measured}")]
    Drift {
        benchmark: String,
        field: String,
        recorded: String,
        measured: String,
    },
    #[error("{benchmark}: oracle `{oracle}` {reason}")]
    OracleInvalid {
        benchmark: String,
        oracle: String,
        reason: String,
    },
    #[error("{benchmark}: tests never reach statement {stmt} of `{function}`")]
    Coverage {
        benchmark: String,
        function: String,
        stmt: NodeId,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleEntry {
    pub name: String,
    /// Path relative to the benchmark directory.
    pub patch: String,
    pub fitness: FitnessVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub name: String,
    pub defect: String,
    pub baseline: FitnessVector,
    pub oracles: Vec<OracleEntry>,
    pub method_cache_targets: Vec<CacheTarget>,
    pub class_cache_targets: Vec<CacheTarget>,
}

#[derive(Debug, Clone)]
pub struct Oracle {
    pub name: String,
    pub patch: Patch,
    pub fitness: FitnessVector,
}

#[derive(Debug, Clone)]
pub struct Benchmark {
    pub name: String,
    pub dir: PathBuf,
    pub source: String,
    pub program: Program,
    pub fixtures: Fixtures,
    pub manifest: Manifest,
    pub oracles: Vec<Oracle>,
}

/// The shipped corpus, found through `MOGI_CORPUS` or next to the workspace.
pub fn default_root() -> PathBuf {
    match std::env::var_os("MOGI_CORPUS") {
        Some(p) => PathBuf::from(p),
        None => Path::new(env!("CARGO_MANIFEST_DIR")).join("../../benchmarks"),
    }
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub root: PathBuf,
}

fn read(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CorpusError> {
    serde_json::from_str(&read(path)?).map_err(|source| CorpusError::Json {
        path: path.to_path_buf(),
        source,
    })
}

impl Corpus {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Corpus { root: root.into() }
    }

    pub fn shipped() -> Self {
        Corpus::new(default_root())
    }

    pub fn names(&self) -> Result<Vec<String>, CorpusError> {
        read_json(&self.root.join("index.json"))
    }

    /// Loads and validates one benchmark.
    pub fn load(&self, name: &str) -> Result<Benchmark, CorpusError> {
        let b = self.load_unchecked(name)?;
        b.validate()?;
        Ok(b)
    }

    /// Loads without re-measuring anything.
    pub fn load_unchecked(&self, name: &str) -> Result<Benchmark, CorpusError> {
        if !self.names()?.iter().any(|n| n == name) {
            return Err(CorpusError::UnknownBenchmark(name.to_string()));
        }
        let dir = self.root.join(name);
        let source = read(&dir.join(PROGRAM_FILE))?;
        let program = parse(&source).map_err(|source| CorpusError::Lang {
            benchmark: name.to_string(),
            source,
        })?;
        let fixtures_path = dir.join("fixtures.json");
        let fixtures = if fixtures_path.exists() {
            read_json(&fixtures_path)?
        } else {
            Fixtures::default()
        };
        let manifest: Manifest = read_json(&dir.join("manifest.json"))?;
        let oracles = manifest
            .oracles
            .iter()
            .map(|o| {
                let patch = Patch::parse(&read(&dir.join(&o.patch))?).map_err(|source| {
                    CorpusError::PatchParse {
                        benchmark: name.to_string(),
                        oracle: o.name.clone(),
                        source,
                    }
                })?;
                Ok(Oracle {
                    name: o.name.clone(),
                    patch,
                    fitness: o.fitness,
                })
            })
            .collect::<Result<Vec<_>, CorpusError>>()?;
        Ok(Benchmark {
            name: name.to_string(),
            dir,
            source,
            program,
            fixtures,
            manifest,
            oracles,
        })
    }
}

impl Benchmark {
    pub fn problem(&self) -> Result<Problem, CorpusError> {
        let oracles = self
            .oracles
            .iter()
            .map(|o| OracleFitness {
                name: o.name.clone(),
                fitness: o.fitness,
            })
            .collect();
        Problem::new(&self.name, self.program.clone(), self.fixtures.clone())
            .map(|p| p.with_oracles(oracles))
            .map_err(|source| CorpusError::Search {
                benchmark: self.name.clone(),
                source,
            })
    }

    fn drift(
        &self,
        field: impl Into<String>,
        recorded: impl ToString,
        measured: impl ToString,
    ) -> CorpusError {
        CorpusError::Drift {
            benchmark: self.name.clone(),
            field: field.into(),
            recorded: recorded.to_string(),
            measured: measured.to_string(),
        }
    }

    fn check_fitness(
        &self,
        prefix: &str,
        recorded: &FitnessVector,
        measured: &FitnessVector,
    ) -> Result<(), CorpusError> {
        let pairs = [
            ("steps", recorded.steps, measured.steps),
            ("peak_bytes", recorded.peak_bytes, measured.peak_bytes),
            ("net_bytes", recorded.net_bytes, measured.net_bytes),
        ];
        for (field, r, m) in pairs {
            if r != m {
                return Err(self.drift(format!("{prefix}.{field}"), r, m));
            }
        }
        if recorded.valid != measured.valid {
            return Err(self.drift(format!("{prefix}.valid"), recorded.valid, measured.valid));
        }
        Ok(())
    }

    /// Measured facts the manifest records, recomputed from the sources.
    pub fn measured_manifest(&self) -> Result<Manifest, CorpusError> {
        let problem = self.problem()?;
        let mut oracles = Vec::new();
        for (entry, oracle) in self.manifest.oracles.iter().zip(&self.oracles) {
            let report = apply(&oracle.patch, &self.program);
            let invalid = |reason: String| CorpusError::OracleInvalid {
                benchmark: self.name.clone(),
                oracle: oracle.name.clone(),
                reason,
            };
            if !report.noop_edits.is_empty() {
                return Err(invalid(format!(
                    "has edits with no effect: {:?}",
                    report.noop_edits
                )));
            }
            let patched = match &report.result {
                Ok(p) => p,
                Err(f) => return Err(invalid(format!("does not type-check: {}", f.error))),
            };
            let tests = crate::interp::run_tests(patched, &self.fixtures, problem.step_budget);
            if let Some(t) = tests.tests.iter().find(|t| t.outcome != TestOutcome::Pass) {
                return Err(invalid(format!("fails {}: {:?}", t.name, t.outcome)));
            }
            oracles.push(OracleEntry {
                fitness: tests.fitness(),
                ..entry.clone()
            });
        }
        Ok(Manifest {
            name: self.name.clone(),
            defect: self.manifest.defect.clone(),
            baseline: problem.baseline.fitness(),
            oracles,
            method_cache_targets: method_cache_targets(&self.program),
            class_cache_targets: class_cache_targets(&self.program),
        })
    }

    /// Re-checks every manifest fact plus the coverage rule: the tests
    /// reach every statement of each function an oracle edits.
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.manifest.name != self.name {
            return Err(self.drift("name", &self.manifest.name, &self.name));
        }
        let measured = self.measured_manifest()?;
        self.check_fitness("baseline", &self.manifest.baseline, &measured.baseline)?;
        for (r, m) in self.manifest.oracles.iter().zip(&measured.oracles) {
            self.check_fitness(
                &format!("oracles[{}].fitness", r.name),
                &r.fitness,
                &m.fitness,
            )?;
        }
        if self.manifest.method_cache_targets != measured.method_cache_targets {
            return Err(self.drift(
                "method_cache_targets",
                targets_text(&self.manifest.method_cache_targets),
                targets_text(&measured.method_cache_targets),
            ));
        }
        if self.manifest.class_cache_targets != measured.class_cache_targets {
            return Err(self.drift(
                "class_cache_targets",
                targets_text(&self.manifest.class_cache_targets),
                targets_text(&measured.class_cache_targets),
            ));
        }
        self.check_coverage()
    }

    fn check_coverage(&self) -> Result<(), CorpusError> {
        let problem = self.problem()?;
        let (_, covered) =
            run_tests_with_coverage(&self.program, &self.fixtures, problem.step_budget);
        let mut functions = BTreeSet::new();
        for oracle in &self.oracles {
            for edit in &oracle.patch.edits {
                for id in edit_nodes(edit) {
                    if let Some(f) = stmt_function(&self.program, id) {
                        functions.insert(f.name.clone());
                    } else if let Some(t) = self
                        .manifest
                        .method_cache_targets
                        .iter()
                        .chain(&self.manifest.class_cache_targets)
                        .find(|t| t.occurrence_ids.contains(&id))
                    {
                        functions.insert(t.enclosing_function.clone());
                    }
                }
            }
        }
        for name in functions {
            let func = self
                .program
                .function(&name)
                .expect("function named by the program");
            let mut missing = None;
            walk_block(&func.body, &mut |s| {
                if let Some(id) = s.id {
                    if missing.is_none() && !covered.contains(&id) {
                        missing = Some(id);
                    }
                }
            });
            if let Some(stmt) = missing {
                return Err(CorpusError::Coverage {
                    benchmark: self.name.clone(),
                    function: name,
                    stmt,
                });
            }
        }
        Ok(())
    }

    /// Rewrites `manifest.json` with freshly measured values.
    pub fn bless(&self) -> Result<Manifest, CorpusError> {
        let measured = self.measured_manifest()?;
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&measured).expect("manifest serializes") + "\n";
        fs::write(&path, text).map_err(|source| CorpusError::Io { path, source })?;
        Ok(measured)
    }
}

fn edit_nodes(edit: &Edit) -> Vec<NodeId> {
    match *edit {
        Edit::Delete { target } => vec![target],
        Edit::Copy {
            source, dest_block, ..
        } => vec![source, dest_block],
        Edit::Replace { source, target } => vec![source, target],
        Edit::CacheMethod { call } | Edit::CacheClass { call } => vec![call],
    }
}

fn targets_text(ts: &[CacheTarget]) -> String {
    serde_json::to_string(ts).expect("targets serialize")
}
