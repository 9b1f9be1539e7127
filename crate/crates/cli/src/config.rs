//! Experiment configuration: which benchmarks, algorithms and seeds to
//! run, plus overrides for the search settings.

use std::ops::RangeInclusive;
use std::str::FromStr;

use mogi::search::{Algorithm, Objective, SearchConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad seed range `{0}`: expected <a>..<b> with a <= b")]
pub struct SeedRangeError(pub String);

/// Inclusive seed range written `a..b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct SeedRange {
    pub first: u64,
    pub last: u64,
}

impl SeedRange {
    pub fn seeds(self) -> RangeInclusive<u64> {
        self.first..=self.last
    }
}

impl Default for SeedRange {
    fn default() -> Self {
        SeedRange { first: 0, last: 19 }
    }
}

impl FromStr for SeedRange {
    type Err = SeedRangeError;

    fn from_str(s: &str) -> Result<Self, SeedRangeError> {
        let bad = || SeedRangeError(s.to_string());
        let (a, b) = s.split_once("..").ok_or_else(bad)?;
        let first: u64 = a.trim().parse().map_err(|_| bad())?;
        let last: u64 = b.trim().parse().map_err(|_| bad())?;
        if first > last {
            return Err(bad());
        }
        Ok(SeedRange { first, last })
    }
}

impl From<SeedRange> for String {
    fn from(r: SeedRange) -> String {
        format!("{}..{}", r.first, r.last)
    }
}

impl TryFrom<String> for SeedRange {
    type Error = SeedRangeError;

    fn try_from(s: String) -> Result<Self, SeedRangeError> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Empty means every benchmark in the corpus index.
    pub benchmarks: Vec<String>,
    pub algorithms: Vec<Algorithm>,
    pub seeds: SeedRange,
    /// Base settings; `algorithm` and `seed` are filled per run.
    pub search: SearchConfig,
    /// The objective hill climbing optimizes.
    pub hillclimb_objective: Objective,
    pub out: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            benchmarks: Vec::new(),
            algorithms: Algorithm::MULTI_OBJECTIVE.to_vec(),
            seeds: SeedRange::default(),
            search: SearchConfig::default(),
            hillclimb_objective: Objective::Steps,
            out: None,
        }
    }
}

impl ExperimentConfig {
    /// Search settings for one run.
    pub fn run_config(&self, algorithm: Algorithm, seed: u64) -> SearchConfig {
        let mut c = SearchConfig {
            algorithm,
            seed,
            ..self.search.clone()
        };
        if algorithm == Algorithm::Hillclimb {
            c.objectives = vec![self.hillclimb_objective];
        }
        c
    }
}
