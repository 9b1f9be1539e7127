use std::collections::HashMap;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::{OracleFitness, SearchConfig, SearchError};
use crate::interp::{
    run_tests, samples_from_report, FitnessVector, Fixtures, TestReport, DEFAULT_BUDGET_FACTOR,
};
use crate::minilang::Program;
use crate::patch::{apply, Patch};
use crate::stats::median;

/// Smallest per-test step budget, so tiny programs still have headroom.
const MIN_STEP_BUDGET: u64 = 1_000;

/// A program under improvement with its fixtures and measured baseline.
#[derive(Debug, Clone)]
pub struct Problem {
    pub name: String,
    pub program: Program,
    pub fixtures: Fixtures,
    /// Per-test step limit applied to every candidate.
    pub step_budget: u64,
    pub baseline: TestReport,
    pub oracles: Vec<OracleFitness>,
}

impl Problem {
    pub fn new(
        name: impl Into<String>,
        program: Program,
        fixtures: Fixtures,
    ) -> Result<Self, SearchError> {
        let probe = run_tests(&program, &fixtures, u64::MAX / 4);
        if !probe.passed {
            let failing: Vec<String> = probe
                .tests
                .iter()
                .filter(|t| t.outcome != crate::interp::TestOutcome::Pass)
                .map(|t| t.name.clone())
                .collect();
            return Err(SearchError::BaselineFails(failing.join(", ")));
        }
        let worst = probe.tests.iter().map(|t| t.steps).max().unwrap_or(0);
        let step_budget = (worst * DEFAULT_BUDGET_FACTOR).max(MIN_STEP_BUDGET);
        let baseline = run_tests(&program, &fixtures, step_budget);
        Ok(Problem {
            name: name.into(),
            program,
            fixtures,
            step_budget,
            baseline,
            oracles: Vec::new(),
        })
    }

    pub fn with_oracles(mut self, oracles: Vec<OracleFitness>) -> Self {
        self.oracles = oracles;
        self
    }

    pub fn baseline_samples(&self, config: &SearchConfig) -> Vec<FitnessVector> {
        samples_from_report(
            &self.baseline,
            config.repeats,
            config.noise,
            noise_seed(config.seed, &Patch::empty()),
        )
    }

    /// Applies and measures `patch` without any caching or budget.
    pub fn measure(&self, patch: &Patch, config: &SearchConfig) -> Vec<FitnessVector> {
        let report = apply(patch, &self.program);
        match report.program() {
            Some(program) => {
                let tests = run_tests(program, &self.fixtures, self.step_budget);
                samples_from_report(
                    &tests,
                    config.repeats,
                    config.noise,
                    noise_seed(config.seed, patch),
                )
            }
            None => vec![FitnessVector::invalid(); config.repeats],
        }
    }
}

/// Noise stream for one patch: stable across runs and worker counts.
fn noise_seed(seed: u64, patch: &Patch) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(patch.key().as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub patch: Patch,
    pub samples: Vec<FitnessVector>,
    /// Per-objective median of `samples`.
    pub summary: FitnessVector,
    pub valid: bool,
}

impl Individual {
    pub fn from_samples(patch: Patch, samples: Vec<FitnessVector>) -> Self {
        let valid = !samples.is_empty() && samples.iter().all(|s| s.valid);
        let summary = if valid {
            let col =
                |f: fn(&FitnessVector) -> f64| median(&samples.iter().map(f).collect::<Vec<_>>());
            FitnessVector::new(
                col(|s| s.steps),
                col(|s| s.peak_bytes),
                col(|s| s.net_bytes),
            )
        } else {
            FitnessVector::invalid()
        };
        Individual {
            patch,
            samples,
            summary,
            valid,
        }
    }
}

/// Measures patches with a fitness cache keyed by patch text. Only
/// patches not seen before consume budget.
pub struct Evaluator<'p> {
    problem: &'p Problem,
    config: SearchConfig,
    cache: HashMap<Patch, Vec<FitnessVector>>,
    used: usize,
    any_valid: bool,
}

impl<'p> Evaluator<'p> {
    pub fn new(problem: &'p Problem, config: &SearchConfig) -> Self {
        Evaluator {
            problem,
            config: config.clone(),
            cache: HashMap::new(),
            used: 0,
            any_valid: false,
        }
    }

    pub fn used(&self) -> usize {
        self.used
    }

    pub fn remaining(&self) -> usize {
        self.config.evaluation_budget.saturating_sub(self.used)
    }

    pub fn exhausted(&self) -> bool {
        self.remaining() == 0
    }

    pub fn any_valid(&self) -> bool {
        self.any_valid
    }

    pub fn is_cached(&self, patch: &Patch) -> bool {
        self.cache.contains_key(patch)
    }

    /// Evaluates `patches` in order. When the budget runs out the batch is
    /// cut at the first patch that would need a fresh evaluation; the
    /// returned vector is that prefix. New patches are measured in
    /// parallel, results land in input order.
    pub fn evaluate(&mut self, patches: Vec<Patch>) -> Vec<Individual> {
        let mut fresh: Vec<Patch> = Vec::new();
        let mut keep = patches.len();
        for (i, p) in patches.iter().enumerate() {
            if self.cache.contains_key(p) || fresh.contains(p) {
                continue;
            }
            if fresh.len() == self.remaining() {
                keep = i;
                break;
            }
            fresh.push(p.clone());
        }
        let problem = self.problem;
        let config = &self.config;
        let measured: Vec<Vec<FitnessVector>> = fresh
            .par_iter()
            .map(|p| problem.measure(p, config))
            .collect();
        self.used += fresh.len();
        for (p, samples) in fresh.into_iter().zip(measured) {
            self.any_valid |= samples.iter().all(|s| s.valid);
            self.cache.insert(p, samples);
        }
        patches
            .into_iter()
            .take(keep)
            .map(|p| {
                let samples = self.cache[&p].clone();
                Individual::from_samples(p, samples)
            })
            .collect()
    }

    pub fn evaluate_one(&mut self, patch: Patch) -> Option<Individual> {
        self.evaluate(vec![patch]).pop()
    }
}
