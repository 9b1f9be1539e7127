//! Deterministic test harness and fitness measurement.
//!
//! Every `test_` function runs in declaration order against freshly
//! initialized component fields. The suite's fitness is the total step count,
//! the largest live-byte peak seen in any test, and the bytes moved by
//! `fetch` (URL plus response) summed over the suite.

mod fixtures;
mod machine;
mod value;

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

pub use fixtures::{Fixtures, DEFAULT_ALLOC_COST, DEFAULT_BUILTIN_COST, DEFAULT_FETCH_COST};
pub use machine::{Fault, Machine, MAX_ALLOC_LEN, MAX_CALL_DEPTH};
pub use value::Value;

use crate::minilang::{NodeId, Program};

/// Steps charged for invoking each test function.
pub const HARNESS_STEPS_PER_TEST: u64 = 1;

/// Multiple of the original program's suite steps used as the per-test step
/// budget when evaluating variants.
pub const DEFAULT_BUDGET_FACTOR: u64 = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", content = "detail", rename_all = "snake_case")]
pub enum TestOutcome {
    Pass,
    AssertFail,
    RuntimeError(String),
    StepBudgetExceeded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestResult {
    pub name: String,
    pub outcome: TestOutcome,
    pub steps: u64,
    pub peak_bytes: u64,
    pub net_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestReport {
    pub tests: Vec<TestResult>,
    pub passed: bool,
}

impl TestReport {
    pub fn total_steps(&self) -> u64 {
        self.tests.iter().map(|t| t.steps).sum()
    }

    pub fn peak_bytes(&self) -> u64 {
        self.tests.iter().map(|t| t.peak_bytes).max().unwrap_or(0)
    }

    pub fn net_bytes(&self) -> u64 {
        self.tests.iter().map(|t| t.net_bytes).sum()
    }

    /// Suite fitness; only meaningful when every test passed.
    pub fn fitness(&self) -> FitnessVector {
        FitnessVector {
            steps: self.total_steps() as f64,
            peak_bytes: self.peak_bytes() as f64,
            net_bytes: self.net_bytes() as f64,
            valid: self.passed,
        }
    }
}

/// The three minimized objectives plus the validity flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessVector {
    pub steps: f64,
    pub peak_bytes: f64,
    pub net_bytes: f64,
    pub valid: bool,
}

impl FitnessVector {
    pub fn new(steps: f64, peak_bytes: f64, net_bytes: f64) -> Self {
        FitnessVector {
            steps,
            peak_bytes,
            net_bytes,
            valid: true,
        }
    }

    pub fn invalid() -> Self {
        FitnessVector {
            steps: 0.0,
            peak_bytes: 0.0,
            net_bytes: 0.0,
            valid: false,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.steps, self.peak_bytes, self.net_bytes]
    }

    /// Componentwise `self <= other` over the three objectives.
    pub fn weakly_dominates(&self, other: &FitnessVector) -> bool {
        self.valid
            && self
                .as_array()
                .iter()
                .zip(other.as_array())
                .all(|(a, b)| *a <= b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    #[default]
    None,
    /// Each objective of each sample is scaled by an independent
    /// log-normal factor `exp(sigma * N(0, 1))`.
    Multiplicative { sigma: f64 },
}

/// Runs every test function in a fresh interpreter state.
pub fn run_tests(program: &Program, fixtures: &Fixtures, step_budget: u64) -> TestReport {
    run_suite(program, fixtures, step_budget, None)
}

/// Like [`run_tests`], also recording which statements executed.
pub fn run_tests_with_coverage(
    program: &Program,
    fixtures: &Fixtures,
    step_budget: u64,
) -> (TestReport, BTreeSet<NodeId>) {
    let mut covered = BTreeSet::new();
    let report = run_suite(program, fixtures, step_budget, Some(&mut covered));
    (report, covered)
}

fn run_suite(
    program: &Program,
    fixtures: &Fixtures,
    step_budget: u64,
    mut coverage: Option<&mut BTreeSet<NodeId>>,
) -> TestReport {
    let mut tests = Vec::new();
    for func in program.functions.iter().filter(|f| f.is_test()) {
        let mut machine = Machine::new(program, fixtures, step_budget);
        if let Some(cov) = coverage.as_deref_mut() {
            machine = machine.with_coverage(cov);
        }
        let result = machine
            .init_fields()
            .and_then(|_| {
                for _ in 0..HARNESS_STEPS_PER_TEST {
                    if machine.steps >= step_budget {
                        return Err(Fault::StepBudgetExceeded);
                    }
                    machine.steps += 1;
                }
                Ok(())
            })
            .and_then(|_| machine.call_entry(&func.name));
        let outcome = match result {
            Ok(()) => TestOutcome::Pass,
            Err(Fault::AssertFailed) => TestOutcome::AssertFail,
            Err(Fault::Runtime(msg)) => TestOutcome::RuntimeError(msg),
            Err(Fault::StepBudgetExceeded) => TestOutcome::StepBudgetExceeded,
        };
        tests.push(TestResult {
            name: func.name.clone(),
            outcome,
            steps: machine.steps,
            peak_bytes: machine.peak,
            net_bytes: machine.net,
        });
    }
    let passed = tests.iter().all(|t| t.outcome == TestOutcome::Pass);
    TestReport { tests, passed }
}

/// Measures the suite `repeats` times.
///
/// The interpreter is deterministic, so the suite is executed once and the
/// noise model (if any) is applied per repeat. The caller is expected to have
/// checked that the tests pass; a failing suite yields invalid vectors.
pub fn measure(
    program: &Program,
    fixtures: &Fixtures,
    step_budget: u64,
    repeats: usize,
    noise: NoiseModel,
    seed: u64,
) -> Vec<FitnessVector> {
    let report = run_tests(program, fixtures, step_budget);
    samples_from_report(&report, repeats, noise, seed)
}

pub fn samples_from_report(
    report: &TestReport,
    repeats: usize,
    noise: NoiseModel,
    seed: u64,
) -> Vec<FitnessVector> {
    if !report.passed {
        return vec![FitnessVector::invalid(); repeats];
    }
    let base = report.fitness();
    match noise {
        NoiseModel::None => vec![base; repeats],
        NoiseModel::Multiplicative { sigma } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dist = LogNormal::new(0.0, sigma.max(0.0)).expect("non-negative sigma");
            (0..repeats)
                .map(|_| {
                    let mut scale = |v: f64| (v * dist.sample(&mut rng)).max(0.0);
                    FitnessVector {
                        steps: scale(base.steps),
                        peak_bytes: scale(base.peak_bytes),
                        net_bytes: scale(base.net_bytes),
                        valid: true,
                    }
                })
                .collect()
        }
    }
}
