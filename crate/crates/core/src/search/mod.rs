//! Evolutionary and local search over patches.

mod eval;
mod hill;
mod nsga2;
mod nsga3;
mod select;
mod spea2;

use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use eval::{Evaluator, Individual, Problem};
pub use nsga3::das_dennis;
pub use select::{objective_points, tournament};

use crate::interp::{FitnessVector, NoiseModel};
use crate::operators::EditSpace;
use crate::patch::Patch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Nsga2,
    Nsga3,
    Spea2,
    Hillclimb,
}

impl Algorithm {
    pub const MULTI_OBJECTIVE: [Algorithm; 3] =
        [Algorithm::Nsga2, Algorithm::Nsga3, Algorithm::Spea2];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Nsga2 => "nsga2",
            Algorithm::Nsga3 => "nsga3",
            Algorithm::Spea2 => "spea2",
            Algorithm::Hillclimb => "hillclimb",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Steps,
    Memory,
    Net,
}

impl Objective {
    pub const ALL: [Objective; 3] = [Objective::Steps, Objective::Memory, Objective::Net];

    pub fn of(self, f: &FitnessVector) -> f64 {
        match self {
            Objective::Steps => f.steps,
            Objective::Memory => f.peak_bytes,
            Objective::Net => f.net_bytes,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Objective::Steps => "steps",
            Objective::Memory => "memory",
            Objective::Net => "net",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {kind} `{given}`")]
pub struct UnknownName {
    pub kind: &'static str,
    pub given: String,
}

impl FromStr for Algorithm {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, UnknownName> {
        [
            Algorithm::Nsga2,
            Algorithm::Nsga3,
            Algorithm::Spea2,
            Algorithm::Hillclimb,
        ]
        .into_iter()
        .find(|a| a.name() == s)
        .ok_or_else(|| UnknownName {
            kind: "algorithm",
            given: s.to_string(),
        })
    }
}

impl FromStr for Objective {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, UnknownName> {
        Objective::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| UnknownName {
                kind: "objective",
                given: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub algorithm: Algorithm,
    pub population_size: usize,
    pub generations: usize,
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    pub evaluation_budget: usize,
    /// Fitness samples per evaluation.
    pub repeats: usize,
    pub seed: u64,
    pub objectives: Vec<Objective>,
    pub noise: NoiseModel,
    /// Consecutive rejections before hill climbing restarts.
    pub restart_after: usize,
    /// Off by default so records are byte-identical across reruns.
    pub record_wall_time: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            algorithm: Algorithm::Nsga2,
            population_size: 40,
            generations: 10,
            mutation_rate: 0.5,
            crossover_rate: 0.2,
            evaluation_budget: 400,
            repeats: 5,
            seed: 0,
            objectives: Objective::ALL.to_vec(),
            noise: NoiseModel::None,
            restart_after: 50,
            record_wall_time: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("original program fails its tests: {0}")]
    BaselineFails(String),
    #[error("invalid search configuration: {0}")]
    Config(String),
    #[error("program has no editable statement")]
    NothingToEdit,
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |m: &str| Err(SearchError::Config(m.to_string()));
        if self.objectives.is_empty() {
            return bad("at least one objective is required");
        }
        let mut objs = self.objectives.clone();
        objs.sort();
        objs.dedup();
        if objs.len() != self.objectives.len() {
            return bad("objectives must be distinct");
        }
        if self.algorithm == Algorithm::Hillclimb && self.objectives.len() != 1 {
            return bad("hillclimb takes exactly one objective");
        }
        if self.algorithm != Algorithm::Hillclimb && self.population_size < 2 {
            return bad("population_size must be at least 2");
        }
        if self.repeats == 0 {
            return bad("repeats must be positive");
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) || !(0.0..=1.0).contains(&self.crossover_rate)
        {
            return bad("rates must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Patch plus its measured fitness, as stored in records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub patch: Patch,
    pub summary: FitnessVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub generation: usize,
    pub evaluations_used: usize,
    pub population: Vec<Entry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub archive: Option<Vec<Entry>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontEntry {
    pub patch: Patch,
    pub samples: Vec<FitnessVector>,
    pub summary: FitnessVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleFitness {
    pub name: String,
    pub fitness: FitnessVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HillClimbTrace {
    /// Each accepted move, in order.
    pub accepted: Vec<Entry>,
    pub restarts: usize,
    pub proposals: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub benchmark: String,
    pub config: SearchConfig,
    pub baseline: Vec<FitnessVector>,
    pub oracles: Vec<OracleFitness>,
    pub generations: Vec<Snapshot>,
    pub evaluations_used: usize,
    pub wall_seconds: f64,
    /// Non-dominated valid individuals of the final population.
    pub front: Vec<FrontEntry>,
    /// No valid individual was ever found.
    pub no_valid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hill_climb: Option<HillClimbTrace>,
}

impl RunRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("records serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Some front member weakly dominates `target` on all three objectives.
    pub fn front_weakly_dominates(&self, target: &FitnessVector) -> bool {
        self.front
            .iter()
            .any(|e| e.summary.weakly_dominates(target))
    }
}

pub(crate) fn entries(pop: &[Individual]) -> Vec<Entry> {
    pop.iter()
        .map(|i| Entry {
            patch: i.patch.clone(),
            summary: i.summary,
        })
        .collect()
}

/// Non-dominated valid members (by the configured objectives), first
/// representative per distinct fitness.
pub(crate) fn final_front(pop: &[Individual], objectives: &[Objective]) -> Vec<FrontEntry> {
    let valid: Vec<&Individual> = pop.iter().filter(|i| i.valid).collect();
    let points: Vec<Vec<f64>> = valid
        .iter()
        .map(|i| objectives.iter().map(|o| o.of(&i.summary)).collect())
        .collect();
    let mut out: Vec<FrontEntry> = Vec::new();
    let mut seen: Vec<&Vec<f64>> = Vec::new();
    for (k, p) in points.iter().enumerate() {
        let beaten = points
            .iter()
            .any(|q| crate::pareto::dominates(q, p).unwrap_or(false));
        if beaten || seen.contains(&p) {
            continue;
        }
        seen.push(p);
        out.push(FrontEntry {
            patch: valid[k].patch.clone(),
            samples: valid[k].samples.clone(),
            summary: valid[k].summary,
        });
    }
    out
}

/// Runs the configured algorithm on `problem`.
pub fn run_search(config: &SearchConfig, problem: &Problem) -> Result<RunRecord, SearchError> {
    config.validate()?;
    let space = EditSpace::new(&problem.program);
    if space.statements.is_empty() {
        return Err(SearchError::NothingToEdit);
    }
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut eval = Evaluator::new(problem, config);
    let (generations, front, hill_climb, any_valid) = match config.algorithm {
        Algorithm::Hillclimb => {
            let (trace, best) = hill::hill_climb(config, &space, &mut eval, &mut rng);
            let valid = best.valid;
            (
                Vec::new(),
                final_front(std::slice::from_ref(&best), &config.objectives),
                Some(trace),
                valid,
            )
        }
        alg => {
            let (snaps, last) = match alg {
                Algorithm::Nsga2 => nsga2::run(config, &space, &mut eval, &mut rng),
                Algorithm::Nsga3 => nsga3::run(config, &space, &mut eval, &mut rng),
                _ => spea2::run(config, &space, &mut eval, &mut rng),
            };
            let front = final_front(&last, &config.objectives);
            (snaps, front, None, eval.any_valid())
        }
    };
    let wall_seconds = if config.record_wall_time {
        start.elapsed().as_secs_f64()
    } else {
        0.0
    };
    Ok(RunRecord {
        benchmark: problem.name.clone(),
        config: config.clone(),
        baseline: problem.baseline_samples(config),
        oracles: problem.oracles.clone(),
        generations,
        evaluations_used: eval.used(),
        wall_seconds,
        front,
        no_valid: !any_valid,
        hill_climb,
    })
}

/// Shared generation loop for the population-based algorithms: evaluates the
/// initial population of single random edits, then calls `step` until the
/// generation count or the budget runs out.
pub(crate) fn initial_population(
    config: &SearchConfig,
    space: &EditSpace,
    eval: &mut Evaluator,
    rng: &mut ChaCha8Rng,
) -> Vec<Individual> {
    let patches: Vec<Patch> = (0..config.population_size)
        .map(|_| Patch::new(space.random_edit(rng).into_iter().collect()))
        .collect();
    eval.evaluate(patches)
}
