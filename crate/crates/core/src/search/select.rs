//! Selection helpers shared by the population-based algorithms.

use rand::Rng;
use std::cmp::Ordering;

use super::{Evaluator, Individual, Objective, SearchConfig};
use crate::operators::{crossover, EditSpace};
use crate::pareto::{crowding_distance, fast_nondominated_sort};
use crate::patch::Patch;

/// Objective vectors for sorting. Invalid individuals get, per objective,
/// twice the worst valid value plus one: dominated by every valid member
/// while keeping all arithmetic finite.
pub fn objective_points(pop: &[Individual], objectives: &[Objective]) -> Vec<Vec<f64>> {
    let penalty: Vec<f64> = objectives
        .iter()
        .map(|o| {
            let worst = pop
                .iter()
                .filter(|i| i.valid)
                .map(|i| o.of(&i.summary))
                .fold(0.0, f64::max);
            worst * 2.0 + 1.0
        })
        .collect();
    pop.iter()
        .map(|i| {
            if i.valid {
                objectives.iter().map(|o| o.of(&i.summary)).collect()
            } else {
                penalty.clone()
            }
        })
        .collect()
}

/// Front rank and crowding distance of every individual.
pub(crate) fn rank_and_crowding(points: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    let mut rank = vec![0; points.len()];
    let mut crowd = vec![0.0; points.len()];
    for (r, front) in fast_nondominated_sort(points).iter().enumerate() {
        for (&i, d) in front.iter().zip(crowding_distance(points, front)) {
            rank[i] = r;
            crowd[i] = d;
        }
    }
    (rank, crowd)
}

/// Binary tournament over indices `0..n`. `better(a, b)` says which of
/// two contestants wins; `Equal` is settled by a coin flip.
pub fn tournament<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
    better: impl Fn(usize, usize) -> Ordering,
) -> usize {
    let a = rng.random_range(0..n);
    let b = rng.random_range(0..n);
    match better(a, b) {
        Ordering::Less => a,
        Ordering::Greater => b,
        Ordering::Equal => {
            if rng.random_bool(0.5) {
                a
            } else {
                b
            }
        }
    }
}

/// Draw attempts per offspring slot before settling for already measured
/// patches.
const ATTEMPTS_PER_SLOT: usize = 20;

/// Offspring for one generation. Each draw: tournament pick, optional
/// crossover with a second pick, optional mutation. Draws whose patch was
/// already measured (or drawn earlier in this batch) are set aside, so the
/// batch is made of fresh patches whenever the operators can produce them;
/// set-aside draws fill any remaining slots.
pub(crate) fn offspring<R: Rng + ?Sized>(
    config: &SearchConfig,
    space: &EditSpace,
    parents: &[Individual],
    eval: &Evaluator,
    rng: &mut R,
    pick: impl Fn(&mut R) -> usize,
) -> Vec<Patch> {
    let n = config.population_size;
    let mut fresh: Vec<Patch> = Vec::with_capacity(n);
    let mut stale: Vec<Patch> = Vec::new();
    let mut attempts = 0;
    while fresh.len() < n && attempts < n * ATTEMPTS_PER_SLOT {
        attempts += 1;
        let first = pick(rng);
        let mut child = if rng.random_bool(config.crossover_rate) {
            let second = pick(rng);
            crossover(&parents[first].patch, &parents[second].patch)
        } else {
            parents[first].patch.clone()
        };
        if rng.random_bool(config.mutation_rate) {
            child = space.mutate(&child, rng);
        }
        if eval.is_cached(&child) || fresh.contains(&child) {
            stale.push(child);
        } else {
            fresh.push(child);
        }
    }
    let short = n - fresh.len();
    fresh.extend(stale.into_iter().take(short));
    fresh
}

/// Removes repeated patches, keeping first occurrences. If fewer than `n`
/// remain, the earliest duplicates are put back so the size holds.
pub(crate) fn distinct(pool: Vec<Individual>, n: usize) -> Vec<Individual> {
    let mut unique: Vec<Individual> = Vec::with_capacity(pool.len());
    let mut dups = Vec::new();
    for ind in pool {
        if unique.iter().any(|u| u.patch == ind.patch) {
            dups.push(ind);
        } else {
            unique.push(ind);
        }
    }
    let short = n.saturating_sub(unique.len());
    unique.extend(dups.into_iter().take(short));
    unique
}

pub(crate) fn lower_first(a: f64, b: f64) -> Ordering {
    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
}
