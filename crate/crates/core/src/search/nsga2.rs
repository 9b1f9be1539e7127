use rand_chacha::ChaCha8Rng;

use super::select::{
    distinct, lower_first, objective_points, offspring, rank_and_crowding, tournament,
};
use super::{entries, initial_population, Evaluator, Individual, SearchConfig, Snapshot};
use crate::operators::EditSpace;
use crate::pareto::{crowding_distance, fast_nondominated_sort};

pub(crate) fn run(
    config: &SearchConfig,
    space: &EditSpace,
    eval: &mut Evaluator,
    rng: &mut ChaCha8Rng,
) -> (Vec<Snapshot>, Vec<Individual>) {
    let mut pop = initial_population(config, space, eval, rng);
    let mut snaps = vec![Snapshot {
        generation: 0,
        evaluations_used: eval.used(),
        population: entries(&pop),
        archive: None,
    }];
    for generation in 1..config.generations {
        if eval.exhausted() {
            break;
        }
        pop = step(config, space, &pop, eval, rng);
        snaps.push(Snapshot {
            generation,
            evaluations_used: eval.used(),
            population: entries(&pop),
            archive: None,
        });
    }
    (snaps, pop)
}

/// One generation: variation, evaluation, then elitist selection of
/// `parents.len()` survivors from parents and offspring.
pub(crate) fn step(
    config: &SearchConfig,
    space: &EditSpace,
    parents: &[Individual],
    eval: &mut Evaluator,
    rng: &mut ChaCha8Rng,
) -> Vec<Individual> {
    let (rank, crowd) = rank_and_crowding(&objective_points(parents, &config.objectives));
    let children = offspring(config, space, parents, eval, rng, |rng| {
        tournament(parents.len(), rng, |a, b| {
            rank[a].cmp(&rank[b]).then(lower_first(crowd[b], crowd[a]))
        })
    });
    let mut pool = parents.to_vec();
    pool.extend(eval.evaluate(children));
    survivors(&distinct(pool, parents.len()), parents.len(), config)
}

/// Fills by whole fronts, then the least crowded of the split front.
pub(crate) fn survivors(pool: &[Individual], n: usize, config: &SearchConfig) -> Vec<Individual> {
    let points = objective_points(pool, &config.objectives);
    let mut out = Vec::with_capacity(n);
    for front in fast_nondominated_sort(&points) {
        if out.len() + front.len() <= n {
            out.extend(front.iter().map(|&i| pool[i].clone()));
            continue;
        }
        let dist = crowding_distance(&points, &front);
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| lower_first(dist[b], dist[a]));
        let room = n - out.len();
        out.extend(order[..room].iter().map(|&k| pool[front[k]].clone()));
        break;
    }
    out
}
