use rand_chacha::ChaCha8Rng;

use super::select::{distinct, lower_first, objective_points, offspring, tournament};
use super::{entries, initial_population, Evaluator, Individual, SearchConfig, Snapshot};
use crate::operators::EditSpace;
use crate::pareto::dominates;

pub(crate) fn run(
    config: &SearchConfig,
    space: &EditSpace,
    eval: &mut Evaluator,
    rng: &mut ChaCha8Rng,
) -> (Vec<Snapshot>, Vec<Individual>) {
    let n = config.population_size;
    let mut pop = initial_population(config, space, eval, rng);
    let mut archive: Vec<Individual> = Vec::new();
    let mut snaps = vec![Snapshot {
        generation: 0,
        evaluations_used: eval.used(),
        population: entries(&pop),
        archive: Some(Vec::new()),
    }];
    for generation in 1..config.generations {
        if eval.exhausted() {
            break;
        }
        archive = next_archive(&pop, &archive, n, config);
        let fit = fitness(&objective_points(&archive, &config.objectives));
        let children = offspring(config, space, &archive, eval, rng, |rng| {
            tournament(archive.len(), rng, |a, b| lower_first(fit[a], fit[b]))
        });
        pop = eval.evaluate(children);
        snaps.push(Snapshot {
            generation,
            evaluations_used: eval.used(),
            population: entries(&pop),
            archive: Some(entries(&archive)),
        });
    }
    (snaps, next_archive(&pop, &archive, n, config))
}

/// Non-dominated members of population and archive, filled up with the
/// next best by fitness or truncated by nearest-neighbour removal.
pub(crate) fn next_archive(
    pop: &[Individual],
    archive: &[Individual],
    n: usize,
    config: &SearchConfig,
) -> Vec<Individual> {
    let union = distinct(pop.iter().chain(archive).cloned().collect(), n);
    let points = objective_points(&union, &config.objectives);
    let keep = select_indices(&points, n);
    keep.into_iter().map(|i| union[i].clone()).collect()
}

pub(crate) fn select_indices(points: &[Vec<f64>], n: usize) -> Vec<usize> {
    let fit = fitness(points);
    let mut keep: Vec<usize> = (0..points.len()).filter(|&i| fit[i] < 1.0).collect();
    if keep.len() < n {
        let mut rest: Vec<usize> = (0..points.len()).filter(|&i| fit[i] >= 1.0).collect();
        rest.sort_by(|&a, &b| lower_first(fit[a], fit[b]));
        keep.extend(rest.into_iter().take(n - keep.len()));
    } else {
        let scaled = scale(points);
        while keep.len() > n {
            let neighbour_dists = |i: usize| {
                let mut d: Vec<f64> = keep
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| distance(&scaled[i], &scaled[j]))
                    .collect();
                d.sort_by(|a, b| lower_first(*a, *b));
                d
            };
            let mut worst = 0;
            let mut worst_d = neighbour_dists(keep[0]);
            for pos in 1..keep.len() {
                let d = neighbour_dists(keep[pos]);
                if d.partial_cmp(&worst_d) == Some(std::cmp::Ordering::Less) {
                    worst = pos;
                    worst_d = d;
                }
            }
            keep.remove(worst);
        }
    }
    keep
}

/// Raw fitness (sum of the strengths of an individual's dominators) plus
/// density `1 / (sigma_k + 2)`; below 1 exactly for non-dominated members.
pub(crate) fn fitness(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points.len();
    let dom: Vec<Vec<bool>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| dominates(&points[i], &points[j]).unwrap_or(false))
                .collect()
        })
        .collect();
    let strength: Vec<usize> = (0..n)
        .map(|i| dom[i].iter().filter(|&&d| d).count())
        .collect();
    let raw: Vec<usize> = (0..n)
        .map(|i| (0..n).filter(|&j| dom[j][i]).map(|j| strength[j]).sum())
        .collect();
    let scaled = scale(points);
    let k = ((n as f64).sqrt().floor() as usize).max(1);
    (0..n)
        .map(|i| {
            let mut d: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| distance(&scaled[i], &scaled[j]))
                .collect();
            d.sort_by(|a, b| lower_first(*a, *b));
            let sigma = if d.is_empty() {
                0.0
            } else {
                d[(k - 1).min(d.len() - 1)]
            };
            raw[i] as f64 + 1.0 / (sigma + 2.0)
        })
        .collect()
}

/// Objectives rescaled by their range so no objective dominates distances.
fn scale(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let Some(first) = points.first() else {
        return Vec::new();
    };
    let m = first.len();
    let lo: Vec<f64> = (0..m)
        .map(|j| points.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min))
        .collect();
    let hi: Vec<f64> = (0..m)
        .map(|j| {
            points
                .iter()
                .map(|p| p[j])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    points
        .iter()
        .map(|p| {
            (0..m)
                .map(|j| {
                    if hi[j] > lo[j] {
                        (p[j] - lo[j]) / (hi[j] - lo[j])
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}
